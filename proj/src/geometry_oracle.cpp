// Reference classifier by direction enumeration. Deliberately self-contained:
// it must not call into feasible_cone() or its helpers.
#include <array>
#include <cmath>
#include <numbers>

#include "skillforge/geometry.hpp"

namespace skillforge {

namespace {

constexpr double kSlack = 1e-9;       // feasibility slack for a candidate direction
constexpr double kAmbiguous = 1e-6;   // candidates between -kAmbiguous and -kSlack are suspicious

std::vector<Vec3> sphere_grid(int total) {
    // Fibonacci spiral plus antipodes so the grid is symmetric under d -> -d.
    const int half = (total + 1) / 2;
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(2 * half));
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < half; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / half;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * i;
        Vec3 d(r * std::cos(phi), r * std::sin(phi), z);
        pts.push_back(d);
        pts.push_back(-d);
    }
    return pts;
}

// Rank of a set of unit directions, with a flag for singular values in the grey zone.
int direction_rank(const std::vector<Vec3>& dirs, bool& grey) {
    if (dirs.empty()) return 0;
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (const auto& d : dirs) scatter += d * d.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(scatter);
    const auto ev = es.eigenvalues();
    const double top = ev.maxCoeff();
    int r = 0;
    for (int i = 0; i < 3; ++i) {
        const double rel = ev(i) / top;
        // Roundoff from in-plane candidates sits near 1e-18; a genuine extreme ray
        // at least a few degrees off contributes well above 1e-8.
        if (rel > 1e-11) ++r;
        if (rel > 1e-15 && rel < 1e-8) grey = true;
    }
    return r;
}

}  // namespace

Classification oracle_classify_sampled(const ContactSet& set, int grid_size) {
    if (grid_size < 1000) throw InputError("oracle grid must hold at least 1000 directions");

    std::vector<Vec3> normals;
    Classification out;
    for (const auto& c : set.contacts) {
        if (set.kind == MotionKind::Rotation) {
            if (!set.center) throw InputError("rotation classification requires a center");
            const Vec3 arm = c.p - *set.center;
            const Vec3 m = arm.cross(c.n);
            if (m.norm() < 1e-12) {
                ++out.dropped_contacts;
                continue;
            }
            normals.push_back(m.normalized());
        } else {
            normals.push_back(c.n.normalized());
        }
    }

    std::vector<Vec3> candidates = sphere_grid(grid_size);
    // Arrangement vertices: every extreme ray of a 3-D polyhedral cone lies on the
    // intersection of two constraint planes, so grid resolution never hides a
    // thin feasible region.
    const std::array<Vec3, 3> basis{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
    auto add_pair = [&](const Vec3& v) {
        const double len = v.norm();
        if (len < 1e-12) return;
        candidates.push_back(v / len);
        candidates.push_back(-v / len);
    };
    for (std::size_t i = 0; i < normals.size(); ++i) {
        add_pair(normals[i]);
        for (const auto& e : basis) add_pair(normals[i].cross(e));
        for (std::size_t j = i + 1; j < normals.size(); ++j) add_pair(normals[i].cross(normals[j]));
    }

    auto worst_slack = [&](const Vec3& d) {
        double w = std::numeric_limits<double>::infinity();
        for (const auto& m : normals) w = std::min(w, m.dot(d));
        return w;
    };

    std::vector<Vec3> feasible;
    std::vector<Vec3> symmetric;
    bool grey = false;
    for (const auto& d : candidates) {
        const double w = normals.empty() ? 1.0 : worst_slack(d);
        if (w < -kSlack && w > -kAmbiguous) grey = true;
        if (w >= -kSlack) {
            feasible.push_back(d);
            const double wb = normals.empty() ? 1.0 : worst_slack(-d);
            if (wb >= -kSlack) symmetric.push_back(d);
        }
    }

    const int lineality = direction_rank(symmetric, grey);
    const int span = direction_rank(feasible, grey);
    out.indeterminate = grey;
    out.cone.normals = normals;
    out.cone.lineality_dim = lineality;
    out.cone.span_dim = span;
    out.profile = {lineality, span - lineality, 3 - span};

    // Own copy of the profile -> label table.
    struct Row {
        DofProfile p;
        StateLabel t, r;
    };
    static const std::array<Row, 10> table{{
        {{3, 0, 0}, StateLabel::NC, StateLabel::NR},  {{2, 1, 0}, StateLabel::PC1, StateLabel::RT1},
        {{2, 0, 1}, StateLabel::TR, StateLabel::SP},  {{1, 2, 0}, StateLabel::PC2, StateLabel::RT2},
        {{1, 1, 1}, StateLabel::OT1, StateLabel::OS1}, {{1, 0, 2}, StateLabel::PR, StateLabel::RV},
        {{0, 3, 0}, StateLabel::PCN, StateLabel::RTN}, {{0, 2, 1}, StateLabel::OT2, StateLabel::OS2},
        {{0, 1, 2}, StateLabel::OP, StateLabel::OR},  {{0, 0, 3}, StateLabel::FT, StateLabel::FR},
    }};
    bool found = false;
    for (const auto& row : table) {
        if (row.p == out.profile) {
            out.label = set.kind == MotionKind::Rotation ? row.r : row.t;
            found = true;
        }
    }
    if (!found) out.indeterminate = true;
    return out;
}

}  // namespace skillforge
