#include "skillforge/geometry.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace skillforge {

namespace {

void require_unit(const Vec3& v, const char* what) {
    if (!v.allFinite() || std::abs(v.norm() - 1.0) > 1e-9)
        throw InputError(std::string(what) + " must be a unit vector");
}

double angle_between(const Vec3& a, const Vec3& b) {
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

int numeric_rank(const std::vector<Vec3>& rows) {
    if (rows.empty()) return 0;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), 3);
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    int r = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > kAngularTol) ++r;
    return r;
}

// Lawson-Hanson non-negative least squares: argmin |A x - b|, x >= 0.
// Returns the residual norm at the optimum.
double nnls_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    const Eigen::Index n = A.cols();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    const double tol = 1e-13;
    const int max_outer = static_cast<int>(3 * n + 30);

    auto solve_passive = [&](Eigen::VectorXd& z) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < n; ++j)
            if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
        z = Eigen::VectorXd::Zero(n);
        if (idx.empty()) return;
        Eigen::MatrixXd Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) Ap.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
        Eigen::VectorXd zp = Ap.completeOrthogonalDecomposition().solve(b);
        for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zp(static_cast<Eigen::Index>(k));
    };

    for (int outer = 0; outer < max_outer; ++outer) {
        Eigen::VectorXd w = A.transpose() * (b - A * x);
        Eigen::Index best = -1;
        double wmax = tol;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && w(j) > wmax) {
                wmax = w(j);
                best = j;
            }
        }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = true;

        for (int inner = 0; inner < max_outer; ++inner) {
            Eigen::VectorXd z;
            solve_passive(z);
            bool all_positive = true;
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0) all_positive = false;
            if (all_positive) {
                x = z;
                break;
            }
            double alpha = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0) {
                    const double denom = x(j) - z(j);
                    if (denom > 0) alpha = std::min(alpha, x(j) / denom);
                }
            }
            if (!std::isfinite(alpha)) alpha = 0;
            x += alpha * (z - x);
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && x(j) <= tol) {
                    passive[static_cast<std::size_t>(j)] = false;
                    x(j) = 0;
                }
            }
        }
    }
    return (A * x - b).norm();
}

struct Row {
    StateLabel trans;
    StateLabel rot;
    DofProfile profile;
};

constexpr std::array<Row, 10> kTable{{
    {StateLabel::NC, StateLabel::NR, {3, 0, 0}},
    {StateLabel::PC1, StateLabel::RT1, {2, 1, 0}},
    {StateLabel::TR, StateLabel::SP, {2, 0, 1}},
    {StateLabel::PC2, StateLabel::RT2, {1, 2, 0}},
    {StateLabel::OT1, StateLabel::OS1, {1, 1, 1}},
    {StateLabel::PR, StateLabel::RV, {1, 0, 2}},
    {StateLabel::PCN, StateLabel::RTN, {0, 3, 0}},
    {StateLabel::OT2, StateLabel::OS2, {0, 2, 1}},
    {StateLabel::OP, StateLabel::OR, {0, 1, 2}},
    {StateLabel::FT, StateLabel::FR, {0, 0, 3}},
}};

constexpr std::array<std::string_view, 20> kNames{
    "NC", "PC1", "PC2", "PCN", "TR", "OT1", "OT2", "PR", "OP", "FT",
    "NR", "RT1", "RT2", "RTN", "SP", "OS1", "OS2", "RV", "OR", "FR"};

}  // namespace

double screw_lhs(const ContactPoint& contact, const MotionSpec& motion) {
    require_unit(contact.n, "contact normal");
    require_unit(motion.axis, "motion axis");
    if (motion.pitch != 0.0) throw InputError("only zero-pitch motions are supported");
    if (motion.kind == MotionKind::Translation) return contact.n.dot(motion.axis);
    // Pure rotation: translational part of the twist is c x s.
    const Vec3 t = motion.center.cross(motion.axis);
    return contact.n.dot(t) + contact.p.cross(contact.n).dot(motion.axis);
}

EffectiveNormals rotation_effective_normals(const std::vector<ContactPoint>& contacts,
                                            const Vec3& center) {
    if (!center.allFinite()) throw InputError("rotation center must be finite");
    EffectiveNormals out;
    for (const auto& c : contacts) {
        require_unit(c.n, "contact normal");
        const Vec3 m = (c.p - center).cross(c.n);
        const double len = m.norm();
        if (len < 1e-12) {
            ++out.dropped;
            continue;
        }
        out.normals.push_back(m / len);
    }
    return out;
}

FeasibleCone feasible_cone(const std::vector<Vec3>& normals) {
    FeasibleCone cone;
    for (const auto& n : normals) {
        require_unit(n, "half-space normal");
        bool dup = false;
        for (const auto& kept : cone.normals)
            if (angle_between(kept, n) < kAngularTol) dup = true;
        if (dup)
            ++cone.duplicates_removed;
        else
            cone.normals.push_back(n);
    }
    if (cone.normals.empty()) return cone;  // whole space

    cone.lineality_dim = 3 - numeric_rank(cone.normals);

    // Constraint i is an implicit equality iff max m_i.d over cone ∩ unit ball
    // is zero. By conic duality that maximum equals min_{l>=0} |m_i + M^T l|.
    const auto k = static_cast<Eigen::Index>(cone.normals.size());
    Eigen::MatrixXd A(3, k);
    for (Eigen::Index j = 0; j < k; ++j) A.col(j) = -cone.normals[static_cast<std::size_t>(j)];
    std::vector<Vec3> implicit;
    for (const auto& m : cone.normals) {
        if (nnls_residual(A, m) <= kAngularTol) implicit.push_back(m);
    }
    cone.span_dim = 3 - numeric_rank(implicit);
    return cone;
}

DofProfile dof_profile(const FeasibleCone& cone) {
    return {cone.lineality_dim, cone.span_dim - cone.lineality_dim, 3 - cone.span_dim};
}

Classification classify(const std::vector<ContactPoint>& contacts, MotionKind kind,
                        const std::optional<Vec3>& center) {
    Classification out;
    std::vector<Vec3> normals;
    if (kind == MotionKind::Rotation) {
        if (!center) throw InputError("rotation classification requires a center");
        auto eff = rotation_effective_normals(contacts, *center);
        normals = std::move(eff.normals);
        out.dropped_contacts = eff.dropped;
    } else {
        for (const auto& c : contacts) normals.push_back(c.n);
    }
    out.cone = feasible_cone(normals);
    out.profile = dof_profile(out.cone);
    out.label = label_for(out.profile, kind);
    return out;
}

Classification classify(const ContactSet& set) { return classify(set.contacts, set.kind, set.center); }

DState dstate_of_direction(const FeasibleCone& cone, const Vec3& d, double tol) {
    require_unit(d, "direction");
    auto feasible = [&](const Vec3& v) {
        for (const auto& m : cone.normals)
            if (m.dot(v) < -tol) return false;
        return true;
    };
    const bool fwd = feasible(d);
    const bool back = feasible(-d);
    if (fwd && back) return DState::Maintenance;
    if (fwd || back) return DState::Detachment;
    return DState::Constraint;
}

ContactSet canonical_contact_set(StateLabel label) {
    const Vec3 x = Vec3::UnitX(), y = Vec3::UnitY(), z = Vec3::UnitZ();
    std::vector<Vec3> normals;
    switch (label) {
        case StateLabel::NC: case StateLabel::NR: break;
        case StateLabel::PC1: case StateLabel::RT1: normals = {z}; break;
        case StateLabel::TR: case StateLabel::SP: normals = {z, -z}; break;
        case StateLabel::PC2: case StateLabel::RT2: normals = {z, x}; break;
        case StateLabel::OT1: case StateLabel::OS1: normals = {z, -z, x}; break;
        case StateLabel::PR: case StateLabel::RV: normals = {x, -x, y, -y}; break;
        case StateLabel::PCN: case StateLabel::RTN: normals = {x, y, z}; break;
        case StateLabel::OT2: case StateLabel::OS2: normals = {z, -z, x, y}; break;
        case StateLabel::OP: case StateLabel::OR: normals = {x, -x, y, -y, z}; break;
        case StateLabel::FT: case StateLabel::FR: normals = {x, -x, y, -y, z, -z}; break;
    }
    ContactSet set;
    if (!is_rotational(label)) {
        for (const auto& n : normals) set.contacts.push_back({Vec3::Zero(), n});
        return set;
    }
    set.kind = MotionKind::Rotation;
    set.center = Vec3::Zero();
    // p = n x m with n orthogonal to m gives (p - 0) x n = m.
    for (const auto& m : normals) {
        const Vec3 n = m.unitOrthogonal();
        set.contacts.push_back({n.cross(m), n});
    }
    return set;
}

DofProfile canonical_profile(StateLabel label) {
    for (const auto& row : kTable)
        if (row.trans == label || row.rot == label) return row.profile;
    throw InputError("unknown state label");
}

StateLabel label_for(const DofProfile& profile, MotionKind kind) {
    for (const auto& row : kTable)
        if (row.profile == profile) return kind == MotionKind::Rotation ? row.rot : row.trans;
    throw InputError("profile does not match any table row");
}

bool is_rotational(StateLabel label) { return static_cast<int>(label) >= static_cast<int>(StateLabel::NR); }

std::string_view to_string(StateLabel label) { return kNames[static_cast<std::size_t>(label)]; }

std::optional<StateLabel> parse_state(std::string_view text) {
    for (std::size_t i = 0; i < kNames.size(); ++i)
        if (kNames[i] == text) return static_cast<StateLabel>(i);
    return std::nullopt;
}

std::string_view coarse_group(StateLabel label) {
    switch (label) {
        case StateLabel::PC1:
        case StateLabel::PC2:
        case StateLabel::PCN: return "PC";
        case StateLabel::OT1:
        case StateLabel::OT2: return "OT";
        case StateLabel::RT1:
        case StateLabel::RT2:
        case StateLabel::RTN: return "RT";
        case StateLabel::OS1:
        case StateLabel::OS2: return "OS";
        default: return to_string(label);
    }
}

std::string_view to_string(DState s) {
    switch (s) {
        case DState::Maintenance: return "maintenance";
        case DState::Detachment: return "detachment";
        case DState::Constraint: return "constraint";
    }
    return "?";
}

}  // namespace skillforge
