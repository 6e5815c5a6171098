#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "skillforge/geometry.hpp"

namespace testsupport {

using skillforge::ContactSet;
using skillforge::Vec3;

inline constexpr double kDeg = std::numbers::pi / 180.0;

inline Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    for (;;) {
        Vec3 v(g(rng), g(rng), g(rng));
        if (v.norm() > 1e-6) return v.normalized();
    }
}

inline double angle(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }

// Normals at least min_deg apart from each other and from each other's
// antipodes, except for deliberately antiparallel pairs.
inline std::vector<Vec3> separated_normals(std::mt19937_64& rng, int count, int antiparallel_pairs,
                                           double min_deg = 5.0) {
    std::vector<Vec3> out;
    auto ok = [&](const Vec3& v) {
        for (const auto& u : out) {
            const double a = angle(u, v);
            if (a < min_deg * kDeg || a > std::numbers::pi - min_deg * kDeg) return false;
        }
        return true;
    };
    while (static_cast<int>(out.size()) < count) {
        const Vec3 v = random_unit(rng);
        if (!ok(v)) continue;
        out.push_back(v);
        if (antiparallel_pairs > 0 && static_cast<int>(out.size()) < count) {
            out.push_back(-v);
            --antiparallel_pairs;
        }
    }
    return out;
}

inline ContactSet translation_set(const std::vector<Vec3>& normals, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    ContactSet s;
    for (const auto& n : normals) s.contacts.push_back({Vec3(u(rng), u(rng), u(rng)), n});
    return s;
}

// Rotation set about `center` whose effective normals are exactly `normals`.
inline ContactSet rotation_set(const std::vector<Vec3>& normals, const Vec3& center, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> lever(0.05, 0.5);
    ContactSet s;
    s.kind = skillforge::MotionKind::Rotation;
    s.center = center;
    for (const auto& m : normals) {
        const Vec3 n = (random_unit(rng).cross(m)).normalized();
        // (p - c) x n = r m with p - c = r (n x m)
        s.contacts.push_back({center + lever(rng) * n.cross(m), n});
    }
    return s;
}

}  // namespace testsupport
