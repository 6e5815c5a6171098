#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skillforge/errors.hpp"

namespace skillforge {

using Vec3 = Eigen::Vector3d;

// Normals closer than this (radians) are treated as duplicates.
inline constexpr double kAngularTol = 1e-6;
// Boundary slack for direction feasibility (m·d >= -tol counts as feasible).
inline constexpr double kFeasibilityTol = 1e-9;

struct ContactPoint {
    Vec3 p = Vec3::Zero();
    Vec3 n = Vec3::UnitZ();
};

enum class MotionKind { Translation, Rotation };

struct MotionSpec {
    MotionKind kind = MotionKind::Translation;
    Vec3 axis = Vec3::UnitZ();
    Vec3 center = Vec3::Zero();
    double pitch = 0.0;
};

struct ContactSet {
    std::vector<ContactPoint> contacts;
    MotionKind kind = MotionKind::Translation;
    std::optional<Vec3> center;
};

struct FeasibleCone {
    std::vector<Vec3> normals;
    int lineality_dim = 3;
    int span_dim = 3;
    int duplicates_removed = 0;
};

struct DofProfile {
    int maintenance = 3;
    int detachment = 0;
    int constraint = 0;
    friend bool operator==(const DofProfile&, const DofProfile&) = default;
};

enum class StateLabel {
    NC, PC1, PC2, PCN, TR, OT1, OT2, PR, OP, FT,
    NR, RT1, RT2, RTN, SP, OS1, OS2, RV, OR, FR
};

enum class DState { Maintenance, Detachment, Constraint };

struct Classification {
    StateLabel label = StateLabel::NC;
    DofProfile profile;
    FeasibleCone cone;
    int dropped_contacts = 0;  // rotation: contacts with zero lever arm
    bool indeterminate = false;  // only the sampled oracle sets this
};

struct EffectiveNormals {
    std::vector<Vec3> normals;
    int dropped = 0;
};

double screw_lhs(const ContactPoint& contact, const MotionSpec& motion);

EffectiveNormals rotation_effective_normals(const std::vector<ContactPoint>& contacts,
                                            const Vec3& center);

FeasibleCone feasible_cone(const std::vector<Vec3>& normals);

DofProfile dof_profile(const FeasibleCone& cone);

Classification classify(const std::vector<ContactPoint>& contacts, MotionKind kind,
                        const std::optional<Vec3>& center = std::nullopt);
Classification classify(const ContactSet& set);

DState dstate_of_direction(const FeasibleCone& cone, const Vec3& d,
                           double tol = kFeasibilityTol);

// Brute-force reference classifier used by the test suite. Shares no code with
// feasible_cone(): it enumerates directions (sphere grid plus arrangement
// vertices) and reads dimensions off the feasible set directly.
Classification oracle_classify_sampled(const ContactSet& set, int grid_size);

// A minimal contact set realizing the label's table row. Rotational sets are
// built about the origin so that their effective normals are the axis-aligned
// normals of the translational analog.
ContactSet canonical_contact_set(StateLabel label);

// Table lookups.
DofProfile canonical_profile(StateLabel label);
StateLabel label_for(const DofProfile& profile, MotionKind kind);
bool is_rotational(StateLabel label);
std::string_view to_string(StateLabel label);
std::optional<StateLabel> parse_state(std::string_view text);
// Display grouping: PC1/PC2/PCN -> "PC", OT1/OT2 -> "OT", others unchanged.
std::string_view coarse_group(StateLabel label);
std::string_view to_string(DState s);

}  // namespace skillforge
