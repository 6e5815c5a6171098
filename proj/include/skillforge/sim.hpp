#pragma once

#include <Eigen/Geometry>

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "skillforge/geometry.hpp"

namespace skillforge {

using Quat = Eigen::Quaterniond;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Hand pose: grasp-center position in world plus orientation.
struct Pose {
    Vec3 p = Vec3::Zero();
    Quat q = Quat::Identity();
};

struct Surface {
    std::string name;
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();   // points into free space
    Vec3 tangent = Vec3::UnitX();  // in-plane axis for the extent; second axis is normal x tangent
    double half_u = kInf;
    double half_v = kInf;
    double depth = kInf;  // points deeper than this are behind a thin surface and ignored
    double k = 5000.0;
    double d = 50.0;
};

struct HandObject {
    Vec3 position = Vec3::Zero();  // body origin in world
    Quat orientation = Quat::Identity();
    std::vector<Vec3> samples;     // body frame
    Vec3 grasp_center = Vec3::Zero();  // body frame
    Vec3 half_extents = Vec3::Constant(0.03);

    static HandObject box(const Vec3& half, const Vec3& position, const Quat& orientation = Quat::Identity());
    Vec3 world(const Vec3& body) const { return position + orientation * body; }
};

struct SimConfig {
    double step_size = 0.005;
    double dt = 0.05;
    double normal_noise_deg = 0.0;
    double f_step = 1.0;
    double penetration_cap = 0.05;
    double touch_tol = 1e-4;
    std::uint64_t seed = 0;
    double gravity = 0.0;  // fixed
};

// Ideal revolute joint seen from the grasp: the grasp center is tethered to a
// circle around the axis by a stiff spring (radial and axial), free along the arc.
struct Hinge {
    Vec3 center = Vec3::Zero();
    Vec3 axis = Vec3::UnitZ();
    double radius = 0.5;
    double axial_ref = 0.0;
    double k = 5000.0;
    double d = 50.0;
    double pin_half_height = 0.3;
};

// Optional drawer latch bump: conservative force profile along an axis.
struct Detent {
    Vec3 origin = Vec3::Zero();
    Vec3 axis = Vec3::UnitX();
    double start = 0.0;
    double width = 0.01;
    double peak = 5.0;
};

struct Scene {
    std::string name;
    std::vector<Surface> surfaces;
    HandObject object;
    SimConfig config;
    std::optional<Hinge> hinge;
    std::optional<Detent> detent;
};

struct ForceReading {
    Vec3 f = Vec3::Zero();
    Vec3 f0 = Vec3::Zero();
    Vec3 f_n = Vec3::Zero();
    int f_desc = 0;
};

struct ContactResult {
    Vec3 f = Vec3::Zero();
    std::vector<bool> flags;
};

struct Sensed {
    Vec3 f_n = Vec3::Zero();
    int f_desc = 0;
};

ContactResult contact_force(const HandObject& object, const Vec3& velocity, const std::vector<Surface>& surfaces,
                            double penetration_cap = 0.05);

Sensed sense(const Vec3& f, const Vec3& f0, double f_step);

Scene randomize_scene(Scene scene, double noise_deg, std::mt19937_64& rng);

class Env {
public:
    explicit Env(Scene scene);

    const Scene& scene() const { return scene_; }
    ForceReading reading() const;
    // Translate the grasp center by dp and rotate the object by dq about it.
    ForceReading step(const Vec3& dp, const Quat& dq = Quat::Identity());
    void set_baseline() { f0_ = f_; }
    const Vec3& baseline() const { return f0_; }
    const Vec3& force() const { return f_; }

    Pose hand_pose() const;
    void set_hand_pose(const Pose& pose);
    Vec3 grasp_world() const { return scene_.object.world(scene_.object.grasp_center); }

    ContactSet contact_set() const;
    bool in_contact() const;
    double time() const { return time_; }
    double max_penetration() const { return max_pen_; }

    bool attached = true;

private:
    void recompute(const Vec3& velocity);

    Scene scene_;
    Vec3 f_ = Vec3::Zero();
    Vec3 f0_ = Vec3::Zero();
    std::vector<bool> flags_;
    double time_ = 0.0;
    double max_pen_ = 0.0;
};

struct Preset {
    Scene scene;
    ContactSet contacts;
    StateLabel intended = StateLabel::NC;
};

// tabletop, drawer, door, whiteboard, walls-gap, plus the variants
// drawer-closed (OP) and door-ajar (RV).
Preset preset(std::string_view name);
std::vector<std::string> preset_names();

Quat rotation_between(const Vec3& from, const Vec3& to);
Quat axis_angle(const Vec3& axis, double angle);

}  // namespace skillforge
