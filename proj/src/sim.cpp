#include "skillforge/sim.hpp"

#include <cmath>
#include <numbers>

namespace skillforge {

HandObject HandObject::box(const Vec3& half, const Vec3& position, const Quat& orientation) {
    HandObject o;
    o.position = position;
    o.orientation = orientation;
    o.half_extents = half;
    for (int sx = -1; sx <= 1; sx += 2)
        for (int sy = -1; sy <= 1; sy += 2)
            for (int sz = -1; sz <= 1; sz += 2) o.samples.emplace_back(sx * half.x(), sy * half.y(), sz * half.z());
    for (int axis = 0; axis < 3; ++axis) {
        for (int s = -1; s <= 1; s += 2) {
            Vec3 c = Vec3::Zero();
            c(axis) = s * half(axis);
            o.samples.push_back(c);
        }
    }
    return o;
}

namespace {

struct Penetration {
    double depth;
    bool inside;
};

// Penetration of a world point into a surface, honoring extent and thickness.
Penetration penetration(const Surface& s, const Vec3& p) {
    const Vec3 rel = p - s.point;
    const double delta = -rel.dot(s.normal);
    const Vec3 v_axis = s.normal.cross(s.tangent);
    const bool in_extent = std::abs(rel.dot(s.tangent)) <= s.half_u && std::abs(rel.dot(v_axis)) <= s.half_v;
    return {delta, in_extent && delta <= s.depth};
}

}  // namespace

ContactResult contact_force(const HandObject& object, const Vec3& velocity, const std::vector<Surface>& surfaces,
                            double penetration_cap) {
    ContactResult out;
    out.flags.assign(surfaces.size(), false);
    for (std::size_t j = 0; j < surfaces.size(); ++j) {
        const auto& s = surfaces[j];
        for (const auto& b : object.samples) {
            const auto pen = penetration(s, object.world(b));
            if (!pen.inside || pen.depth <= 0) continue;
            if (pen.depth > penetration_cap)
                throw SimulationBlowup("penetration " + std::to_string(pen.depth) + " m into surface '" + s.name +
                                       "' exceeds cap");
            const double approach = std::max(0.0, -velocity.dot(s.normal));
            out.f += (s.k * pen.depth + s.d * approach) * s.normal;
            out.flags[j] = true;
        }
    }
    return out;
}

Sensed sense(const Vec3& f, const Vec3& f0, double f_step) {
    if (!(f_step > 0)) throw InputError("f_step must be positive");
    Sensed out;
    const Vec3 df = f - f0;
    const double mag = df.norm();
    if (mag > 0) out.f_n = df / mag;
    out.f_desc = static_cast<int>(std::floor(mag / f_step));
    return out;
}

Quat rotation_between(const Vec3& from, const Vec3& to) { return Quat::FromTwoVectors(from, to).normalized(); }

Quat axis_angle(const Vec3& axis, double angle) { return Quat(Eigen::AngleAxisd(angle, axis.normalized())); }

Scene randomize_scene(Scene scene, double noise_deg, std::mt19937_64& rng) {
    if (noise_deg < 0) throw InputError("noise must be non-negative");
    if (noise_deg == 0) return scene;
    std::normal_distribution<double> gauss(0.0, noise_deg * std::numbers::pi / 180.0);
    std::uniform_real_distribution<double> uni(0.0, 2.0 * std::numbers::pi);
    for (auto& s : scene.surfaces) {
        const double angle = std::abs(gauss(rng));
        const double phi = uni(rng);
        const Vec3 v_axis = s.normal.cross(s.tangent);
        const Vec3 axis = std::cos(phi) * s.tangent + std::sin(phi) * v_axis;
        const Quat r = axis_angle(axis, angle);
        s.normal = (r * s.normal).normalized();
        s.tangent = (r * s.tangent).normalized();
    }
    return scene;
}

// ---------------------------------------------------------------------------

Env::Env(Scene scene) : scene_(std::move(scene)) {
    if (scene_.object.samples.empty()) throw InputError("object needs at least one sample point");
    if (!(scene_.config.step_size > 0)) throw InputError("step_size must be positive");
    scene_.config.gravity = 0.0;
    recompute(Vec3::Zero());
    f0_ = Vec3::Zero();
}

void Env::recompute(const Vec3& velocity) {
    const auto& cfg = scene_.config;
    auto res = contact_force(scene_.object, velocity, scene_.surfaces, cfg.penetration_cap);
    f_ = res.f;
    flags_ = std::move(res.flags);

    max_pen_ = 0.0;
    for (const auto& s : scene_.surfaces)
        for (const auto& b : scene_.object.samples) {
            const auto pen = penetration(s, scene_.object.world(b));
            if (pen.inside) max_pen_ = std::max(max_pen_, pen.depth);
        }

    const Vec3 g = grasp_world();
    if (scene_.hinge) {
        const auto& h = *scene_.hinge;
        const Vec3 rel = g - h.center;
        const double axial = rel.dot(h.axis);
        const Vec3 radial = rel - axial * h.axis;
        const double r = radial.norm();
        auto tether = [&](double dev, const Vec3& dir) {
            if (std::abs(dev) > cfg.penetration_cap)
                throw SimulationBlowup("hinge deviation " + std::to_string(dev) + " m exceeds cap");
            const double sgn = dev > 0 ? 1.0 : (dev < 0 ? -1.0 : 0.0);
            const double approach = std::max(0.0, sgn * velocity.dot(dir));
            f_ -= sgn * (h.k * std::abs(dev) + h.d * approach) * dir;
        };
        if (r > 1e-12) tether(r - h.radius, radial / r);
        tether(axial - h.axial_ref, h.axis);
    }
    if (scene_.detent) {
        const auto& dt = *scene_.detent;
        const double x = (g - dt.origin).dot(dt.axis) - dt.start;
        if (x >= 0 && x <= dt.width) f_ -= dt.peak * std::sin(2.0 * std::numbers::pi * x / dt.width) * dt.axis;
    }
}

ForceReading Env::reading() const {
    ForceReading r;
    r.f = f_;
    r.f0 = f0_;
    const auto s = sense(f_, f0_, scene_.config.f_step);
    r.f_n = s.f_n;
    r.f_desc = s.f_desc;
    return r;
}

ForceReading Env::step(const Vec3& dp, const Quat& dq) {
    if (dp.norm() > 2.0 * scene_.config.step_size + 1e-12)
        throw ContractViolation("step displacement exceeds twice the step size");
    auto& o = scene_.object;
    const Vec3 g = grasp_world() + dp;
    o.orientation = (dq * o.orientation).normalized();
    o.position = g - o.orientation * o.grasp_center;
    time_ += scene_.config.dt;
    recompute(dp / scene_.config.dt);
    return reading();
}

Pose Env::hand_pose() const { return {grasp_world(), scene_.object.orientation}; }

void Env::set_hand_pose(const Pose& pose) {
    auto& o = scene_.object;
    o.orientation = pose.q.normalized();
    o.position = pose.p - o.orientation * o.grasp_center;
    recompute(Vec3::Zero());
}

bool Env::in_contact() const {
    for (bool b : flags_)
        if (b) return true;
    return false;
}

ContactSet Env::contact_set() const {
    ContactSet set;
    const double tol = scene_.config.touch_tol;
    for (const auto& s : scene_.surfaces)
        for (const auto& b : scene_.object.samples) {
            const Vec3 p = scene_.object.world(b);
            const auto pen = penetration(s, p);
            if (pen.inside && pen.depth > -tol) set.contacts.push_back({p, s.normal});
        }
    if (scene_.hinge) {
        const auto& h = *scene_.hinge;
        set.kind = MotionKind::Rotation;
        set.center = h.center;
        Vec3 e1 = h.axis.unitOrthogonal();
        Vec3 e2 = h.axis.cross(e1);
        for (double sgn : {-1.0, 1.0}) {
            const Vec3 pin = h.center + sgn * h.pin_half_height * h.axis;
            for (const Vec3& n : {e1, Vec3(-e1), e2, Vec3(-e2)}) set.contacts.push_back({pin, n});
        }
    }
    return set;
}

// ---------------------------------------------------------------------------
// Presets

namespace {

Surface plane(std::string name, Vec3 point, Vec3 normal, Vec3 tangent, double hu = kInf, double hv = kInf,
              double depth = kInf) {
    Surface s;
    s.name = std::move(name);
    s.point = point;
    s.normal = normal.normalized();
    s.tangent = tangent.normalized();
    s.half_u = hu;
    s.half_v = hv;
    s.depth = depth;
    return s;
}

Scene tabletop() {
    Scene sc;
    sc.name = "tabletop";
    sc.surfaces.push_back(plane("table", Vec3::Zero(), Vec3::UnitZ(), Vec3::UnitX()));
    sc.surfaces.push_back(plane("plate", Vec3(0.3, 0.0, 0.012), Vec3::UnitZ(), Vec3::UnitX(), 0.08, 0.08, 0.012));
    sc.surfaces.push_back(plane("shelf", Vec3(0.0, 0.35, 0.25), Vec3::UnitZ(), Vec3::UnitX(), 0.1, 0.1, 0.02));
    sc.object = HandObject::box(Vec3::Constant(0.03), Vec3(0, 0, 0.03));
    return sc;
}

// Drawer body rides on four narrow rails (one per side) so each rail touches
// only the matching face-center sample; the back wall closes the slot.
Scene drawer(double opening) {
    Scene sc;
    sc.name = opening > 0 ? "drawer" : "drawer-closed";
    const Vec3 half(0.15, 0.1, 0.05);
    const double mid = 0.15, len = 0.3, rail = 0.01;
    sc.surfaces.push_back(plane("rail+y", Vec3(mid, half.y(), 0), -Vec3::UnitY(), Vec3::UnitX(), len, rail));
    sc.surfaces.push_back(plane("rail-y", Vec3(mid, -half.y(), 0), Vec3::UnitY(), Vec3::UnitX(), len, rail));
    sc.surfaces.push_back(plane("rail+z", Vec3(mid, 0, half.z()), -Vec3::UnitZ(), Vec3::UnitX(), len, rail));
    sc.surfaces.push_back(plane("rail-z", Vec3(mid, 0, -half.z()), Vec3::UnitZ(), Vec3::UnitX(), len, rail));
    sc.surfaces.push_back(plane("back", Vec3(-half.x(), 0, 0), Vec3::UnitX(), Vec3::UnitY(), 0.12, 0.07, 0.05));
    sc.object = HandObject::box(half, Vec3(opening, 0, 0));
    return sc;
}

Scene door(double angle) {
    Scene sc;
    sc.name = angle > 0 ? "door-ajar" : "door";
    Hinge h;
    sc.hinge = h;
    const double hh = 0.02;
    sc.surfaces.push_back(plane("stop", Vec3(h.radius, -hh, 0), Vec3::UnitY(), Vec3::UnitX(), 0.05, 0.05, 0.02));
    const Quat q = axis_angle(Vec3::UnitZ(), angle);
    sc.object = HandObject::box(Vec3::Constant(hh), q * Vec3(h.radius, 0, 0), q);
    return sc;
}

Scene whiteboard() {
    Scene sc;
    sc.name = "whiteboard";
    sc.surfaces.push_back(plane("board", Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY()));
    const Vec3 half(0.02, 0.05, 0.03);
    // Eraser starts pressed at ~10 N: five face samples share the load.
    const double pre = 10.0 / (5 * 5000.0);
    sc.object = HandObject::box(half, Vec3(half.x() - pre, 0, 0));
    return sc;
}

Scene walls_gap() {
    Scene sc;
    sc.name = "walls-gap";
    const Vec3 half(0.03, 0.05, 0.03);
    sc.surfaces.push_back(plane("wall+y", Vec3(0, half.y(), 0), -Vec3::UnitY(), Vec3::UnitX(), 0.15));
    sc.surfaces.push_back(plane("wall-y", Vec3(0, -half.y(), 0), Vec3::UnitY(), Vec3::UnitX(), 0.15));
    sc.object = HandObject::box(half, Vec3(0, 0, 0.2));
    return sc;
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"tabletop", "drawer", "drawer-closed", "door", "door-ajar", "whiteboard", "walls-gap"};
}

Preset preset(std::string_view name) {
    Preset p;
    if (name == "tabletop") {
        p.scene = tabletop();
        p.intended = StateLabel::PC1;
    } else if (name == "drawer") {
        p.scene = drawer(0.1);
        p.intended = StateLabel::PR;
    } else if (name == "drawer-closed") {
        p.scene = drawer(0.0);
        p.intended = StateLabel::OP;
    } else if (name == "door") {
        p.scene = door(0.0);
        p.intended = StateLabel::OR;
    } else if (name == "door-ajar") {
        p.scene = door(20.0 * std::numbers::pi / 180.0);
        p.intended = StateLabel::RV;
    } else if (name == "whiteboard") {
        p.scene = whiteboard();
        p.intended = StateLabel::PC1;
    } else if (name == "walls-gap") {
        p.scene = walls_gap();
        p.intended = StateLabel::TR;
    } else {
        throw InputError("unknown preset: " + std::string(name));
    }
    p.contacts = Env(p.scene).contact_set();
    return p;
}

}  // namespace skillforge
