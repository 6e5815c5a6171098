#include "skillforge/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace skillforge {

using nlohmann::json;

bool TaskModel::is_marker() const { return task == "release" || task.rfind("grasp:", 0) == 0; }

namespace {

Vec3 read_vec3(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) throw ParseError(path + ": expected an array of 3 numbers");
    Vec3 v;
    for (int i = 0; i < 3; ++i) {
        if (!j[i].is_number()) throw ParseError(path + "[" + std::to_string(i) + "]: expected a number");
        v(i) = j[i].get<double>();
    }
    if (!v.allFinite()) throw ParseError(path + ": non-finite value");
    return v;
}

std::string read_string(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) return {};
    if (!obj[key].is_string()) throw ParseError(path + "." + key + ": expected a string");
    return obj[key].get<std::string>();
}

}  // namespace

TaskSequence parse_task_sequence(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("$: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("$: expected an object");
    if (!doc.contains("tasks") || !doc["tasks"].is_array()) throw ParseError("$.tasks: expected an array");
    TaskSequence seq;
    if (doc.contains("scene")) {
        if (!doc["scene"].is_string()) throw ParseError("$.scene: expected a string");
        seq.scene = doc["scene"].get<std::string>();
    }
    const auto& tasks = doc["tasks"];
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const std::string path = "$.tasks[" + std::to_string(i) + "]";
        const auto& t = tasks[i];
        if (!t.is_object()) throw ParseError(path + ": expected an object");
        TaskModel m;
        if (!t.contains("task") || !t["task"].is_string()) throw ParseError(path + ".task: expected a string");
        m.task = t["task"].get<std::string>();
        if (!m.is_marker() && !find_skill(m.task)) throw ParseError(path + ".task: unknown task '" + m.task + "'");
        m.actor = read_string(t, "actor", path);
        m.object = read_string(t, "object", path);
        m.edl = read_string(t, "edl", path);
        if (t.contains("edc")) {
            const auto& e = t["edc"];
            if (!e.is_object() || !e.contains("p")) throw ParseError(path + ".edc: expected {\"p\": [...], \"q\": [...]}");
            Pose p;
            p.p = read_vec3(e["p"], path + ".edc.p");
            if (e.contains("q")) {
                const auto& q = e["q"];
                if (!q.is_array() || q.size() != 4) throw ParseError(path + ".edc.q: expected [w, x, y, z]");
                for (int k = 0; k < 4; ++k)
                    if (!q[k].is_number()) throw ParseError(path + ".edc.q[" + std::to_string(k) + "]: expected a number");
                p.q = Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
                if (!(p.q.norm() > 1e-9)) throw ParseError(path + ".edc.q: zero quaternion");
                p.q.normalize();
            }
            m.edc = p;
        }
        if (t.contains("dtd")) {
            const Vec3 d = read_vec3(t["dtd"], path + ".dtd");
            if (std::abs(d.norm() - 1.0) > 1e-6) throw ParseError(path + ".dtd: must be a unit vector");
            m.dtd = d.normalized();
        }
        seq.tasks.push_back(std::move(m));
    }
    return seq;
}

TaskSequence load_task_sequence(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_task_sequence(ss.str());
}

// ---------------------------------------------------------------------------

namespace {

bool has_gap_atom(const RewardProgram& p, Axis a) {
    for (const auto* set : {&p.pre_penalties, &p.post_penalties})
        for (const auto& atom : *set)
            if (atom.kind == AtomKind::FeatureGapAbove && atom.axis == a) return true;
    return false;
}

// Normal of the surface closest to the grasp center (wipe skills press into it).
std::optional<Vec3> nearest_surface_normal(const Scene& scene, const Vec3& g) {
    std::optional<Vec3> best;
    double best_d = kInf;
    for (const auto& s : scene.surfaces) {
        const double d = std::abs((g - s.point).dot(s.normal));
        if (d < best_d) {
            best_d = d;
            best = s.normal;
        }
    }
    return best;
}

}  // namespace

Binding bind_parameters(const TaskModel& model, const Scene& scene, const Pose& start, const BindOptions& options) {
    if (model.is_marker()) throw InputError("markers carry no skill parameters");
    const SkillSpec* spec = find_skill(model.task);
    if (!spec) throw InputError("unknown skill: " + model.task);
    Binding b;
    auto& P = b.params;
    P.thresholds = options.thresholds;
    const Vec3 target = model.edc ? model.edc->p : start.p;
    const Vec3 delta = target - start.p;

    if (is_rotational_skill(*spec)) {
        if (!scene.hinge) throw InputError("skill " + spec->name + " needs a scene with a hinge");
        const auto& h = *scene.hinge;
        const Vec3 axis = h.axis.normalized();
        P.hinge = HingeAxis{h.center, axis};
        auto planar = [&](const Vec3& p) {
            const Vec3 r = p - h.center;
            return Vec3(r - r.dot(axis) * axis);
        };
        const Vec3 r0 = planar(start.p), r1 = planar(target);
        if (r0.norm() < 1e-9) throw InputError("grasp center lies on the hinge axis");
        const Vec3 tangent = axis.cross(r0).normalized();
        const double angle = std::atan2(axis.dot(r0.cross(r1)), r0.dot(r1));
        Vec3 S = model.dtd ? *model.dtd : Vec3((angle < 0 ? -1.0 : 1.0) * tangent);
        S -= S.dot(axis) * axis;
        if (S.norm() < 1e-9) throw InputError("detachment direction is parallel to the hinge axis");
        P.S = S.normalized();
        P.U = axis;
        P.T = P.U.cross(P.S);
        const double sign = P.S.dot(tangent) >= 0 ? 1.0 : -1.0;
        P.goal = {sign * angle, r1.norm() - r0.norm(), (target - start.p).dot(axis)};
        return b;
    }

    Vec3 S;
    if (model.dtd) {
        S = *model.dtd;
    } else if (delta.norm() < 1e-9) {
        // Nothing to do; any frame gives zero goals.
        S = Vec3::UnitX();
        b.warnings.push_back("task " + model.task + " has neither DTD nor a displacement; S taken from world x");
    } else {
        S = delta.normalized();
    }
    Vec3 up = Vec3::UnitZ();
    if (family_of(*spec) == Family::Wipe) {
        const auto n = nearest_surface_normal(scene, start.p);
        if (!n) throw InputError("wipe needs a surface in the scene");
        up = *n;
        S -= S.dot(up) * up;
        if (S.norm() < 1e-9) throw InputError("wipe direction is normal to the surface");
        S.normalize();
        P.surface_normal = up;
    } else if (S.cross(up).norm() < 1e-6) {
        up = Vec3::UnitX();
        b.warnings.push_back("detachment direction is vertical; U taken from world x");
    }
    P.S = S;
    P.U = (up - up.dot(S) * S).normalized();
    P.T = P.U.cross(P.S);
    P.goal = {delta.dot(P.S), delta.dot(P.T), delta.dot(P.U)};

    // Feature coordinates: the aligned edge coincides with the demonstrated
    // end configuration; noise models the visual estimate.
    const RewardProgram program = compose(*spec);
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> gauss(0.0, options.feature_noise > 0 ? options.feature_noise : 1.0);
    for (Axis a : {Axis::T, Axis::U}) {
        if (!has_gap_atom(program, a)) continue;
        const auto i = static_cast<std::size_t>(a);
        P.feature[i] = P.goal[i] + (options.feature_noise > 0 ? gauss(rng) : 0.0);
    }
    return b;
}

Pose JitteryCarrier::realize(const Pose& target) {
    std::uniform_real_distribution<double> u(-amplitude_, amplitude_);
    Pose p = target;
    for (int i = 0; i < 3; ++i) p.p(i) += u(rng_);
    return p;
}

double JitteryCarrier::tolerance() const { return amplitude_ * std::sqrt(3.0); }

SequenceResult execute_sequence(const TaskSequence& sequence, Env& env, Carrier& carrier,
                                const ExecuteOptions& options) {
    SequenceResult out;
    for (std::size_t i = 0; i < sequence.tasks.size(); ++i) {
        const auto& model = sequence.tasks[i];
        if (model.is_marker()) {
            env.attached = model.task != "release";
            out.log.push_back("marker " + model.task + (env.attached ? ": object attached" : ": object released"));
            continue;
        }
        const SkillSpec& spec = lookup(model.task);
        if (!env.attached) throw SequencingError("task " + std::to_string(i) + " (" + spec.name + ") runs with no object attached");

        const Pose current = env.hand_pose();
        const Pose achieved = carrier.realize(current);
        if (!(achieved.p == current.p && achieved.q.coeffs() == current.q.coeffs())) env.set_hand_pose(achieved);

        const auto state = classify(env.contact_set()).label;
        if (state != spec.from_state)
            throw SequencingError("task " + std::to_string(i) + " (" + spec.name + ") expects " +
                                  std::string(to_string(spec.from_state)) + " but the scene is in " +
                                  std::string(to_string(state)));

        auto bound = bind_parameters(model, env.scene(), env.hand_pose(), options.bind);
        for (auto& w : bound.warnings) out.log.push_back(spec.name + ": " + w);
        auto controller = options.controllers ? options.controllers(spec) : default_controller(spec);
        RunOptions run;
        run.horizon = options.horizon;
        out.traces.push_back(run_skill(spec, *controller, env, bound.params, run));
        const auto& tr = out.traces.back();
        out.log.push_back(spec.name + ": " + std::string(to_string(tr.termination)) + " after " +
                          std::to_string(tr.steps.size() - 1) + " steps");
        if (tr.termination != Termination::Success) {
            out.success = false;
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

DefaultRun task_to(const std::string& name, const Vec3& p, const Vec3& dtd, std::optional<Vec3> start = {}) {
    DefaultRun r;
    r.start = start;
    auto& m = r.model;
    m.task = name;
    m.actor = "right";
    m.object = "object";
    m.edc = Pose{p, Quat::Identity()};
    m.dtd = dtd;
    return r;
}

Vec3 on_arc(double radius, double angle) { return {radius * std::cos(angle), radius * std::sin(angle), 0.0}; }

}  // namespace

std::optional<DefaultRun> default_task(std::string_view preset_name, const SkillSpec& spec) {
    const std::string& n = spec.name;
    const double deg = std::numbers::pi / 180.0;
    if (preset_name == "tabletop") {
        if (n == "PC-NC-a") return task_to(n, {0, 0, 0.13}, Vec3::UnitZ());
        if (n == "NC-PC-a") return task_to(n, {0, 0, 0.03}, -Vec3::UnitZ(), Vec3(0, 0, 0.09));
        if (n == "NC-NC") return task_to(n, {0.2, 0, 0.09}, Vec3::UnitX(), Vec3(0, 0, 0.09));
    } else if (preset_name == "drawer") {
        if (n == "PR-OP") return task_to(n, {0, 0, 0}, -Vec3::UnitX());
        if (n == "PR-PR") return task_to(n, {0.25, 0, 0}, Vec3::UnitX());
    } else if (preset_name == "drawer-closed") {
        if (n == "OP-PR") return task_to(n, {0.1, 0, 0}, Vec3::UnitX());
    } else if (preset_name == "door") {
        if (n == "OR-RV") return task_to(n, on_arc(0.5, 60 * deg), Vec3::UnitY());
    } else if (preset_name == "door-ajar") {
        const Vec3 tangent = on_arc(1.0, 110 * deg);
        if (n == "RV-OR") return task_to(n, on_arc(0.5, 0.0), -tangent);
        if (n == "RV-RV") return task_to(n, on_arc(0.5, 40 * deg), tangent);
    } else if (preset_name == "whiteboard") {
        if (n == "PC1-PC1") return task_to(n, {0.02 - 10.0 / 25000.0, 0.6, 0}, Vec3::UnitY());
    } else if (preset_name == "walls-gap") {
        if (n == "TR-TR") return task_to(n, {0.1, 0, 0.2}, Vec3::UnitX());
    }
    return std::nullopt;
}

}  // namespace skillforge

namespace skillforge {

PreparedRun prepare_run(const std::string& preset_name, const Scene& scene, const SkillSpec& spec,
                        const BindOptions& options) {
    const auto task = default_task(preset_name, spec);
    if (!task) throw SequencingError("skill " + spec.name + " is not compatible with preset " + preset_name);
    // The contact state is a property of the nominal geometry; randomized
    // normals can tilt a rail off its sample point.
    Env nominal(scene);
    if (task->start) nominal.set_hand_pose({*task->start, nominal.hand_pose().q});
    const auto state = classify(nominal.contact_set()).label;
    std::mt19937_64 rng(options.seed);
    Env env(randomize_scene(scene, scene.config.normal_noise_deg, rng));
    if (task->start) env.set_hand_pose({*task->start, env.hand_pose().q});
    if (state != spec.from_state)
        throw SequencingError("preset " + preset_name + " starts in " + std::string(to_string(state)) + ", skill " +
                              spec.name + " needs " + std::string(to_string(spec.from_state)));
    auto bound = bind_parameters(task->model, scene, env.hand_pose(), options);
    return {std::move(env), std::move(bound.params), std::move(bound.warnings)};
}

void apply_axis_error(SkillParameters& P, double angle_rad) {
    if (angle_rad == 0.0) return;
    const Quat r = axis_angle(P.U, angle_rad);
    const Vec3 c = P.initial_direction.value_or(P.S);
    P.initial_direction = (r * c).normalized();
    if (!P.hinge) {
        P.S = (r * P.S).normalized();
        P.T = P.U.cross(P.S);
    }
}

std::optional<std::string> default_preset(const SkillSpec& spec) {
    for (const auto& name : preset_names())
        if (default_task(name, spec)) return name;
    return std::nullopt;
}

EnvFactory training_factory(const SkillSpec& spec, const TrainingScenario& sc) {
    const auto run = default_task(sc.preset, spec);
    if (!run) throw InputError("skill " + spec.name + " has no default task on preset " + sc.preset);
    const Preset base = preset(sc.preset);
    const Family fam = family_of(spec);
    return [=](std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        Scene scene = base.scene;
        if (fam == Family::Wipe) scene = randomize_scene(scene, sc.normal_noise_deg, rng);
        Env env(scene);
        if (run->start) env.set_hand_pose({*run->start, env.hand_pose().q});
        BindOptions bo;
        bo.thresholds = sc.thresholds;
        // Bind against the nominal scene: the agent never sees the perturbation.
        auto bound = bind_parameters(run->model, base.scene, env.hand_pose(), bo);
        if (fam == Family::Directional && sc.axis_error_deg > 0) {
            std::uniform_real_distribution<double> u(-sc.axis_error_deg, sc.axis_error_deg);
            apply_axis_error(bound.params, u(rng) * std::numbers::pi / 180.0);
        }
        return EpisodeSetup{std::move(env), std::move(bound.params)};
    };
}

}  // namespace skillforge
