#include "skillforge/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "skillforge/io.hpp"
#include "skillforge/pipeline.hpp"

#ifndef SKILLFORGE_DATA_DIR
#define SKILLFORGE_DATA_DIR "."
#endif

namespace skillforge {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::uint64_t seed = 0;
    std::string out = "out";
    std::string format = "csv";
};

std::uint64_t default_seed() {
    if (const char* s = std::getenv("SKILLFORGE_SEED")) {
        try {
            return std::stoull(s);
        } catch (const std::exception&) {
            throw UsageError(std::string("SKILLFORGE_SEED is not an unsigned integer: ") + s);
        }
    }
    return 0;
}

const SkillSpec& skill_or_usage(const std::string& name) {
    const SkillSpec* s = find_skill(name);
    if (!s) throw UsageError("unknown skill: " + name);
    return *s;
}

std::string header_line(const SkillSpec& s) {
    std::string h = "Reward " + s.name;
    if (s.task_label) h += " (" + *s.task_label + (s.task_title ? " (" + *s.task_title + ")" : "") + " task)";
    return h;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir + ": " + ec.message());
}

// --- classify ---------------------------------------------------------------

struct ClassifyArgs {
    std::string file;
    std::string kind;
    std::vector<double> center;
};

int cmd_classify(const ClassifyArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
    ContactSet set = parse_contact_set(read_file(a.file));
    if (a.kind == "translation") set.kind = MotionKind::Translation;
    if (a.kind == "rotation") set.kind = MotionKind::Rotation;
    if (!a.center.empty()) set.center = Vec3(a.center[0], a.center[1], a.center[2]);
    const auto c = classify(set);
    out << to_string(c.label) << ' ' << c.profile.maintenance << ' ' << c.profile.detachment << ' '
        << c.profile.constraint << '\n';
    if (g.format == "json") out << classification_json(c);
    if (c.dropped_contacts > 0)
        err << "note: " << c.dropped_contacts << " contact(s) have no lever arm about the center and were dropped\n";
    if (c.cone.duplicates_removed > 0) err << "note: " << c.cone.duplicates_removed << " duplicate normal(s) merged\n";
    return 0;
}

// --- reward -----------------------------------------------------------------

struct RewardArgs {
    std::vector<std::string> names;
    bool all = false;
    bool check = false;
    std::string fixtures = std::string(SKILLFORGE_DATA_DIR) + "/fixtures/rewards";
};

int cmd_reward(const RewardArgs& a, std::ostream& out, std::ostream& err) {
    std::vector<std::string> names = a.names;
    if (!names.empty() && names.front() == "show") names.erase(names.begin());
    if (a.check) {
        int ok = 0, total = 0;
        for (const auto& spec : registry()) {
            ++total;
            const std::string path = a.fixtures + "/" + spec.name + ".txt";
            try {
                const auto parsed = parse_program(read_file(path));
                const bool same = parsed.name == spec.name && parsed.program == compose(spec) &&
                                  parsed.task_label == spec.task_label && parsed.task_title == spec.task_title;
                if (same)
                    ++ok;
                else
                    err << "mismatch: " << spec.name << '\n';
            } catch (const std::exception& e) {
                err << "mismatch: " << spec.name << ": " << e.what() << '\n';
            }
        }
        std::error_code ec;
        for (const auto& entry : fs::directory_iterator(a.fixtures, ec)) {
            const auto stem = entry.path().stem().string();
            if (entry.path().extension() == ".txt" && !find_skill(stem)) {
                ++total;
                err << "mismatch: fixture " << stem << " has no registry entry\n";
            }
        }
        out << ok << '/' << total << " match\n";
        return ok == total ? 0 : 1;
    }
    if (a.all) {
        bool first = true;
        for (const auto& spec : registry()) {
            if (!first) out << '\n';
            first = false;
            out << header_line(spec) << '\n' << print_program(compose(spec));
        }
        return 0;
    }
    if (names.size() != 1) throw UsageError("reward: give one skill name, or --all");
    out << print_program(compose(skill_or_usage(names.front())));
    return 0;
}

// --- run / train / exec shared ---------------------------------------------

struct SimArgs {
    std::optional<int> steps;
    std::optional<double> delta_zero, delta_collision, delta_gap, f_step;
    std::string policy;
    double axis_error = 0.0;
    double noise = 0.0;
    bool baseline = false;
};

Thresholds thresholds_from(const SimArgs& a) {
    Thresholds t;
    if (a.delta_zero) t.delta_zero = *a.delta_zero;
    if (a.delta_collision) t.delta_collision = *a.delta_collision;
    if (a.delta_gap) t.delta_gap = *a.delta_gap;
    if (!(t.delta_zero > 0) || !(t.delta_collision > t.delta_zero) || !(t.delta_gap > 0))
        throw UsageError("thresholds must satisfy 0 < delta-zero < delta-collision and delta-gap > 0");
    return t;
}

struct ResolvedScene {
    std::string preset;
    Scene scene;
};

ResolvedScene resolve_scene(const std::string& arg, const SimArgs& a) {
    ResolvedScene r;
    SimConfig cfg;
    if (arg.size() > 5 && arg.substr(arg.size() - 5) == ".json") {
        const auto sf = parse_scene_file(read_file(arg), cfg);
        r.preset = sf.preset;
        r.scene = preset(sf.preset).scene;
        r.scene.config = sf.config;
    } else {
        const auto names = preset_names();
        if (std::find(names.begin(), names.end(), arg) == names.end()) throw UsageError("unknown preset: " + arg);
        r.preset = arg;
        r.scene = preset(arg).scene;
    }
    if (a.f_step) r.scene.config.f_step = *a.f_step;
    if (a.noise > 0) r.scene.config.normal_noise_deg = a.noise;
    return r;
}

void write_trace(const Globals& g, const std::string& stem, const EpisodeTrace& tr) {
    if (g.format == "json")
        write_file(g.out + "/" + stem + ".json", trace_json(tr));
    else
        write_file(g.out + "/" + stem + ".csv", trace_csv(tr));
}

int cmd_run(const std::string& scene_arg, const std::string& skill, const SimArgs& a, const Globals& g,
            std::ostream& out, std::ostream& err) {
    const SkillSpec& spec = skill_or_usage(skill);
    const ResolvedScene rs = resolve_scene(scene_arg, a);
    BindOptions bo;
    bo.thresholds = thresholds_from(a);
    bo.seed = g.seed;
    auto bound = [&] {
        try {
            return prepare_run(rs.preset, rs.scene, spec, bo);
        } catch (const SequencingError& e) {
            throw UsageError(e.what());
        }
    }();
    Env& env = bound.env;
    for (const auto& w : bound.warnings) err << "warning: " << w << '\n';
    if (a.axis_error != 0.0) apply_axis_error(bound.params, a.axis_error * std::numbers::pi / 180.0);

    std::unique_ptr<Controller> ctrl;
    if (!a.policy.empty()) {
        Policy p = parse_policy(read_file(a.policy));
        if (p.family != family_of(spec)) throw UsageError("policy family does not match skill " + spec.name);
        ctrl = std::make_unique<PolicyController>(p, bound.params.f_max, bound.params.action_cap);
    } else if (a.baseline) {
        ctrl = std::make_unique<OpenLoop>();
    } else {
        ctrl = default_controller(spec);
    }
    RunOptions ro;
    ro.horizon = a.steps;
    const auto tr = run_skill(spec, *ctrl, env, bound.params, ro);

    ensure_dir(g.out);
    write_trace(g, spec.name, tr);
    write_file(g.out + "/summary.json", summary_json({tr}));
    out << summary_line(tr) << '\n';
    if (tr.termination == Termination::Error) err << "error: " << tr.reason << '\n';
    return tr.termination == Termination::Success ? 0 : 1;
}

struct TrainArgs {
    std::string skill;
    std::string preset;
    long long steps = 50000;
    std::string method = "cem";
    std::string arch = "linear";
    int hidden = 8;
    int threads = 0;
    int iterations = 1000;
    int population = 0;
    double axis_error = 10.0;
    double noise = 3.0;
};

int cmd_train(const TrainArgs& a, const SimArgs& sa, const Globals& g, std::ostream& out, std::ostream& err) {
    const SkillSpec& spec = skill_or_usage(a.skill);
    if (family_of(spec) == Family::Positional) throw UsageError("skill " + spec.name + " has no learnable controller");
    TrainingScenario sc;
    if (!a.preset.empty()) {
        sc.preset = a.preset;
    } else if (auto p = default_preset(spec)) {
        sc.preset = *p;
    } else {
        throw UsageError("no preset hosts skill " + spec.name);
    }
    if (!default_task(sc.preset, spec)) throw UsageError("skill " + spec.name + " is not compatible with preset " + sc.preset);
    sc.axis_error_deg = a.axis_error;
    sc.normal_noise_deg = a.noise;
    sc.thresholds = thresholds_from(sa);
    const auto factory = training_factory(spec, sc);

    LearnerConfig cfg;
    cfg.step_budget = a.steps;
    cfg.max_iterations = a.iterations;
    cfg.seed = g.seed;
    cfg.threads = a.threads;
    cfg.hidden = a.hidden;
    if (a.population > 0) {
        cfg.population = a.population;
        cfg.elites = std::max(1, a.population / 4);
    }
    if (a.method == "fd")
        cfg.method = LearnerConfig::Method::FiniteDifference;
    else if (a.method != "cem")
        throw UsageError("--method must be cem or fd");
    if (a.arch == "mlp")
        cfg.arch = Policy::Arch::Mlp;
    else if (a.arch != "linear")
        throw UsageError("--arch must be linear or mlp");
    if (family_of(spec) == Family::Wipe) cfg.horizon = 120;
    if (sa.steps) cfg.horizon = *sa.steps;

    const auto res = train(spec, factory, cfg);
    ensure_dir(g.out);
    write_file(g.out + "/policy.json", policy_json(res.policy));
    write_file(g.out + "/curve.csv", curve_csv(res.curve));

    // Held-out evaluation episode for the summary line.
    auto setup = factory(~g.seed);
    PolicyController ctrl(res.policy, setup.params.f_max, setup.params.action_cap);
    RunOptions ro;
    ro.horizon = cfg.horizon;
    const auto tr = run_skill(spec, ctrl, setup.env, setup.params, ro);
    write_trace(g, spec.name + "_eval", tr);
    if (!res.curve.empty())
        err << "iterations=" << res.curve.size() << " env_steps=" << res.env_steps
            << " first_mean=" << res.curve.front().mean_reward << " last_mean=" << res.curve.back().mean_reward << '\n';
    out << summary_line(tr) << '\n';
    return tr.termination == Termination::Success ? 0 : 1;
}

struct ExecArgs {
    std::string file;
    std::string preset;
    std::string carrier = "identity";
    double jitter = 0.0005;
};

int cmd_exec(const ExecArgs& a, const SimArgs& sa, const Globals& g, std::ostream& out, std::ostream& err) {
    const TaskSequence seq = load_task_sequence(a.file);
    std::string preset_name = a.preset.empty() ? seq.scene.value_or("") : a.preset;
    if (preset_name.empty()) throw UsageError("sequence names no scene; pass --preset");
    const ResolvedScene rs = resolve_scene(preset_name, sa);
    std::mt19937_64 rng(g.seed);
    Env env(randomize_scene(rs.scene, rs.scene.config.normal_noise_deg, rng));
    env.attached = false;

    std::unique_ptr<Carrier> carrier;
    if (a.carrier == "identity")
        carrier = std::make_unique<IdentityCarrier>();
    else if (a.carrier == "jitter")
        carrier = std::make_unique<JitteryCarrier>(a.jitter, g.seed);
    else
        throw UsageError("--carrier must be identity or jitter");

    ExecuteOptions eo;
    eo.bind.thresholds = thresholds_from(sa);
    eo.bind.seed = g.seed;
    eo.horizon = sa.steps;
    const auto res = execute_sequence(seq, env, *carrier, eo);

    ensure_dir(g.out);
    char prefix[16];
    for (std::size_t i = 0; i < res.traces.size(); ++i) {
        std::snprintf(prefix, sizeof prefix, "%02zu_", i + 1);
        write_trace(g, prefix + res.traces[i].skill, res.traces[i]);
    }
    write_file(g.out + "/summary.json", summary_json(res.traces));
    for (const auto& l : res.log) err << l << '\n';
    for (const auto& tr : res.traces) out << tr.skill << ": " << summary_line(tr) << '\n';
    out << (res.success ? "sequence success" : "sequence failure") << '\n';
    return res.success ? 0 : 1;
}

int cmd_presets(const std::string& contacts, std::ostream& out) {
    if (!contacts.empty()) {
        const auto names = preset_names();
        if (std::find(names.begin(), names.end(), contacts) == names.end())
            throw UsageError("unknown preset: " + contacts);
        out << contact_set_json(preset(contacts).contacts);
        return 0;
    }
    for (const auto& n : preset_names()) out << n << ' ' << to_string(preset(n).intended) << '\n';
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"skillforge: contact-state skills, reward programs and a desk-scale contact simulator"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    try {
        g.seed = default_seed();
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    app.add_option("--seed", g.seed, "random seed (default: $SKILLFORGE_SEED or 0)");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"json", "csv"}));

    ClassifyArgs ca;
    auto* classify_cmd = app.add_subcommand("classify", "classify a contact set file");
    classify_cmd->add_option("file", ca.file, "contact set JSON")->required();
    classify_cmd->add_option("--kind", ca.kind, "override motion kind")
        ->check(CLI::IsMember({"translation", "rotation"}));
    classify_cmd->add_option("--center", ca.center, "rotation center x y z")->expected(3);

    RewardArgs ra;
    auto* reward_cmd = app.add_subcommand("reward", "print compiled reward programs");
    reward_cmd->add_option("skill", ra.names, "skill name (optionally preceded by 'show')");
    reward_cmd->add_flag("--all", ra.all, "print every registry entry");
    reward_cmd->add_flag("--check-fixtures", ra.check, "compare all entries against the fixture directory");
    reward_cmd->add_option("--fixtures", ra.fixtures, "fixture directory");

    SimArgs sa;
    auto add_sim_flags = [&](CLI::App* c) {
        c->add_option("--delta-zero", sa.delta_zero, "contact threshold [N]");
        c->add_option("--delta-collision", sa.delta_collision, "collision threshold [N]");
        c->add_option("--delta-gap", sa.delta_gap, "feature gap threshold [m]");
        c->add_option("--f-step", sa.f_step, "force discretization step [N]");
    };

    std::string run_scene, run_skill_name;
    auto* run_cmd = app.add_subcommand("run", "run one skill on a preset or scene file");
    run_cmd->add_option("scene", run_scene, "preset name or scene JSON")->required();
    run_cmd->add_option("skill", run_skill_name, "skill name")->required();
    run_cmd->add_option("--steps", sa.steps, "episode horizon");
    run_cmd->add_option("--policy", sa.policy, "policy JSON instead of the analytic controller");
    run_cmd->add_option("--axis-error", sa.axis_error, "injected motion-axis error [deg]");
    run_cmd->add_option("--noise", sa.noise, "surface normal noise [deg]");
    run_cmd->add_flag("--baseline", sa.baseline, "straight-line controller without feedback");
    add_sim_flags(run_cmd);

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "train a policy for a directional or wipe skill");
    train_cmd->add_option("skill", ta.skill, "skill name")->required();
    train_cmd->add_option("--preset", ta.preset, "training preset");
    train_cmd->add_option("--steps", ta.steps, "environment step budget");
    train_cmd->add_option("--method", ta.method, "cem or fd");
    train_cmd->add_option("--arch", ta.arch, "linear or mlp");
    train_cmd->add_option("--hidden", ta.hidden, "MLP hidden width");
    train_cmd->add_option("--threads", ta.threads, "worker threads (0 = all cores)");
    train_cmd->add_option("--iterations", ta.iterations, "iteration cap");
    train_cmd->add_option("--population", ta.population, "candidates per iteration");
    train_cmd->add_option("--axis-error", ta.axis_error, "axis error range [deg]");
    train_cmd->add_option("--noise", ta.noise, "surface normal noise for the wipe [deg]");
    train_cmd->add_option("--horizon", sa.steps, "episode horizon");
    add_sim_flags(train_cmd);

    ExecArgs ea;
    auto* exec_cmd = app.add_subcommand("exec", "execute a task sequence file");
    exec_cmd->add_option("file", ea.file, "sequence JSON")->required();
    exec_cmd->add_option("--preset", ea.preset, "scene preset (default: the file's scene)");
    exec_cmd->add_option("--carrier", ea.carrier, "identity or jitter");
    exec_cmd->add_option("--jitter", ea.jitter, "jitter amplitude [m]");
    exec_cmd->add_option("--steps", sa.steps, "per-skill horizon");
    add_sim_flags(exec_cmd);

    std::string contacts_of;
    auto* presets_cmd = app.add_subcommand("presets", "list scene presets");
    presets_cmd->add_option("--contacts", contacts_of, "print the contact set of a preset");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*classify_cmd) return cmd_classify(ca, g, out, err);
        if (*reward_cmd) return cmd_reward(ra, out, err);
        if (*run_cmd) return cmd_run(run_scene, run_skill_name, sa, g, out, err);
        if (*train_cmd) return cmd_train(ta, sa, g, out, err);
        if (*exec_cmd) return cmd_exec(ea, sa, g, out, err);
        if (*presets_cmd) return cmd_presets(contacts_of, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return 2;
    } catch (const InputError& e) {
        err << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const SequencingError& e) {
        err << "sequencing error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace skillforge
