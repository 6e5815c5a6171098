#include <doctest.h>

#include "skillforge/pipeline.hpp"
#include "support.hpp"

using namespace skillforge;

namespace {

const std::string kDemos = std::string(SKILLFORGE_DATA_DIR) + "/demos/";

TaskModel model(const std::string& task, const Vec3& edc, std::optional<Vec3> dtd = std::nullopt) {
    TaskModel m;
    m.task = task;
    m.edc = Pose{edc, Quat::Identity()};
    m.dtd = dtd;
    return m;
}

void check_frame(const SkillParameters& P) {
    CHECK(std::abs(P.S.norm() - 1.0) < 1e-12);
    CHECK(std::abs(P.T.norm() - 1.0) < 1e-12);
    CHECK(std::abs(P.U.norm() - 1.0) < 1e-12);
    CHECK(std::abs(P.S.dot(P.T)) < 1e-12);
    CHECK(std::abs(P.S.dot(P.U)) < 1e-12);
    CHECK(std::abs(P.T.dot(P.U)) < 1e-12);
    CHECK((P.S.cross(P.T) - P.U).norm() < 1e-12);
}

Env scene_env(const std::string& name) {
    Env env(preset(name).scene);
    env.attached = false;
    return env;
}

}  // namespace

TEST_CASE("parse_task_sequence: demos and edge cases") {
    const auto place = load_task_sequence(kDemos + "place_on_plate.json");
    std::vector<std::string> names;
    for (const auto& t : place.tasks) names.push_back(t.task);
    CHECK(names == std::vector<std::string>{"grasp:active-force", "PC-NC-a", "NC-NC", "NC-PC-a", "release"});
    CHECK(place.scene == std::optional<std::string>("tabletop"));

    CHECK(parse_task_sequence(R"({"tasks": []})").tasks.empty());

    const auto shelf = load_task_sequence(kDemos + "shelf.json");
    int run = 0, longest = 0;
    for (const auto& t : shelf.tasks) {
        run = t.task == "NC-NC" ? run + 1 : 0;
        longest = std::max(longest, run);
    }
    CHECK(longest == 3);

    const auto fridge = load_task_sequence(kDemos + "open_fridge.json");
    REQUIRE(fridge.tasks.size() >= 2);
    CHECK(fridge.tasks[0].task == "grasp:lazy-closure");
    CHECK(fridge.tasks[1].task == "OR-RV");

    const auto edl = parse_task_sequence(R"({"tasks": [{"task": "release", "edl": "raw text"}]})");
    CHECK(edl.tasks[0].edl == "raw text");
    CHECK(edl.tasks[0].is_marker());
}

TEST_CASE("parse_task_sequence: errors name the offending path") {
    auto message = [](const char* text) {
        try {
            parse_task_sequence(text);
        } catch (const ParseError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message(R"({"tasks": [{"task": "FLY"}]})").find("$.tasks[0].task") != std::string::npos);
    CHECK(message(R"({"tasks": [{"task": "NC-NC", "edc": {"p": [1, 2]}}]})").find("$.tasks[0].edc.p") !=
          std::string::npos);
    CHECK(message(R"({"tasks": [{"task": "release"}, {"task": "NC-NC", "dtd": [0, 0, 2]}]})")
              .find("$.tasks[1].dtd") != std::string::npos);
    CHECK(message(R"({"tasks": 3})").find("$.tasks") != std::string::npos);
    CHECK(message("not json").find("$") != std::string::npos);
}

TEST_CASE("bind_parameters: worked examples") {
    const Scene table = preset("tabletop").scene;
    const Pose start{Vec3(0, 0, 0.03), Quat::Identity()};

    auto b = bind_parameters(model("PC-NC-a", Vec3(0, 0, 0.13), Vec3::UnitZ()), table, start);
    CHECK(b.params.S.isApprox(Vec3::UnitZ()));
    CHECK(b.params.goal[0] == doctest::Approx(0.10));
    CHECK(std::abs(b.params.goal[1]) < 1e-12);
    CHECK(std::abs(b.params.goal[2]) < 1e-12);
    CHECK_FALSE(b.warnings.empty());  // vertical detachment direction
    check_frame(b.params);

    auto z = bind_parameters(model("NC-NC", start.p), table, start);
    for (double g : z.params.goal) CHECK(std::abs(g) < 1e-12);

    const Scene drawer = preset("drawer").scene;
    const Pose dstart{Vec3(0.1, 0, 0), Quat::Identity()};
    auto d = bind_parameters(model("PR-OP", Vec3::Zero(), -Vec3::UnitX()), drawer, dstart);
    CHECK(d.params.S.isApprox(-Vec3::UnitX()));
    CHECK(d.params.goal[0] == doctest::Approx(0.1));
    check_frame(d.params);

    auto door = bind_parameters(model("OR-RV", Vec3(0.25, 0.4330127, 0), Vec3::UnitY()), preset("door").scene,
                                {Vec3(0.5, 0, 0), Quat::Identity()});
    REQUIRE(door.params.hinge);
    CHECK(door.params.goal[0] == doctest::Approx(std::numbers::pi / 3).epsilon(1e-6));
    check_frame(door.params);

    TaskModel marker;
    marker.task = "release";
    CHECK_THROWS(bind_parameters(marker, table, start));
}

TEST_CASE("property: bound frames are orthonormal and right-handed") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    const Scene table = preset("tabletop").scene;
    for (int i = 0; i < 200; ++i) {
        const Pose start{Vec3(u(rng), u(rng), 0.2 + u(rng)), Quat::Identity()};
        const Vec3 dtd = testsupport::random_unit(rng);
        const Vec3 edc = start.p + 0.1 * dtd + Vec3(u(rng), u(rng), u(rng)) * 0.1;
        const auto b = bind_parameters(model("NC-NC", edc, i % 2 ? std::optional<Vec3>(dtd) : std::nullopt), table,
                                       start);
        check_frame(b.params);
        // Goals reconstruct the end position.
        const Vec3 back = start.p + b.params.goal[0] * b.params.S + b.params.goal[1] * b.params.T +
                          b.params.goal[2] * b.params.U;
        CHECK((back - edc).norm() < 1e-12);
    }
}

TEST_CASE("feature noise is reproducible under seed") {
    const Scene table = preset("tabletop").scene;
    const Pose start{Vec3(0, 0, 0.09), Quat::Identity()};
    BindOptions o;
    o.feature_noise = 0.002;
    o.seed = 4;
    const auto a = bind_parameters(model("NC-PC-b", Vec3(0, 0, 0.03), -Vec3::UnitZ()), table, start, o);
    const auto b = bind_parameters(model("NC-PC-b", Vec3(0, 0, 0.03), -Vec3::UnitZ()), table, start, o);
    REQUIRE(a.params.feature[2]);
    CHECK(a.params.feature[2] == b.params.feature[2]);
    CHECK(*a.params.feature[2] != a.params.goal[2]);
}

TEST_CASE("demos run to success with exact chaining") {
    for (const char* file : {"place_on_plate.json", "shelf.json", "throw_away.json", "open_fridge.json"}) {
        CAPTURE(file);
        const auto seq = load_task_sequence(kDemos + file);
        REQUIRE(seq.scene);
        Env env = scene_env(*seq.scene);
        IdentityCarrier carrier;
        const auto res = execute_sequence(seq, env, carrier);
        CHECK(res.success);
        std::size_t skills = 0;
        for (const auto& t : seq.tasks) skills += t.is_marker() ? 0 : 1;
        CHECK(res.traces.size() == skills);
        for (const auto& tr : res.traces) CHECK(tr.termination == Termination::Success);
        for (std::size_t k = 0; k + 1 < res.traces.size(); ++k) {
            const auto& end = res.traces[k].steps.back().pose;
            const auto& next = res.traces[k + 1].steps.front().pose;
            CHECK((end.p - next.p).norm() == 0.0);
            CHECK(end.q.coeffs() == next.q.coeffs());
        }
    }
}

TEST_CASE("place on plate ends resting on the plate") {
    const auto seq = load_task_sequence(kDemos + "place_on_plate.json");
    Env env = scene_env("tabletop");
    IdentityCarrier carrier;
    const auto res = execute_sequence(seq, env, carrier);
    REQUIRE(res.success);
    CHECK(env.force().z() > 0);
    CHECK(std::abs(env.grasp_world().x() - 0.3) < 0.01);
}

TEST_CASE("a failure at skill k yields exactly k traces") {
    TaskSequence seq;
    TaskModel grasp;
    grasp.task = "grasp:active-force";
    seq.tasks = {grasp, model("PC-NC-a", Vec3(0, 0, 0.13), Vec3::UnitZ()), model("NC-NC", Vec3(0, 0, -0.05)),
                 model("NC-NC", Vec3(0.1, 0, 0.13))};
    Env env = scene_env("tabletop");
    IdentityCarrier carrier;
    const auto res = execute_sequence(seq, env, carrier);
    CHECK_FALSE(res.success);
    REQUIRE(res.traces.size() == 2);
    CHECK(res.traces[0].termination == Termination::Success);
    CHECK(res.traces[1].termination != Termination::Success);
}

TEST_CASE("sequencing errors") {
    Env env = scene_env("tabletop");
    IdentityCarrier carrier;
    TaskSequence unattached;
    unattached.tasks = {model("PC-NC-a", Vec3(0, 0, 0.13), Vec3::UnitZ())};
    CHECK_THROWS_AS(execute_sequence(unattached, env, carrier), SequencingError);

    TaskSequence wrong;
    TaskModel grasp;
    grasp.task = "grasp:active-force";
    wrong.tasks = {grasp, model("PR-OP", Vec3::Zero(), -Vec3::UnitX())};
    Env env2 = scene_env("tabletop");
    CHECK_THROWS_AS(execute_sequence(wrong, env2, carrier), SequencingError);

    CHECK_THROWS_AS(prepare_run("door", preset("door").scene, lookup("PR-OP")), SequencingError);
}

TEST_CASE("jittery carrier stays within its tolerance") {
    JitteryCarrier c(0.001, 7);
    const Pose target{Vec3(0.1, 0.2, 0.3), Quat::Identity()};
    for (int i = 0; i < 100; ++i) CHECK((c.realize(target).p - target.p).norm() <= c.tolerance() + 1e-15);

    const auto seq = load_task_sequence(kDemos + "place_on_plate.json");
    Env env = scene_env("tabletop");
    JitteryCarrier jitter(0.0005, 1);
    const auto res = execute_sequence(seq, env, jitter);
    for (std::size_t k = 0; k + 1 < res.traces.size(); ++k)
        CHECK((res.traces[k].steps.back().pose.p - res.traces[k + 1].steps.front().pose.p).norm() <=
              jitter.tolerance() + 1e-15);
}

TEST_CASE("default tasks cover every preset's intended skills") {
    for (const auto& [p, skill] : std::vector<std::pair<std::string, std::string>>{{"tabletop", "PC-NC-a"},
                                                                                   {"drawer", "PR-OP"},
                                                                                   {"drawer", "PR-PR"},
                                                                                   {"drawer-closed", "OP-PR"},
                                                                                   {"door", "OR-RV"},
                                                                                   {"door-ajar", "RV-OR"},
                                                                                   {"door-ajar", "RV-RV"},
                                                                                   {"whiteboard", "PC1-PC1"},
                                                                                   {"walls-gap", "TR-TR"}}) {
        CAPTURE(skill);
        auto run = prepare_run(p, preset(p).scene, lookup(skill));
        auto ctrl = default_controller(lookup(skill));
        const auto tr = run_skill(lookup(skill), *ctrl, run.env, run.params);
        CHECK(tr.termination == Termination::Success);
    }
}
