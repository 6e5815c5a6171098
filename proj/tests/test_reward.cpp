#include <doctest.h>

#include <filesystem>
#include <random>

#include "skillforge/io.hpp"
#include "skillforge/reward.hpp"

using namespace skillforge;
namespace fs = std::filesystem;

namespace {

constexpr auto kOpp = Sense::Opposing;
constexpr auto kAlong = Sense::Along;
constexpr auto kZero = ThresholdRef::DeltaZero;
constexpr auto kColl = ThresholdRef::DeltaCollision;

const std::string kFixtures = std::string(SKILLFORGE_DATA_DIR) + "/fixtures/rewards";

Observation at_all_goals() {
    Observation o;
    o.goal = {0.1, 0.0, 0.0};
    o.pos = o.goal;
    return o;
}

}  // namespace

TEST_CASE("primitive_conditions: worked examples") {
    const auto a1 = primitive_conditions(Primitive::A1, Axis::S);
    CHECK(a1.reward == AtomSet{at_goal(Axis::S)});
    CHECK(a1.pre_penalties.empty());
    CHECK_FALSE(a1.staged);

    const auto b3 = primitive_conditions(Primitive::B3, Axis::U);
    CHECK(b3.post_penalties == AtomSet{force_above(Axis::U, kOpp, kColl)});
    CHECK(b3.pre_penalties == b3.post_penalties);
    CHECK(b3.reward.empty());
    CHECK_FALSE(b3.staged);

    const auto b4 = primitive_conditions(Primitive::B4, Axis::U);
    CHECK(b4.staged);
    CHECK(b4.pre_penalties == AtomSet{feature_gap(Axis::U)});
    CHECK(b4.post_penalties == AtomSet{force_above(Axis::U, kOpp, kColl), force_below(Axis::U, kOpp, kZero)});

    CHECK_THROWS_AS(primitive_conditions(Primitive::B2, Axis::S), ContractViolation);
    CHECK_THROWS_AS(primitive_conditions(Primitive::A1, Axis::T), ContractViolation);
}

TEST_CASE("compose: worked examples") {
    const auto pick = compose(lookup("PC-NC-a"));
    CHECK(pick.reward == AtomSet{force_below(Axis::S, kAlong, kZero), at_goal(Axis::S), at_goal(Axis::T),
                                 at_goal(Axis::U)});
    CHECK(pick.post_penalties.empty());

    const auto op = compose(lookup("OP-PR"));
    CHECK(op.post_penalties == AtomSet{force_above(Axis::T, kOpp, kColl), force_above(Axis::U, kOpp, kColl)});
    CHECK(op.reward == AtomSet{force_below(Axis::S, kAlong, kZero), at_goal(Axis::S)});

    const auto bring = compose(lookup("NC-NC"));
    CHECK(bring.reward == AtomSet{at_goal(Axis::S), at_goal(Axis::T), at_goal(Axis::U)});
    CHECK(bring.pre_penalties.empty());
    CHECK(bring.post_penalties.empty());

    SkillSpec bad = lookup("NC-NC");
    bad.overrides = ProgramPatch{};
    bad.overrides->add_reward = {at_goal(Axis::S)};
    bad.overrides->remove_reward = {at_goal(Axis::S)};
    CHECK_THROWS_AS(compose(bad), CompositionError);
}

TEST_CASE("registry: labels and roles") {
    CHECK(lookup("OR-RV").task_label == std::optional<std::string>("PTG51"));
    CHECK(lookup("PC1-PC1").task_label == std::optional<std::string>("STG2"));
    CHECK(lookup("NC-NC").task_label == std::optional<std::string>("PTG12"));
    const auto& b = lookup("PC-NC-b");
    CHECK(b.roles == std::array<Primitive, 3>{Primitive::A1, Primitive::B1, Primitive::B5});
    CHECK(find_skill("NOPE") == nullptr);
    CHECK_THROWS_AS(lookup("NOPE"), std::out_of_range);
    for (const auto& s : registry()) {
        CAPTURE(s.name);
        CHECK((s.roles[0] == Primitive::A1 || s.roles[0] == Primitive::A2 || s.roles[0] == Primitive::A3));
        CHECK(compose(s) == compose(s));
    }
}

TEST_CASE("registry matches the transcribed fixture directory one-to-one") {
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(kFixtures))
        if (e.path().extension() == ".txt") {
            ++files;
            CHECK_MESSAGE(find_skill(e.path().stem().string()) != nullptr, e.path().stem().string());
        }
    CHECK(files == 43);
    CHECK(registry().size() == files);
    for (const auto& spec : registry()) {
        CAPTURE(spec.name);
        const auto parsed = parse_program(read_file(kFixtures + "/" + spec.name + ".txt"));
        CHECK(parsed.name == spec.name);
        CHECK(parsed.task_label == spec.task_label);
        CHECK(parsed.task_title == spec.task_title);
        CHECK(parsed.program == compose(spec));
    }
}

TEST_CASE("print_program round-trips through parse_program") {
    for (const auto& spec : registry()) {
        CAPTURE(spec.name);
        const auto prog = compose(spec);
        const auto text = "Reward " + spec.name + "\n" + print_program(prog);
        const auto back = parse_program(text);
        CHECK(back.program == prog);
        CHECK(back.name == spec.name);
    }
    CHECK(print_program(compose(lookup("OP-PR"))).rfind("if F-t > delta-collision, then penalty", 0) == 0);
    CHECK_THROWS_AS(parse_program("Reward X\n  if F-q > delta-zero, then penalty\n"), ParseError);
}

TEST_CASE("evaluate: worked examples") {
    auto ev = evaluate(compose(lookup("NC-NC")), at_all_goals());
    CHECK(ev.reward);
    CHECK_FALSE(ev.penalty);
    CHECK(ev.terminate == Termination::Success);

    Observation o = at_all_goals();
    o.opposing[1] = 2 * o.thresholds.delta_collision;
    ev = evaluate(compose(lookup("OP-PR")), o);
    CHECK(ev.penalty);
    CHECK(ev.terminate == Termination::PenaltyFailure);

    Observation w = at_all_goals();
    w.opposing[2] = 0.5 * (w.thresholds.delta_zero + w.thresholds.delta_collision);
    ev = evaluate(compose(lookup("PC1-PC1")), w);
    CHECK(ev.reward);
    CHECK_FALSE(ev.penalty);

    // Penalty wins over reward for the same step.
    w.opposing[2] = 1.0;
    ev = evaluate(compose(lookup("PC1-PC1")), w);
    CHECK(ev.reward);
    CHECK(ev.penalty);
    CHECK(ev.terminate == Termination::PenaltyFailure);
}

TEST_CASE("evaluate: OR over penalties and AND over rewards, exhaustively") {
    RewardProgram p;
    p.pre_penalties = p.post_penalties = {force_above(Axis::S, kOpp, kColl), force_above(Axis::T, kOpp, kColl),
                                          force_above(Axis::U, kOpp, kColl)};
    p.reward = {at_goal(Axis::S), at_goal(Axis::T), at_goal(Axis::U)};
    for (int mask = 0; mask < 8; ++mask) {
        for (int goals = 0; goals < 8; ++goals) {
            Observation o;
            for (int i = 0; i < 3; ++i) {
                o.opposing[static_cast<std::size_t>(i)] = (mask >> i & 1) ? 100.0 : 0.0;
                o.pos[static_cast<std::size_t>(i)] = (goals >> i & 1) ? 0.0 : 1.0;
            }
            const auto ev = evaluate(p, o);
            CHECK(ev.penalty == (mask != 0));
            CHECK(ev.reward == (goals == 7));
        }
    }
}

TEST_CASE("evaluate: reward monotone in the allowed force band") {
    const auto prog = compose(lookup("OP-PR"));
    Observation o = at_all_goals();
    o.along[0] = 2.0;  // below delta-zero
    REQUIRE(evaluate(prog, o).reward);
    for (double f = 2.0; f >= 0.0; f -= 0.25) {
        o.along[0] = f;
        CHECK(evaluate(prog, o).reward);
    }
}

TEST_CASE("evaluate: missing feature raises") {
    const auto prog = compose(lookup("NC-PC-b"));
    Observation o = at_all_goals();
    CHECK_THROWS_AS(evaluate(prog, o), EvaluationError);
    o.feature[2] = 0.0;
    CHECK_FALSE(evaluate(prog, o).penalty);
    o.pos[2] = 0.01;
    CHECK(evaluate(prog, o).penalty);
}

TEST_CASE("transition latch") {
    const auto staged = compose(lookup("NC-PC-b"));
    REQUIRE(staged.staged);
    std::vector<Observation> hist(6);
    const std::array<double, 6> fu{0.0, 0.5, 4.0, 1.0, 5.0, 0.0};
    for (std::size_t i = 0; i < hist.size(); ++i) hist[i].opposing[2] = fu[i];
    TransitionLatch latch(staged);
    std::vector<bool> flags;
    for (const auto& o : hist) flags.push_back(latch.update(o));
    CHECK(flags == std::vector<bool>{false, false, true, true, true, true});
    CHECK(detect_transition(staged, hist));
    CHECK_FALSE(detect_transition(staged, std::span(hist).first(2)));

    CHECK(detect_transition(compose(lookup("NC-NC")), {}));

    // Falling trigger for B5 staging: released once the force drops.
    const auto release = compose(lookup("PC-NC-b"));
    TransitionLatch fall(release);
    Observation held;
    held.opposing[2] = 10.0;
    CHECK_FALSE(fall.update(held));
    held.opposing[2] = 1.0;
    CHECK(fall.update(held));
}

TEST_CASE("property: latch never un-flips") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> f(0.0, 6.0);
    for (const auto& spec : registry()) {
        const auto prog = compose(spec);
        for (int trial = 0; trial < 10; ++trial) {
            TransitionLatch latch(prog);
            bool was = false;
            for (int k = 0; k < 30; ++k) {
                Observation o;
                for (auto& x : o.opposing) x = f(rng);
                const bool now = latch.update(o);
                CHECK((!was || now));
                was = now;
            }
        }
    }
}
