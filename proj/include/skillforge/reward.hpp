#pragma once

#include <array>
#include <compare>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skillforge/errors.hpp"
#include "skillforge/geometry.hpp"

namespace skillforge {

enum class Axis { S = 0, T = 1, U = 2 };
enum class AtomKind { ForceAbove, ForceBelow, AtGoal, FeatureGapAbove };
enum class Sense { None, Opposing, Along };
enum class ThresholdRef { DeltaZero, DeltaCollision, DeltaGap, Goal };

struct ConditionAtom {
    AtomKind kind = AtomKind::AtGoal;
    Axis axis = Axis::S;
    Sense sense = Sense::None;
    ThresholdRef threshold = ThresholdRef::Goal;

    friend auto operator<=>(const ConditionAtom&, const ConditionAtom&) = default;
};

using AtomSet = std::set<ConditionAtom>;

// Atom constructors matching the pseudocode spelling.
ConditionAtom force_above(Axis a, Sense s, ThresholdRef t);
ConditionAtom force_below(Axis a, Sense s, ThresholdRef t);
ConditionAtom at_goal(Axis a);
ConditionAtom feature_gap(Axis a);

struct RewardProgram {
    AtomSet pre_penalties;
    AtomSet post_penalties;
    AtomSet reward;
    bool staged = false;

    friend bool operator==(const RewardProgram&, const RewardProgram&) = default;
};

enum class Primitive { A1, A2, A3, B1, B2, B3, B4, B5, B6, B7, B8, B9 };

struct ProgramPatch {
    AtomSet add_pre, add_post, add_reward;
    AtomSet remove_pre, remove_post, remove_reward;
    std::optional<bool> staged;
};

struct SkillSpec {
    std::string name;
    std::optional<std::string> task_label;
    std::optional<std::string> task_title;  // e.g. "Pick"
    StateLabel from_state = StateLabel::NC;
    StateLabel to_state = StateLabel::NC;
    std::array<Primitive, 3> roles{Primitive::A1, Primitive::B1, Primitive::B1};  // S, T, U
    std::optional<ProgramPatch> overrides;
};

struct Thresholds {
    double delta_zero = 3.0;        // N
    double delta_collision = 30.0;  // N
    double delta_gap = 0.005;       // m
};

struct Observation {
    std::array<double, 3> pos{0, 0, 0};
    std::array<double, 3> opposing{0, 0, 0};
    std::array<double, 3> along{0, 0, 0};
    std::array<std::optional<double>, 3> feature{};
    std::array<double, 3> goal{0, 0, 0};
    std::array<double, 3> goal_tol{1e-3, 1e-3, 1e-3};
    Thresholds thresholds;
    bool after_transition = false;
};

enum class Termination { Success, PenaltyFailure, Timeout, Error };

struct Evaluation {
    bool penalty = false;
    bool reward = false;
    std::optional<Termination> terminate;
};

// Staging trigger derived from a program's pre-only atoms.
enum class TriggerEvent { Rising, Falling };
struct StageTrigger {
    Axis axis;
    TriggerEvent event;
    friend auto operator<=>(const StageTrigger&, const StageTrigger&) = default;
};

RewardProgram primitive_conditions(Primitive prim, Axis axis);
RewardProgram compose(const SkillSpec& spec);
RewardProgram apply_patch(RewardProgram program, const ProgramPatch& patch);

const std::vector<SkillSpec>& registry();
const SkillSpec& lookup(std::string_view name);  // throws std::out_of_range
const SkillSpec* find_skill(std::string_view name);

bool holds(const ConditionAtom& atom, const Observation& obs);
Evaluation evaluate(const RewardProgram& program, const Observation& obs);

std::set<StageTrigger> stage_triggers(const RewardProgram& program);
bool detect_transition(const RewardProgram& program, std::span<const Observation> history);

// Per-episode latch owned by a single runner.
class TransitionLatch {
public:
    explicit TransitionLatch(const RewardProgram& program);
    bool update(const Observation& obs);
    bool flag() const { return flag_; }

private:
    std::set<StageTrigger> triggers_;
    bool flag_;
};

// Pseudocode text.
std::string atom_text(const ConditionAtom& atom);
std::string print_program(const RewardProgram& program);

struct ParsedProgram {
    std::string name;
    std::optional<std::string> task_label;
    std::optional<std::string> task_title;
    RewardProgram program;
};
ParsedProgram parse_program(std::string_view text);

std::string_view to_string(Axis a);
std::string_view to_string(Primitive p);
std::string_view to_string(Termination t);
std::optional<Primitive> parse_primitive(std::string_view text);

}  // namespace skillforge
