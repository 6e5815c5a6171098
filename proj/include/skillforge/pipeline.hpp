#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "skillforge/agents.hpp"

namespace skillforge {

struct TaskModel {
    std::string task;  // registry name, "grasp:<kind>" or "release"
    std::string actor;
    std::string object;
    std::optional<Pose> edc;
    std::optional<Vec3> dtd;
    std::string edl;  // kept verbatim, never interpreted

    bool is_marker() const;
};

struct TaskSequence {
    std::optional<std::string> scene;  // preset name the sequence was demonstrated on
    std::vector<TaskModel> tasks;
};

// Throws ParseError naming the JSON path of the offending slot.
TaskSequence parse_task_sequence(std::string_view json_text);
TaskSequence load_task_sequence(const std::string& path);

struct Binding {
    SkillParameters params;
    std::vector<std::string> warnings;
};

struct BindOptions {
    Thresholds thresholds;
    double feature_noise = 0.0;  // std-dev in meters
    std::uint64_t seed = 0;
};

Binding bind_parameters(const TaskModel& model, const Scene& scene, const Pose& start, const BindOptions& options = {});

class Carrier {
public:
    virtual ~Carrier() = default;
    virtual Pose realize(const Pose& target) = 0;
    virtual double tolerance() const = 0;
};

class IdentityCarrier : public Carrier {
public:
    Pose realize(const Pose& target) override { return target; }
    double tolerance() const override { return 0.0; }
};

// Achieves each target up to a uniform per-axis position error.
class JitteryCarrier : public Carrier {
public:
    JitteryCarrier(double amplitude, std::uint64_t seed) : amplitude_(amplitude), rng_(seed) {}
    Pose realize(const Pose& target) override;
    double tolerance() const override;

private:
    double amplitude_;
    std::mt19937_64 rng_;
};

using ControllerFactory = std::function<std::unique_ptr<Controller>(const SkillSpec&)>;

struct ExecuteOptions {
    BindOptions bind;
    std::optional<int> horizon;
    ControllerFactory controllers;  // empty: default_controller
};

struct SequenceResult {
    std::vector<EpisodeTrace> traces;
    std::vector<std::string> log;
    bool success = true;
};

// Runs the manipulation skills in order, chaining each start pose to the
// previous end pose through the carrier. Stops after the first failing trace.
SequenceResult execute_sequence(const TaskSequence& sequence, Env& env, Carrier& carrier,
                                const ExecuteOptions& options = {});

// Default single-skill task for `run <preset> <skill>`; nullopt when the
// preset cannot host the skill. `start` moves the hand before the run.
struct DefaultRun {
    TaskModel model;
    std::optional<Vec3> start;
};
std::optional<DefaultRun> default_task(std::string_view preset_name, const SkillSpec& spec);

// Scene, start pose and bound parameters for `run <preset> <skill>`. The
// scene is randomized with its configured normal noise under `seed`; binding
// uses the nominal scene. Throws SequencingError when the preset cannot host
// the skill or starts in the wrong contact state.
struct PreparedRun {
    Env env;
    SkillParameters params;
    std::vector<std::string> warnings;
};
PreparedRun prepare_run(const std::string& preset_name, const Scene& scene, const SkillSpec& spec,
                        const BindOptions& options = {});

// Rotates the estimated motion axis (and the starting direction) about U.
void apply_axis_error(SkillParameters& params, double angle_rad);

// Randomized training episodes around a preset's default task: a uniform
// axis error in [-axis_error, axis_error] for directional skills, surface
// normal noise for the wipe.
struct TrainingScenario {
    std::string preset;
    double axis_error_deg = 10.0;
    double normal_noise_deg = 3.0;
    Thresholds thresholds;
};
std::optional<std::string> default_preset(const SkillSpec& spec);
EnvFactory training_factory(const SkillSpec& spec, const TrainingScenario& scenario);

}  // namespace skillforge
