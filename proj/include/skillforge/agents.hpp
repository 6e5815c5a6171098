#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "skillforge/reward.hpp"
#include "skillforge/sim.hpp"

namespace skillforge {

// Controller families. Directional = drawer/door skills that steer an
// estimated feasible direction; Wipe = PC1-PC1 force regulation; everything
// else moves toward its goals and relies on the reward program to stop.
enum class Family { Positional, Directional, Wipe };

Family family_of(const SkillSpec& spec);
bool is_rotational_skill(const SkillSpec& spec);

struct HingeAxis {
    Vec3 point = Vec3::Zero();
    Vec3 axis = Vec3::UnitZ();
};

struct SkillParameters {
    Vec3 S = Vec3::UnitX();
    Vec3 T = Vec3::UnitY();
    Vec3 U = Vec3::UnitZ();
    std::array<double, 3> goal{0, 0, 0};
    std::array<std::optional<double>, 3> feature{};
    Thresholds thresholds;
    double pos_tol = 1e-3;
    double ang_tol = 0.5 * 3.14159265358979323846 / 180.0;
    std::optional<HingeAxis> hinge;
    std::optional<Vec3> initial_direction;  // directional family; defaults to S
    std::optional<Vec3> surface_normal;     // wipe family (as observed); defaults to U
    double f_c = 10.0;
    int f_max = 10;
    int horizon = 200;
    double overshoot = 0.05;  // A2 skills keep pushing this far past goal-s before giving up
    double action_cap = 0.5;
};

struct AgentState {
    Vec3 c = Vec3::Zero();
    Vec3 f_n = Vec3::Zero();
    Vec3 n = Vec3::Zero();
    Vec3 dd = Vec3::Zero();
    int f_desc = 0;
};

struct AgentAction {
    Vec3 dc = Vec3::Zero();
    double dn = 0.0;
};

struct Percept {
    AgentState state;
    ForceReading reading;
    Vec3 f_target = Vec3::Zero();  // wipe only
    double step_size = 0.005;
};

class Controller {
public:
    virtual ~Controller() = default;
    virtual AgentAction act(const Percept& p) = 0;
    virtual void reset() {}
};

// Lateral-force compliance with a derivative term on the lateral force.
class AnalyticDirectional : public Controller {
public:
    AnalyticDirectional(double kp = 0.02, double kd = 0.03, double cap = 0.5) : kp_(kp), kd_(kd), cap_(cap) {}
    AgentAction act(const Percept& p) override;
    void reset() override { prev_.reset(); }

private:
    double kp_, kd_, cap_;
    std::optional<Vec3> prev_;
};

class AnalyticWipe : public Controller {
public:
    explicit AnalyticWipe(double kp = 3.2e-5) : kp_(kp) {}
    AgentAction act(const Percept& p) override;

private:
    double kp_;
};

// No feedback at all: the straight-line baseline.
class OpenLoop : public Controller {
public:
    AgentAction act(const Percept&) override { return {}; }
};

struct Policy {
    enum class Arch { Linear, Mlp };
    Arch arch = Arch::Linear;
    int hidden = 0;
    Family family = Family::Directional;
    std::string skill;
    std::uint64_t seed = 0;
    Eigen::VectorXd params;

    static Policy zeros(Family family, Arch arch, int hidden, std::string skill, std::uint64_t seed);
    int input_dim() const;
    int output_dim() const;
    static int param_count(Family family, Arch arch, int hidden);
    Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
};

Eigen::VectorXd encode_state(Family family, const AgentState& s, int f_max);

class PolicyController : public Controller {
public:
    PolicyController(Policy policy, int f_max = 10, double cap = 0.5)
        : policy_(std::move(policy)), f_max_(f_max), cap_(cap) {}
    AgentAction act(const Percept& p) override;

private:
    Policy policy_;
    int f_max_;
    double cap_;
};

std::unique_ptr<Controller> default_controller(const SkillSpec& spec);

// Formulas.
Vec3 direction_update(const Vec3& c, const Vec3& dc);
double prpr_reward(const Vec3& f);
struct Corotation {
    Pose pose;
    Vec3 direction;
};
Corotation rvrv_corotate(const Pose& pose, const Vec3& direction, const Vec3& axis, double theta,
                         const Vec3& grasp_center);
Corotation rvrv_corotate(const Pose& pose, const Vec3& old_direction, const Vec3& new_direction,
                         const Vec3& grasp_center);
Vec3 pc1pc1_target_force(const Vec3& f0, const Vec3& n, double f_c);
double pc1pc1_reward(int f_desc, bool detached, int f_max);

// Episode record.
struct StepRecord {
    int step = 0;
    double t = 0.0;
    Pose pose;
    ForceReading reading;
    AgentAction action;
    Vec3 direction = Vec3::Zero();
    Observation obs;
    double reward = 0.0;
    bool penalty = false;
    bool after_transition = false;
};

struct EpisodeTrace {
    std::string skill;
    std::vector<StepRecord> steps;
    Termination termination = Termination::Timeout;
    std::string reason;
    double total_reward = 0.0;

    double max_force() const;
    Vec3 max_abs_force() const;
};

struct RunOptions {
    bool terminate_on_penalty = true;
    bool terminate_on_success = true;
    std::optional<int> horizon;
};

Observation observe(const SkillSpec& spec, const SkillParameters& params, const Env& env, const Vec3& g0,
                    const Vec3& direction, bool after_transition);

EpisodeTrace run_skill(const SkillSpec& spec, Controller& controller, Env& env, const SkillParameters& params,
                       const RunOptions& options = {});

// Learner contract.
struct EpisodeSetup {
    Env env;
    SkillParameters params;
};
using EnvFactory = std::function<EpisodeSetup(std::uint64_t episode_seed)>;

struct LearnerConfig {
    enum class Method { CrossEntropy, FiniteDifference };
    Method method = Method::CrossEntropy;
    long long step_budget = 50000;
    int max_iterations = 1000;
    int population = 20;
    int elites = 5;
    int episodes_per_candidate = 4;
    int horizon = 40;
    double init_std = 0.03;
    double min_std = 0.002;
    double learning_rate = 0.02;
    Policy::Arch arch = Policy::Arch::Linear;
    int hidden = 8;
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = hardware concurrency
    // false: every iteration scores candidates on the same episode seeds, so
    // the curve compares like with like; true: fresh draws per iteration.
    bool fresh_episodes = false;
};

struct CurvePoint {
    int iteration = 0;
    double mean_reward = 0.0;
    double best_reward = 0.0;
};

struct TrainResult {
    Policy policy;
    std::vector<CurvePoint> curve;
    long long env_steps = 0;
};

// Return used for training: blown-up episodes pay the worst per-step reward
// seen for every remaining step of the horizon.
double episode_return(const EpisodeTrace& trace, int horizon);

TrainResult train(const SkillSpec& spec, const EnvFactory& factory, const LearnerConfig& config);

}  // namespace skillforge
