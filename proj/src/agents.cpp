#include "skillforge/agents.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>
#include <thread>

namespace skillforge {

namespace {

bool is_directional_state(StateLabel s) { return s == StateLabel::PR || s == StateLabel::OP || is_rotational(s); }

Vec3 safe_normalized(const Vec3& v, const Vec3& fallback) {
    const double n = v.norm();
    return n > 1e-12 ? Vec3(v / n) : fallback;
}

double clamp_abs(double x, double lim) { return std::clamp(x, -lim, lim); }

Vec3 cap_norm(const Vec3& v, double cap) {
    const double n = v.norm();
    return n > cap ? Vec3(v * (cap / n)) : v;
}

}  // namespace

Family family_of(const SkillSpec& spec) {
    if (spec.from_state == StateLabel::PC1 && spec.to_state == StateLabel::PC1) return Family::Wipe;
    if (is_directional_state(spec.from_state) && is_directional_state(spec.to_state)) return Family::Directional;
    return Family::Positional;
}

bool is_rotational_skill(const SkillSpec& spec) { return is_rotational(spec.from_state) || is_rotational(spec.to_state); }

// ---------------------------------------------------------------------------
// Formulas

Vec3 direction_update(const Vec3& c, const Vec3& dc) {
    if (std::abs(c.norm() - 1.0) > 1e-9) throw InputError("direction must be a unit vector");
    const Vec3 sum = c + dc;
    const double n = sum.norm();
    if (!(n > 1e-12)) throw DegenerateUpdate("direction correction cancels the current direction");
    return sum / n;
}

double prpr_reward(const Vec3& f) { return -f.norm(); }

Corotation rvrv_corotate(const Pose& pose, const Vec3& direction, const Vec3& axis, double theta,
                         const Vec3& grasp_center) {
    if (!(std::abs(theta) < std::numbers::pi / 2)) throw InputError("corotation angle must be below pi/2");
    if (theta == 0.0) return {pose, direction};
    if (!(axis.norm() > 1e-12)) throw InputError("corotation axis is zero");
    const Quat r = axis_angle(axis, theta);
    Corotation out;
    out.pose.p = grasp_center + r * (pose.p - grasp_center);
    out.pose.q = (r * pose.q).normalized();
    out.direction = r * direction;
    return out;
}

Corotation rvrv_corotate(const Pose& pose, const Vec3& old_direction, const Vec3& new_direction,
                         const Vec3& grasp_center) {
    const Vec3 axis = old_direction.cross(new_direction);
    const double theta = std::atan2(axis.norm(), old_direction.dot(new_direction));
    if (axis.norm() < 1e-15) return {pose, old_direction};
    return rvrv_corotate(pose, old_direction, axis, theta, grasp_center);
}

Vec3 pc1pc1_target_force(const Vec3& f0, const Vec3& n, double f_c) {
    if (std::abs(n.norm() - 1.0) > 1e-9) throw InputError("surface normal must be a unit vector");
    return f0 + (f_c - f0.dot(n)) * n;
}

double pc1pc1_reward(int f_desc, bool detached, int f_max) {
    if (f_max <= 0) throw InputError("f_max must be positive");
    if (f_desc > f_max || detached) return -static_cast<double>(f_max);
    return f_max / 2.0 - f_desc;
}

// ---------------------------------------------------------------------------
// Controllers

AgentAction AnalyticDirectional::act(const Percept& p) {
    // f is the reaction on the hand, so a rail pushing back along -y means the
    // commanded direction drifted toward +y: correct along f, not against it.
    const Vec3 df = p.reading.f - p.reading.f0;
    const Vec3& c = p.state.c;
    const Vec3 lat = df - df.dot(c) * c;
    const Vec3 rate = prev_ ? Vec3(lat - *prev_) : Vec3::Zero();
    prev_ = lat;
    AgentAction a;
    a.dc = cap_norm(kp_ * lat + kd_ * rate, cap_);
    return a;
}

AgentAction AnalyticWipe::act(const Percept& p) {
    AgentAction a;
    a.dn = clamp_abs(kp_ * (p.f_target.dot(p.state.n) - p.reading.f.dot(p.state.n)), p.step_size);
    return a;
}

Policy Policy::zeros(Family family, Arch arch, int hidden, std::string skill, std::uint64_t seed) {
    Policy p;
    p.family = family;
    p.arch = arch;
    p.hidden = arch == Arch::Mlp ? hidden : 0;
    p.skill = std::move(skill);
    p.seed = seed;
    p.params = Eigen::VectorXd::Zero(param_count(family, arch, p.hidden));
    return p;
}

namespace {
int family_input_dim(Family f) { return f == Family::Wipe ? 10 : 6; }
int family_output_dim(Family f) { return f == Family::Wipe ? 1 : 3; }
}  // namespace

int Policy::input_dim() const { return family_input_dim(family); }
int Policy::output_dim() const { return family_output_dim(family); }

int Policy::param_count(Family family, Arch arch, int hidden) {
    const int in = family_input_dim(family), out = family_output_dim(family);
    if (family == Family::Positional) throw InputError("positional skills have no learned policy");
    if (arch == Arch::Linear) return out * in + out;
    if (hidden <= 0) throw InputError("MLP needs a positive hidden width");
    return hidden * in + hidden + out * hidden + out;
}

Eigen::VectorXd Policy::forward(const Eigen::VectorXd& x) const {
    const int in = input_dim(), out = output_dim();
    if (x.size() != in) throw InputError("policy input has wrong dimension");
    if (params.size() != param_count(family, arch, hidden)) throw InputError("policy parameter count mismatch");
    using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    if (arch == Arch::Linear) {
        Eigen::Map<const Mat> w(params.data(), out, in);
        return w * x + params.segment(out * in, out);
    }
    int off = 0;
    Eigen::Map<const Mat> w1(params.data(), hidden, in);
    off += hidden * in;
    const Eigen::VectorXd b1 = params.segment(off, hidden);
    off += hidden;
    Eigen::Map<const Mat> w2(params.data() + off, out, hidden);
    off += out * hidden;
    const Eigen::VectorXd b2 = params.segment(off, out);
    const Eigen::VectorXd h = (w1 * x + b1).array().tanh().matrix();
    return w2 * h + b2;
}

Eigen::VectorXd encode_state(Family family, const AgentState& s, int f_max) {
    Eigen::VectorXd x(family_input_dim(family));
    if (family == Family::Wipe) {
        x << s.n, s.dd, s.f_n, static_cast<double>(s.f_desc) / std::max(1, f_max);
    } else {
        x << s.c, s.f_n;
    }
    return x;
}

AgentAction PolicyController::act(const Percept& p) {
    const Eigen::VectorXd y = policy_.forward(encode_state(policy_.family, p.state, f_max_));
    AgentAction a;
    if (policy_.family == Family::Wipe)
        a.dn = p.step_size * std::clamp(y(0), -1.0, 1.0);
    else
        a.dc = cap_norm(Vec3(y(0), y(1), y(2)), cap_);
    return a;
}

std::unique_ptr<Controller> default_controller(const SkillSpec& spec) {
    switch (family_of(spec)) {
        case Family::Directional: return std::make_unique<AnalyticDirectional>();
        case Family::Wipe: return std::make_unique<AnalyticWipe>();
        case Family::Positional: break;
    }
    return std::make_unique<OpenLoop>();
}

// ---------------------------------------------------------------------------
// Runner

double EpisodeTrace::max_force() const {
    double m = 0.0;
    for (const auto& s : steps) m = std::max(m, s.reading.f.norm());
    return m;
}

Vec3 EpisodeTrace::max_abs_force() const {
    Vec3 m = Vec3::Zero();
    for (const auto& s : steps) m = m.cwiseMax(s.reading.f.cwiseAbs());
    return m;
}

namespace {

struct RotationalFrame {
    Vec3 axis;
    Vec3 rel0p;
    Vec3 relp;
    Vec3 rel0;
    Vec3 rel;
    double sign;
};

RotationalFrame rotational_frame(const SkillParameters& P, const Vec3& g0, const Vec3& g) {
    RotationalFrame fr;
    fr.axis = P.hinge->axis.normalized();
    fr.rel0 = g0 - P.hinge->point;
    fr.rel = g - P.hinge->point;
    fr.rel0p = fr.rel0 - fr.rel0.dot(fr.axis) * fr.axis;
    fr.relp = fr.rel - fr.rel.dot(fr.axis) * fr.axis;
    const Vec3 tangent0 = fr.axis.cross(fr.rel0p);
    fr.sign = P.S.dot(tangent0) >= 0 ? 1.0 : -1.0;
    return fr;
}

}  // namespace

Observation observe(const SkillSpec& spec, const SkillParameters& P, const Env& env, const Vec3& g0,
                    const Vec3& direction, bool after_transition) {
    Observation o;
    o.thresholds = P.thresholds;
    o.after_transition = after_transition;
    o.goal = P.goal;
    o.feature = P.feature;
    const Family fam = family_of(spec);
    const Vec3 g = env.grasp_world();
    const Vec3& f = env.force();
    Vec3 s, t, u;
    if (is_rotational_skill(spec)) {
        if (!P.hinge) throw InputError("rotational skill needs a hinge axis");
        const auto fr = rotational_frame(P, g0, g);
        const double ang = std::atan2(fr.axis.dot(fr.rel0p.cross(fr.relp)), fr.rel0p.dot(fr.relp));
        o.pos = {fr.sign * ang, fr.relp.norm() - fr.rel0p.norm(), (fr.rel - fr.rel0).dot(fr.axis)};
        o.goal_tol = {P.ang_tol, P.pos_tol, P.pos_tol};
        t = safe_normalized(fr.relp, P.T);
        u = fr.axis;
        s = fam == Family::Directional ? direction : Vec3(fr.sign * u.cross(t));
    } else {
        const Vec3 d = g - g0;
        o.pos = {d.dot(P.S), d.dot(P.T), d.dot(P.U)};
        o.goal_tol = {P.pos_tol, P.pos_tol, P.pos_tol};
        if (fam == Family::Directional) {
            s = direction;
            t = safe_normalized(P.T - P.T.dot(s) * s, s.unitOrthogonal());
            u = s.cross(t);
        } else {
            s = P.S;
            t = P.T;
            u = P.U;
        }
    }
    o.opposing = {std::max(0.0, -f.dot(s)), std::abs(f.dot(t)), std::abs(f.dot(u))};
    o.along = {std::max(0.0, f.dot(s)), 0.0, 0.0};
    return o;
}

EpisodeTrace run_skill(const SkillSpec& spec, Controller& controller, Env& env, const SkillParameters& P,
                       const RunOptions& options) {
    const RewardProgram program = compose(spec);
    const Family fam = family_of(spec);
    const bool rot = is_rotational_skill(spec);
    if (rot && !P.hinge) throw InputError("rotational skill needs a hinge axis");
    const int horizon = options.horizon.value_or(P.horizon);
    if (horizon < 0) throw InputError("horizon must be non-negative");
    const double step = env.scene().config.step_size;
    const bool pushes = spec.roles[0] == Primitive::A2;

    controller.reset();
    env.set_baseline();
    const Vec3 g0 = env.grasp_world();
    Vec3 c = safe_normalized(P.initial_direction.value_or(P.S), P.S);
    const Vec3 n_obs = safe_normalized(P.surface_normal.value_or(P.U), Vec3::UnitZ());
    const Vec3 f_target = pc1pc1_target_force(env.baseline(), n_obs, P.f_c);
    TransitionLatch latch(program);

    EpisodeTrace tr;
    tr.skill = spec.name;
    for (int k = 0;; ++k) {
        StepRecord rec;
        rec.step = k;
        rec.t = env.time();
        rec.pose = env.hand_pose();
        rec.reading = env.reading();
        rec.direction = c;
        rec.obs = observe(spec, P, env, g0, c, latch.flag());
        rec.obs.after_transition = latch.update(rec.obs);
        rec.after_transition = rec.obs.after_transition;
        const Evaluation ev = evaluate(program, rec.obs);
        rec.penalty = ev.penalty;

        const Sensed wipe_sense = sense(rec.reading.f, f_target, env.scene().config.f_step);
        switch (fam) {
            case Family::Directional: rec.reward = prpr_reward(rec.reading.f - rec.reading.f0); break;
            case Family::Wipe: rec.reward = pc1pc1_reward(wipe_sense.f_desc, !env.in_contact(), P.f_max); break;
            case Family::Positional: rec.reward = ev.penalty ? -1.0 : (ev.reward ? 1.0 : 0.0); break;
        }

        std::optional<Termination> term;
        if (ev.penalty && options.terminate_on_penalty) {
            term = Termination::PenaltyFailure;
            tr.reason = "penalty condition held";
        } else if (ev.reward && !ev.penalty && options.terminate_on_success) {
            term = Termination::Success;
            tr.reason = "reward condition held";
        } else if (k >= horizon) {
            if (fam == Family::Wipe) {
                term = Termination::Success;
                tr.reason = "duration elapsed in contact";
                rec.reward += P.f_max / 2.0;
            } else {
                term = Termination::Timeout;
                tr.reason = "horizon reached";
            }
        }
        if (term) {
            tr.termination = *term;
            tr.steps.push_back(rec);
            break;
        }

        Percept pc;
        pc.reading = rec.reading;
        pc.step_size = step;
        Vec3 dp = Vec3::Zero();
        Quat dq = Quat::Identity();
        Vec3 c_next = c;

        if (fam == Family::Directional) {
            pc.state.c = c;
            pc.state.f_n = rec.reading.f_n;
            rec.action = controller.act(pc);
            rec.action.dc = cap_norm(rec.action.dc, P.action_cap);
            c_next = direction_update(c, rec.action.dc);
            const auto& o = rec.obs;
            double L = step;
            double scale = 1.0;  // meters per unit of S
            if (rot) scale = rotational_frame(P, g0, env.grasp_world()).relp.norm();
            if (pushes) {
                if (o.pos[0] > o.goal[0] + P.overshoot / scale) L = 0.0;
            } else {
                const double remaining = o.goal[0] - o.pos[0];
                if (rot) {
                    L = clamp_abs(remaining * scale, step);
                } else {
                    const double rate = c_next.dot(P.S);
                    if (rate > 1e-6) L = clamp_abs(remaining / rate, step);
                }
            }
            if (rot) {
                const auto co = rvrv_corotate(rec.pose, c, c_next, rec.pose.p);
                dq = (co.pose.q * rec.pose.q.inverse()).normalized();
            }
            dp = L * c_next;
        } else if (fam == Family::Wipe) {
            const auto& o = rec.obs;
            Vec3 along = (o.goal[0] - o.pos[0]) * P.S + (o.goal[1] - o.pos[1]) * P.T;
            along -= along.dot(n_obs) * n_obs;
            const double L = std::min(step, along.norm());
            pc.state.n = n_obs;
            pc.state.dd = safe_normalized(along, Vec3::Zero());
            pc.state.f_n = wipe_sense.f_n;
            pc.state.f_desc = wipe_sense.f_desc;
            pc.f_target = f_target;
            rec.action = controller.act(pc);
            rec.action.dn = clamp_abs(rec.action.dn, step);
            dp = L * pc.state.dd - rec.action.dn * n_obs;
        } else {
            const auto& o = rec.obs;
            std::array<double, 3> err{};
            for (int i = 0; i < 3; ++i) err[i] = o.goal[i] - o.pos[i];
            if (pushes) err[0] = o.pos[0] < o.goal[0] + P.overshoot ? step : 0.0;
            dp = err[0] * P.S + err[1] * P.T + err[2] * P.U;
            dp = cap_norm(dp, step);
        }

        tr.steps.push_back(rec);
        try {
            env.step(dp, dq);
        } catch (const SimulationBlowup& e) {
            tr.termination = Termination::Error;
            tr.reason = e.what();
            break;
        }
        c = c_next;
    }
    tr.total_reward = 0.0;
    for (const auto& s : tr.steps) tr.total_reward += s.reward;
    return tr;
}

// ---------------------------------------------------------------------------
// Learner

double episode_return(const EpisodeTrace& trace, int horizon) {
    double total = 0.0, worst = 0.0;
    for (const auto& s : trace.steps) {
        total += s.reward;
        worst = std::min(worst, s.reward);
    }
    if (trace.termination == Termination::Error) {
        const int remaining = std::max(0, horizon + 1 - static_cast<int>(trace.steps.size()));
        total += remaining * worst;
    }
    return total;
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t episode_seed(std::uint64_t seed, int iteration, int episode) {
    return splitmix(splitmix(seed ^ splitmix(static_cast<std::uint64_t>(iteration) + 1)) +
                    static_cast<std::uint64_t>(episode));
}

struct Score {
    double value = 0.0;
    long long steps = 0;
};

// Runs fn(i) for i in [0, n) on up to `threads` workers; results land by index.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
    int workers = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

Score evaluate_candidate(const SkillSpec& spec, const EnvFactory& factory, const LearnerConfig& cfg,
                         const Policy& policy, int iteration) {
    Score sc;
    for (int e = 0; e < cfg.episodes_per_candidate; ++e) {
        auto setup = factory(episode_seed(cfg.seed, cfg.fresh_episodes ? iteration : 0, e));
        PolicyController ctrl(policy, setup.params.f_max, setup.params.action_cap);
        RunOptions opt;
        opt.terminate_on_penalty = false;
        opt.horizon = cfg.horizon;
        const auto tr = run_skill(spec, ctrl, setup.env, setup.params, opt);
        sc.value += episode_return(tr, cfg.horizon);
        sc.steps += static_cast<long long>(tr.steps.size()) - 1;
    }
    sc.value /= std::max(1, cfg.episodes_per_candidate);
    return sc;
}

}  // namespace

TrainResult train(const SkillSpec& spec, const EnvFactory& factory, const LearnerConfig& cfg) {
    const Family fam = family_of(spec);
    if (fam == Family::Positional) throw TrainingError("skill " + spec.name + " has no learnable controller");
    if (cfg.population < 2 || cfg.elites < 1 || cfg.elites > cfg.population)
        throw InputError("population must be >= 2 and elites in [1, population]");
    if (cfg.episodes_per_candidate < 1 || cfg.horizon < 1) throw InputError("episodes and horizon must be positive");
    if (!(cfg.init_std > 0) || !(cfg.min_std >= 0)) throw InputError("bad exploration scale");

    TrainResult res;
    res.policy = Policy::zeros(fam, cfg.arch, cfg.hidden, spec.name, cfg.seed);
    const int dim = static_cast<int>(res.policy.params.size());
    Eigen::VectorXd mu = res.policy.params;
    Eigen::VectorXd sigma = Eigen::VectorXd::Constant(dim, cfg.init_std);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double best_value = -kInf;

    const bool fd = cfg.method == LearnerConfig::Method::FiniteDifference;
    const int pairs = cfg.population / 2;
    const int pop = fd ? 2 * pairs : cfg.population;
    // The budget is a hard ceiling: only start an iteration whose worst case fits.
    const long long worst_iteration = static_cast<long long>(pop) * cfg.episodes_per_candidate * cfg.horizon;
    for (int it = 0; it < cfg.max_iterations && res.env_steps + worst_iteration <= cfg.step_budget; ++it) {
        std::vector<Eigen::VectorXd> noise(fd ? pairs : pop, Eigen::VectorXd(dim));
        for (auto& eps : noise)
            for (int d = 0; d < dim; ++d) eps(d) = gauss(rng);
        std::vector<Policy> cands(pop, res.policy);
        for (int j = 0; j < pop; ++j) {
            if (fd)
                cands[j].params = mu + (j % 2 == 0 ? 1.0 : -1.0) * cfg.init_std * noise[j / 2];
            else
                cands[j].params = mu + sigma.cwiseProduct(noise[j]);
        }

        std::vector<Score> scores(pop);
        parallel_for(pop, cfg.threads,
                     [&](int j) { scores[j] = evaluate_candidate(spec, factory, cfg, cands[j], it); });

        CurvePoint cp;
        cp.iteration = it;
        cp.best_reward = -kInf;
        for (int j = 0; j < pop; ++j) {
            if (!std::isfinite(scores[j].value))
                throw TrainingError("non-finite episode return at iteration " + std::to_string(it) +
                                    ", candidate " + std::to_string(j));
            res.env_steps += scores[j].steps;
            cp.mean_reward += scores[j].value / pop;
            if (scores[j].value > cp.best_reward) cp.best_reward = scores[j].value;
            if (scores[j].value > best_value) {
                best_value = scores[j].value;
                res.policy.params = cands[j].params;
            }
        }
        res.curve.push_back(cp);

        if (fd) {
            Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
            double mean = 0.0, var = 0.0;
            for (const auto& s : scores) mean += s.value / pop;
            for (const auto& s : scores) var += (s.value - mean) * (s.value - mean) / pop;
            for (int p = 0; p < pairs; ++p) g += (scores[2 * p].value - scores[2 * p + 1].value) * noise[p];
            g /= (2.0 * pairs * (std::sqrt(var) + 1e-8));
            mu += cfg.learning_rate * g;
        } else {
            std::vector<int> order(pop);
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(),
                             [&](int a, int b) { return scores[a].value > scores[b].value; });
            Eigen::VectorXd m = Eigen::VectorXd::Zero(dim);
            for (int e = 0; e < cfg.elites; ++e) m += cands[order[e]].params / cfg.elites;
            Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
            for (int e = 0; e < cfg.elites; ++e)
                v += (cands[order[e]].params - m).cwiseAbs2() / cfg.elites;
            mu = m;
            sigma = v.cwiseSqrt().cwiseMax(cfg.min_std);
        }
    }
    return res;
}

}  // namespace skillforge
