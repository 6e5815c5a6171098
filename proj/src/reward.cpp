#include "skillforge/reward.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace skillforge {

ConditionAtom force_above(Axis a, Sense s, ThresholdRef t) { return {AtomKind::ForceAbove, a, s, t}; }
ConditionAtom force_below(Axis a, Sense s, ThresholdRef t) { return {AtomKind::ForceBelow, a, s, t}; }
ConditionAtom at_goal(Axis a) { return {AtomKind::AtGoal, a, Sense::None, ThresholdRef::Goal}; }
ConditionAtom feature_gap(Axis a) { return {AtomKind::FeatureGapAbove, a, Sense::None, ThresholdRef::DeltaGap}; }

namespace {

constexpr auto kOpp = Sense::Opposing;
constexpr auto kZero = ThresholdRef::DeltaZero;
constexpr auto kColl = ThresholdRef::DeltaCollision;

bool is_a(Primitive p) { return p == Primitive::A1 || p == Primitive::A2 || p == Primitive::A3; }

RewardProgram unstaged_penalties(AtomSet pen, AtomSet reward = {}) {
    RewardProgram p;
    p.pre_penalties = pen;
    p.post_penalties = std::move(pen);
    p.reward = std::move(reward);
    return p;
}

void check_program(const RewardProgram& p) {
    for (const auto& a : p.post_penalties)
        if (a.kind == AtomKind::FeatureGapAbove)
            throw CompositionError("feature-gap atom is only valid before the transition");
    if (!p.staged && p.pre_penalties != p.post_penalties)
        throw CompositionError("unstaged program must have identical pre/post penalties");
    if (p.reward.empty()) throw CompositionError("reward set must be non-empty");
}

}  // namespace

RewardProgram primitive_conditions(Primitive prim, Axis axis) {
    const bool s_axis = axis == Axis::S;
    if (is_a(prim) != s_axis)
        throw ContractViolation(std::string(to_string(prim)) + " cannot be assigned to axis " +
                                std::string(to_string(axis)));
    const auto above_coll = force_above(axis, kOpp, kColl);
    const auto below_zero = force_below(axis, kOpp, kZero);
    RewardProgram p;
    switch (prim) {
        case Primitive::A1: p.reward = {at_goal(axis)}; break;
        case Primitive::A2: p.reward = {force_above(axis, kOpp, kZero)}; break;
        case Primitive::A3: p.reward = {force_below(axis, Sense::Along, kZero), at_goal(axis)}; break;
        case Primitive::B1: p.reward = {at_goal(axis)}; break;
        case Primitive::B2:
        case Primitive::B6:
        case Primitive::B7: p = unstaged_penalties({above_coll, below_zero}); break;
        case Primitive::B3: p = unstaged_penalties({above_coll}); break;
        case Primitive::B4:
            p.staged = true;
            p.pre_penalties = {feature_gap(axis)};
            p.post_penalties = {above_coll, below_zero};
            break;
        case Primitive::B5:
            p.staged = true;
            p.pre_penalties = {above_coll, below_zero};
            p.reward = {below_zero, at_goal(axis)};
            break;
        case Primitive::B8: p = unstaged_penalties({above_coll}, {below_zero, at_goal(axis)}); break;
        case Primitive::B9:
            p.staged = true;
            p.pre_penalties = {feature_gap(axis)};
            p.post_penalties = {above_coll};
            break;
    }
    return p;
}

RewardProgram apply_patch(RewardProgram program, const ProgramPatch& patch) {
    auto conflict = [](const AtomSet& add, const AtomSet& remove) {
        return std::any_of(add.begin(), add.end(), [&](const ConditionAtom& a) { return remove.count(a) > 0; });
    };
    if (conflict(patch.add_pre, patch.remove_pre) || conflict(patch.add_post, patch.remove_post) ||
        conflict(patch.add_reward, patch.remove_reward))
        throw CompositionError("override both adds and removes the same atom");
    auto edit = [](AtomSet& set, const AtomSet& add, const AtomSet& remove) {
        for (const auto& a : remove) set.erase(a);
        set.insert(add.begin(), add.end());
    };
    edit(program.pre_penalties, patch.add_pre, patch.remove_pre);
    edit(program.post_penalties, patch.add_post, patch.remove_post);
    edit(program.reward, patch.add_reward, patch.remove_reward);
    if (patch.staged) program.staged = *patch.staged;
    return program;
}

RewardProgram compose(const SkillSpec& spec) {
    RewardProgram out;
    static constexpr std::array<Axis, 3> axes{Axis::S, Axis::T, Axis::U};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto frag = primitive_conditions(spec.roles[i], axes[i]);
        out.pre_penalties.insert(frag.pre_penalties.begin(), frag.pre_penalties.end());
        out.post_penalties.insert(frag.post_penalties.begin(), frag.post_penalties.end());
        out.reward.insert(frag.reward.begin(), frag.reward.end());
        out.staged = out.staged || frag.staged;
    }
    if (spec.overrides) out = apply_patch(std::move(out), *spec.overrides);
    check_program(out);
    return out;
}

// ---------------------------------------------------------------------------
// Registry

namespace {

using P = Primitive;
using L = StateLabel;

SkillSpec entry(std::string name, L from, L to, P s, P t, P u, std::optional<std::string> label = std::nullopt,
                std::optional<std::string> title = std::nullopt) {
    SkillSpec spec;
    spec.name = std::move(name);
    spec.from_state = from;
    spec.to_state = to;
    spec.roles = {s, t, u};
    spec.task_label = std::move(label);
    spec.task_title = std::move(title);
    return spec;
}

std::vector<SkillSpec> build_registry() {
    std::vector<SkillSpec> r;
    // Interstate translational.
    r.push_back(entry("PC-NC-a", L::PC1, L::NC, P::A3, P::B1, P::B1, "PTG11", "Pick"));
    r.push_back(entry("PC-NC-b", L::PC1, L::NC, P::A1, P::B1, P::B5));
    r.push_back(entry("NC-PC-a", L::NC, L::PC1, P::A2, P::B1, P::B1, "PTG13", "Place"));
    r.push_back(entry("NC-PC-b", L::NC, L::PC1, P::A1, P::B1, P::B4));
    r.push_back(entry("TR-NC", L::TR, L::NC, P::A1, P::B1, P::B8));
    r.push_back(entry("NC-TR", L::NC, L::TR, P::A1, P::B1, P::B9));
    r.push_back(entry("TR-PC", L::TR, L::PC1, P::A1, P::B1, P::B7));
    r.push_back(entry("PC-TR", L::PC1, L::TR, P::A1, P::B1, P::B6));
    r.push_back(entry("PR-NC", L::PR, L::NC, P::A1, P::B8, P::B8));
    r.push_back(entry("NC-PR", L::NC, L::PR, P::A1, P::B9, P::B9));
    r.push_back(entry("PR-PC", L::PR, L::PC1, P::A1, P::B8, P::B7));
    r.push_back(entry("PC-PR", L::PC1, L::PR, P::A1, P::B6, P::B9));
    r.push_back(entry("PR-TR", L::PR, L::TR, P::A1, P::B8, P::B3));
    r.push_back(entry("TR-PR", L::TR, L::PR, P::A1, P::B9, P::B3));
    r.push_back(entry("PR-OT", L::PR, L::OT1, P::A1, P::B3, P::B7));
    r.push_back(entry("OT-PR", L::OT1, L::PR, P::A1, P::B3, P::B6));
    r.push_back(entry("OP-PR", L::OP, L::PR, P::A3, P::B3, P::B3, "PTG31", "Drawer-open"));
    r.push_back(entry("PR-OP", L::PR, L::OP, P::A2, P::B3, P::B3, "PTG33", "Drawer-close"));
    r.push_back(entry("OT-NC", L::OT1, L::NC, P::A1, P::B5, P::B8));
    r.push_back(entry("NC-OT", L::NC, L::OT1, P::A1, P::B4, P::B9));
    r.push_back(entry("OT-PC-a", L::OT1, L::PC1, P::A1, P::B2, P::B8));
    r.push_back(entry("OT-PC-b", L::OT1, L::PC1, P::A1, P::B5, P::B7));
    r.push_back(entry("PC-OT-a", L::PC1, L::OT1, P::A1, P::B2, P::B9));
    r.push_back(entry("PC-OT-b", L::PC1, L::OT1, P::A1, P::B4, P::B6));
    r.push_back(entry("OT-TR-a", L::OT1, L::TR, P::A3, P::B1, P::B3));
    r.push_back(entry("OT-TR-b", L::OT1, L::TR, P::A1, P::B3, P::B5));
    r.push_back(entry("TR-OT-a", L::TR, L::OT1, P::A2, P::B1, P::B3));
    r.push_back(entry("TR-OT-b", L::TR, L::OT1, P::A1, P::B3, P::B4));
    // Intrastate translational.
    r.push_back(entry("NC-NC", L::NC, L::NC, P::A1, P::B1, P::B1, "PTG12", "Bring"));
    r.push_back(entry("PC1-PC1", L::PC1, L::PC1, P::A1, P::B1, P::B2, "STG2", "Wipe"));
    r.push_back(entry("PC1-PC2", L::PC1, L::PC2, P::A2, P::B1, P::B2));
    r.push_back(entry("PC2-PC1", L::PC2, L::PC1, P::A3, P::B1, P::B2));
    r.push_back(entry("PC2-PC2", L::PC2, L::PC2, P::A1, P::B2, P::B2));
    r.push_back(entry("PC2-PCN", L::PC2, L::PCN, P::A2, P::B2, P::B2));
    r.push_back(entry("PCN-PC2", L::PCN, L::PC2, P::A3, P::B2, P::B2));
    r.push_back(entry("TR-TR", L::TR, L::TR, P::A1, P::B1, P::B3));
    r.push_back(entry("OT1-OT1", L::OT1, L::OT1, P::A1, P::B2, P::B3));
    r.push_back(entry("OT1-OT2", L::OT1, L::OT2, P::A2, P::B2, P::B3));
    r.push_back(entry("OT2-OT1", L::OT2, L::OT1, P::A3, P::B2, P::B3));
    r.push_back(entry("PR-PR", L::PR, L::PR, P::A1, P::B3, P::B3, "PTG32", "Drawer-adjust"));
    // Rotational (door family).
    r.push_back(entry("OR-RV", L::OR, L::RV, P::A3, P::B3, P::B3, "PTG51", "Door-open"));
    r.push_back(entry("RV-OR", L::RV, L::OR, P::A2, P::B3, P::B3, "PTG53", "Door-close"));
    r.push_back(entry("RV-RV", L::RV, L::RV, P::A1, P::B3, P::B3, "PTG52", "Door-adjust"));
    return r;
}

}  // namespace

const std::vector<SkillSpec>& registry() {
    static const std::vector<SkillSpec> r = build_registry();
    return r;
}

const SkillSpec* find_skill(std::string_view name) {
    for (const auto& s : registry())
        if (s.name == name) return &s;
    return nullptr;
}

const SkillSpec& lookup(std::string_view name) {
    if (const auto* s = find_skill(name)) return *s;
    throw std::out_of_range("unknown skill: " + std::string(name));
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

double threshold_value(ThresholdRef ref, const Thresholds& th) {
    switch (ref) {
        case ThresholdRef::DeltaZero: return th.delta_zero;
        case ThresholdRef::DeltaCollision: return th.delta_collision;
        case ThresholdRef::DeltaGap: return th.delta_gap;
        case ThresholdRef::Goal: break;
    }
    throw ContractViolation("force atom references a goal");
}

}  // namespace

bool holds(const ConditionAtom& atom, const Observation& obs) {
    const auto i = static_cast<std::size_t>(atom.axis);
    switch (atom.kind) {
        case AtomKind::ForceAbove:
        case AtomKind::ForceBelow: {
            const double f = atom.sense == Sense::Along ? obs.along[i] : obs.opposing[i];
            const double thr = threshold_value(atom.threshold, obs.thresholds);
            return atom.kind == AtomKind::ForceAbove ? f > thr : f < thr;
        }
        case AtomKind::AtGoal: return std::abs(obs.pos[i] - obs.goal[i]) <= obs.goal_tol[i];
        case AtomKind::FeatureGapAbove:
            if (!obs.feature[i])
                throw EvaluationError("feature-" + std::string(1, "stu"[i]) + " is required but absent");
            return std::abs(obs.pos[i] - *obs.feature[i]) > obs.thresholds.delta_gap;
    }
    return false;
}

Evaluation evaluate(const RewardProgram& program, const Observation& obs) {
    const bool post = !program.staged || obs.after_transition;
    const auto& active = post ? program.post_penalties : program.pre_penalties;
    Evaluation ev;
    for (const auto& a : active) ev.penalty = holds(a, obs) || ev.penalty;
    // Staged programs only pay out after the transition.
    if (post && !program.reward.empty()) {
        ev.reward = true;
        for (const auto& a : program.reward) ev.reward = holds(a, obs) && ev.reward;
    }
    if (ev.penalty)
        ev.terminate = Termination::PenaltyFailure;
    else if (ev.reward)
        ev.terminate = Termination::Success;
    return ev;
}

std::set<StageTrigger> stage_triggers(const RewardProgram& program) {
    std::set<StageTrigger> out;
    if (!program.staged) return out;
    for (const auto& a : program.pre_penalties) {
        if (program.post_penalties.count(a)) continue;
        if (a.kind == AtomKind::FeatureGapAbove) out.insert({a.axis, TriggerEvent::Rising});
        if (a.kind == AtomKind::ForceBelow && a.threshold == ThresholdRef::DeltaZero)
            out.insert({a.axis, TriggerEvent::Falling});
    }
    return out;
}

TransitionLatch::TransitionLatch(const RewardProgram& program)
    : triggers_(stage_triggers(program)), flag_(!program.staged) {}

bool TransitionLatch::update(const Observation& obs) {
    if (flag_) return true;
    for (const auto& t : triggers_) {
        const double f = obs.opposing[static_cast<std::size_t>(t.axis)];
        const double dz = obs.thresholds.delta_zero;
        if ((t.event == TriggerEvent::Rising && f > dz) || (t.event == TriggerEvent::Falling && f < dz))
            flag_ = true;
    }
    return flag_;
}

bool detect_transition(const RewardProgram& program, std::span<const Observation> history) {
    TransitionLatch latch(program);
    for (const auto& o : history) latch.update(o);
    return latch.flag();
}

// ---------------------------------------------------------------------------
// Pseudocode printing and parsing

std::string_view to_string(Axis a) {
    switch (a) {
        case Axis::S: return "S";
        case Axis::T: return "T";
        case Axis::U: return "U";
    }
    return "?";
}

std::string_view to_string(Primitive p) {
    static constexpr std::array<std::string_view, 12> names{"A1", "A2", "A3", "B1", "B2", "B3",
                                                            "B4", "B5", "B6", "B7", "B8", "B9"};
    return names[static_cast<std::size_t>(p)];
}

std::optional<Primitive> parse_primitive(std::string_view text) {
    for (int i = 0; i < 12; ++i)
        if (to_string(static_cast<Primitive>(i)) == text) return static_cast<Primitive>(i);
    return std::nullopt;
}

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::Success: return "success";
        case Termination::PenaltyFailure: return "penalty-failure";
        case Termination::Timeout: return "timeout";
        case Termination::Error: return "error";
    }
    return "?";
}

namespace {

char lower_axis(Axis a) { return "stu"[static_cast<std::size_t>(a)]; }

std::string_view threshold_name(ThresholdRef t) {
    switch (t) {
        case ThresholdRef::DeltaZero: return "delta-zero";
        case ThresholdRef::DeltaCollision: return "delta-collision";
        case ThresholdRef::DeltaGap: return "delta-gap";
        case ThresholdRef::Goal: return "goal";
    }
    return "?";
}

int print_rank(const ConditionAtom& a) {
    int kind = 0;
    switch (a.kind) {
        case AtomKind::ForceAbove: kind = 0; break;
        case AtomKind::ForceBelow: kind = 1; break;
        case AtomKind::FeatureGapAbove: kind = 2; break;
        case AtomKind::AtGoal: kind = 3; break;
    }
    return static_cast<int>(a.axis) * 10 + kind;
}

std::vector<ConditionAtom> print_order(const AtomSet& set) {
    std::vector<ConditionAtom> v(set.begin(), set.end());
    std::stable_sort(v.begin(), v.end(),
                     [](const ConditionAtom& x, const ConditionAtom& y) { return print_rank(x) < print_rank(y); });
    return v;
}

AtomSet set_minus(const AtomSet& a, const AtomSet& b) {
    AtomSet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

AtomSet set_and(const AtomSet& a, const AtomSet& b) {
    AtomSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

}  // namespace

std::string atom_text(const ConditionAtom& a) {
    const std::string ax(to_string(a.axis));
    const std::string lo(1, lower_axis(a.axis));
    switch (a.kind) {
        case AtomKind::ForceAbove:
        case AtomKind::ForceBelow:
            return std::string("F") + (a.sense == Sense::Along ? "+" : "-") + lo +
                   (a.kind == AtomKind::ForceAbove ? " > " : " < ") + std::string(threshold_name(a.threshold));
        case AtomKind::AtGoal: return ax + " = goal-" + lo;
        case AtomKind::FeatureGapAbove: return "|" + ax + " - feature-" + lo + "| > delta-gap";
    }
    return "?";
}

std::string print_program(const RewardProgram& p) {
    std::ostringstream os;
    auto penalties = [&](const AtomSet& set, const std::string& indent) {
        for (const auto& a : print_order(set)) os << indent << "if " << atom_text(a) << ", then penalty\n";
    };
    auto reward = [&](const std::string& indent) {
        os << indent << "if ";
        bool first = true;
        for (const auto& a : print_order(p.reward)) {
            os << (first ? "" : " AND ") << atom_text(a);
            first = false;
        }
        os << ", then reward\n";
    };
    if (!p.staged) {
        penalties(p.post_penalties, "");
        reward("");
        return os.str();
    }
    const AtomSet common = set_and(p.pre_penalties, p.post_penalties);
    penalties(common, "");
    os << "if NOT(AfterTransition):\n";
    penalties(set_minus(p.pre_penalties, common), "  ");
    os << "else:\n";
    penalties(set_minus(p.post_penalties, common), "  ");
    reward("  ");
    return os.str();
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string collapse_spaces(const std::string& s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (c == ' ' || c == '\t') {
            space = true;
            continue;
        }
        if (space && !out.empty()) out += ' ';
        space = false;
        out += c;
    }
    return out;
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

Axis axis_from(char c, int line) {
    switch (std::tolower(static_cast<unsigned char>(c))) {
        case 's': return Axis::S;
        case 't': return Axis::T;
        case 'u': return Axis::U;
    }
    throw ParseError("line " + std::to_string(line) + ": unknown axis '" + std::string(1, c) + "'");
}

ConditionAtom parse_atom(const std::string& raw, int line) {
    std::string s;
    for (char c : raw)
        if (c != ' ') s += c;
    static const std::regex force_re(R"(^F([-+])([stuSTU])([<>])(delta-zero|delta-collision)$)");
    static const std::regex goal_re(R"(^([STU])=goal-([stu])$)");
    static const std::regex gap_re(R"(^\|([STU])-feature-([stu])\|>delta-gap$)");
    std::smatch m;
    if (std::regex_match(s, m, force_re)) {
        const Axis a = axis_from(m[2].str()[0], line);
        const Sense sense = m[1] == "+" ? Sense::Along : Sense::Opposing;
        const ThresholdRef thr = m[4] == "delta-zero" ? ThresholdRef::DeltaZero : ThresholdRef::DeltaCollision;
        return m[3] == ">" ? force_above(a, sense, thr) : force_below(a, sense, thr);
    }
    if (std::regex_match(s, m, goal_re)) {
        const Axis a = axis_from(m[1].str()[0], line);
        if (axis_from(m[2].str()[0], line) != a) throw ParseError("line " + std::to_string(line) + ": goal axis mismatch");
        return at_goal(a);
    }
    if (std::regex_match(s, m, gap_re)) {
        const Axis a = axis_from(m[1].str()[0], line);
        if (axis_from(m[2].str()[0], line) != a)
            throw ParseError("line " + std::to_string(line) + ": feature axis mismatch");
        return feature_gap(a);
    }
    throw ParseError("line " + std::to_string(line) + ": cannot parse condition '" + trim(raw) + "'");
}

struct Statement {
    int indent;
    int line;
    std::string text;
};

}  // namespace

ParsedProgram parse_program(std::string_view text) {
    ParsedProgram out;
    std::vector<Statement> stmts;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    bool have_header = false;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string t = trim(raw);
        if (t.empty() || t[0] == '#') continue;
        const int indent = static_cast<int>(raw.find_first_not_of(" \t"));
        if (!have_header && t.rfind("Reward", 0) == 0) {
            have_header = true;
            std::istringstream hs(t.substr(6));
            hs >> out.name;
            static const std::regex label_re(R"(\(\s*([A-Z]+[0-9]+)\s*(?:\(([^)]*)\))?)");
            std::smatch m;
            if (std::regex_search(t, m, label_re)) {
                out.task_label = m[1].str();
                if (m[2].matched) out.task_title = m[2].str();
            }
            continue;
        }
        const std::string lt = lower(t);
        const bool starts = lt.rfind("if ", 0) == 0 || lt.rfind("if(", 0) == 0 || lt.rfind("else", 0) == 0;
        if (starts || stmts.empty())
            stmts.push_back({indent, line_no, t});
        else
            stmts.back().text += " " + t;
    }

    enum class Block { None, Pre, Post };
    Block block = Block::None;
    int block_indent = -1;
    bool saw_reward = false;
    RewardProgram& p = out.program;
    static const std::regex and_re(R"(\s+AND\s+)", std::regex::icase);

    for (const auto& st : stmts) {
        if (block != Block::None && st.indent <= block_indent) {
            const bool is_else = lower(st.text).rfind("else", 0) == 0;
            if (!(is_else && block == Block::Pre && st.indent == block_indent)) {
                block = Block::None;
                block_indent = -1;
            }
        }
        const std::string norm = collapse_spaces(st.text);
        const std::string low = lower(norm);
        if (low == "else:" || low == "else") {
            if (block != Block::Pre) throw ParseError("line " + std::to_string(st.line) + ": else without staged block");
            block = Block::Post;
            continue;
        }
        if (low == "if not(aftertransition):" || low == "if not (aftertransition):") {
            block = Block::Pre;
            block_indent = st.indent;
            p.staged = true;
            continue;
        }
        // if <cond>[,] [then] penalty|reward
        std::string body = norm.substr(2);
        std::string action;
        {
            std::string b = trim(body);
            while (!b.empty() && (b.back() == ',' || b.back() == '.')) b.pop_back();
            const auto sp = b.find_last_of(' ');
            action = lower(sp == std::string::npos ? b : b.substr(sp + 1));
            b = sp == std::string::npos ? std::string() : trim(b.substr(0, sp));
            if (lower(b).size() >= 4 && lower(b).substr(b.size() - 4) == "then") b = trim(b.substr(0, b.size() - 4));
            while (!b.empty() && (b.back() == ',' || b.back() == ' ')) b.pop_back();
            body = b;
        }
        if (action != "penalty" && action != "reward")
            throw ParseError("line " + std::to_string(st.line) + ": expected 'penalty' or 'reward'");

        Block stage = block;
        std::vector<std::string> parts;
        std::sregex_token_iterator it(body.begin(), body.end(), and_re, -1), end;
        for (; it != end; ++it) parts.push_back(trim(it->str()));
        AtomSet atoms;
        for (const auto& part : parts) {
            const std::string lp = lower(part);
            std::string np;
            for (char c : lp)
                if (c != ' ') np += c;
            if (np == "not(aftertransition)") {
                stage = Block::Pre;
                p.staged = true;
                continue;
            }
            if (np == "aftertransition") {
                stage = Block::Post;
                p.staged = true;
                continue;
            }
            atoms.insert(parse_atom(part, st.line));
        }
        if (action == "reward") {
            saw_reward = true;
            p.reward.insert(atoms.begin(), atoms.end());
            continue;
        }
        if (stage != Block::Post) p.pre_penalties.insert(atoms.begin(), atoms.end());
        if (stage != Block::Pre) p.post_penalties.insert(atoms.begin(), atoms.end());
    }
    if (!saw_reward) throw ParseError("program has no reward statement");
    return out;
}

}  // namespace skillforge
