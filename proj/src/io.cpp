#include "skillforge/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace skillforge {

using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 json_vec(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) throw ParseError(path + ": expected an array of 3 numbers");
    Vec3 v;
    for (int i = 0; i < 3; ++i) {
        if (!j[i].is_number()) throw ParseError(path + "[" + std::to_string(i) + "]: expected a number");
        v(i) = j[i].get<double>();
    }
    return v;
}

json parse_json(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("$: ") + e.what());
    }
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

}  // namespace

ContactSet parse_contact_set(std::string_view text) {
    const json doc = parse_json(text);
    if (!doc.is_object()) throw ParseError("$: expected an object");
    ContactSet set;
    if (doc.contains("kind")) {
        if (!doc["kind"].is_string()) throw ParseError("$.kind: expected a string");
        const auto k = doc["kind"].get<std::string>();
        if (k == "translation")
            set.kind = MotionKind::Translation;
        else if (k == "rotation")
            set.kind = MotionKind::Rotation;
        else
            throw ParseError("$.kind: expected \"translation\" or \"rotation\"");
    }
    if (doc.contains("center")) set.center = json_vec(doc["center"], "$.center");
    if (!doc.contains("contacts") || !doc["contacts"].is_array()) throw ParseError("$.contacts: expected an array");
    const auto& cs = doc["contacts"];
    for (std::size_t i = 0; i < cs.size(); ++i) {
        const std::string path = "$.contacts[" + std::to_string(i) + "]";
        if (!cs[i].is_object() || !cs[i].contains("p") || !cs[i].contains("n"))
            throw ParseError(path + ": expected {\"p\": [...], \"n\": [...]}");
        set.contacts.push_back({json_vec(cs[i]["p"], path + ".p"), json_vec(cs[i]["n"], path + ".n")});
    }
    return set;
}

std::string contact_set_json(const ContactSet& set) {
    json doc;
    doc["kind"] = set.kind == MotionKind::Rotation ? "rotation" : "translation";
    if (set.center) doc["center"] = vec_json(*set.center);
    doc["contacts"] = json::array();
    for (const auto& c : set.contacts) doc["contacts"].push_back({{"p", vec_json(c.p)}, {"n", vec_json(c.n)}});
    return doc.dump(2) + "\n";
}

std::string classification_json(const Classification& c) {
    json doc;
    doc["state"] = std::string(to_string(c.label));
    doc["maintenance"] = c.profile.maintenance;
    doc["detachment"] = c.profile.detachment;
    doc["constraint"] = c.profile.constraint;
    doc["lineality_dim"] = c.cone.lineality_dim;
    doc["span_dim"] = c.cone.span_dim;
    doc["duplicates_removed"] = c.cone.duplicates_removed;
    doc["dropped_contacts"] = c.dropped_contacts;
    doc["normals"] = json::array();
    for (const auto& n : c.cone.normals) doc["normals"].push_back(vec_json(n));
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

namespace {
std::string family_name(Family f) {
    switch (f) {
        case Family::Directional: return "directional";
        case Family::Wipe: return "wipe";
        case Family::Positional: return "positional";
    }
    return "?";
}
}  // namespace

std::string policy_json(const Policy& p) {
    json doc;
    doc["architecture"] = {{"type", p.arch == Policy::Arch::Linear ? "linear" : "mlp"},
                           {"hidden", p.hidden},
                           {"family", family_name(p.family)},
                           {"inputs", p.input_dim()},
                           {"outputs", p.output_dim()}};
    doc["parameters"] = json::array();
    for (Eigen::Index i = 0; i < p.params.size(); ++i) doc["parameters"].push_back(p.params(i));
    doc["seed"] = p.seed;
    doc["skill"] = p.skill;
    return doc.dump(2) + "\n";
}

Policy parse_policy(std::string_view text) {
    const json doc = parse_json(text);
    try {
        Policy p;
        const auto& a = doc.at("architecture");
        const auto type = a.at("type").get<std::string>();
        if (type == "linear")
            p.arch = Policy::Arch::Linear;
        else if (type == "mlp")
            p.arch = Policy::Arch::Mlp;
        else
            throw ParseError("$.architecture.type: expected \"linear\" or \"mlp\"");
        p.hidden = a.value("hidden", 0);
        const auto fam = a.at("family").get<std::string>();
        if (fam == "directional")
            p.family = Family::Directional;
        else if (fam == "wipe")
            p.family = Family::Wipe;
        else
            throw ParseError("$.architecture.family: expected \"directional\" or \"wipe\"");
        const auto& params = doc.at("parameters");
        p.params.resize(static_cast<Eigen::Index>(params.size()));
        for (std::size_t i = 0; i < params.size(); ++i) p.params(static_cast<Eigen::Index>(i)) = params[i].get<double>();
        p.seed = doc.value("seed", std::uint64_t{0});
        p.skill = doc.value("skill", std::string{});
        if (p.params.size() != Policy::param_count(p.family, p.arch, p.hidden))
            throw ParseError("$.parameters: expected " + std::to_string(Policy::param_count(p.family, p.arch, p.hidden)) +
                             " values");
        return p;
    } catch (const json::exception& e) {
        throw ParseError(std::string("policy: ") + e.what());
    } catch (const InputError& e) {
        throw ParseError(std::string("policy: ") + e.what());
    }
}

SceneFile parse_scene_file(std::string_view text, const SimConfig& defaults) {
    const json doc = parse_json(text);
    if (!doc.is_object() || !doc.contains("preset") || !doc["preset"].is_string())
        throw ParseError("$.preset: expected a string");
    SceneFile sf;
    sf.preset = doc["preset"].get<std::string>();
    sf.config = defaults;
    if (doc.contains("config")) {
        const auto& c = doc["config"];
        if (!c.is_object()) throw ParseError("$.config: expected an object");
        auto num = [&](const char* key, double& dst) {
            if (!c.contains(key)) return;
            if (!c[key].is_number()) throw ParseError(std::string("$.config.") + key + ": expected a number");
            dst = c[key].get<double>();
        };
        num("step_size", sf.config.step_size);
        num("dt", sf.config.dt);
        num("f_step", sf.config.f_step);
        num("normal_noise_deg", sf.config.normal_noise_deg);
    }
    return sf;
}

// ---------------------------------------------------------------------------

std::string trace_csv(const EpisodeTrace& tr) {
    std::string out = "step,t,px,py,pz,qw,qx,qy,qz,fx,fy,fz,f_desc,reward,penalty,after_transition\n";
    char buf[512];
    for (const auto& s : tr.steps) {
        const auto& p = s.pose.p;
        const auto& q = s.pose.q;
        const auto& f = s.reading.f;
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%.9g,%d,%d\n", s.step,
                      s.t, p.x(), p.y(), p.z(), q.w(), q.x(), q.y(), q.z(), f.x(), f.y(), f.z(), s.reading.f_desc,
                      s.reward, s.penalty ? 1 : 0, s.after_transition ? 1 : 0);
        out += buf;
    }
    return out;
}

std::string trace_json(const EpisodeTrace& tr) {
    json doc;
    doc["skill"] = tr.skill;
    doc["termination"] = std::string(to_string(tr.termination));
    doc["reason"] = tr.reason;
    doc["steps"] = json::array();
    for (const auto& s : tr.steps) {
        doc["steps"].push_back({{"step", s.step},
                                {"t", s.t},
                                {"p", vec_json(s.pose.p)},
                                {"q", json::array({s.pose.q.w(), s.pose.q.x(), s.pose.q.y(), s.pose.q.z()})},
                                {"f", vec_json(s.reading.f)},
                                {"f_desc", s.reading.f_desc},
                                {"direction", vec_json(s.direction)},
                                {"reward", s.reward},
                                {"penalty", s.penalty},
                                {"after_transition", s.after_transition}});
    }
    return doc.dump(2) + "\n";
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
    std::string out = "iteration,mean_reward,best_reward\n";
    char buf[128];
    for (const auto& c : curve) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g\n", c.iteration, c.mean_reward, c.best_reward);
        out += buf;
    }
    return out;
}

std::string summary_json(const std::vector<EpisodeTrace>& traces) {
    json doc = json::array();
    for (const auto& tr : traces) {
        const Vec3 m = tr.max_abs_force();
        doc.push_back({{"skill", tr.skill},
                       {"termination", std::string(to_string(tr.termination))},
                       {"steps", static_cast<int>(tr.steps.size()) - 1},
                       {"max_forces", {{"fx", m.x()}, {"fy", m.y()}, {"fz", m.z()}, {"norm", tr.max_force()}}}});
    }
    return doc.dump(2) + "\n";
}

std::string summary_line(const EpisodeTrace& tr) {
    return std::string(to_string(tr.termination)) + " steps=" + std::to_string(tr.steps.size() - 1) +
           " max|f|=" + fmt("%.6g", tr.max_force());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace skillforge
