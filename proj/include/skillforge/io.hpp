#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "skillforge/agents.hpp"

namespace skillforge {

// Contact set file: {"kind": "translation"|"rotation", "center": [x,y,z]?,
//                    "contacts": [{"p": [...], "n": [...]}, ...]}
ContactSet parse_contact_set(std::string_view json_text);
std::string contact_set_json(const ContactSet& set);

std::string classification_json(const Classification& c);

// Policy file: {"architecture": {...}, "parameters": [...], "seed": n, "skill": name}
std::string policy_json(const Policy& policy);
Policy parse_policy(std::string_view json_text);

// Scene file: {"preset": name, "config": {"step_size", "dt", "f_step", "normal_noise_deg"}}
struct SceneFile {
    std::string preset;
    SimConfig config;
};
SceneFile parse_scene_file(std::string_view json_text, const SimConfig& defaults);

std::string trace_csv(const EpisodeTrace& trace);
std::string trace_json(const EpisodeTrace& trace);
std::string curve_csv(const std::vector<CurvePoint>& curve);
std::string summary_json(const std::vector<EpisodeTrace>& traces);
std::string summary_line(const EpisodeTrace& trace);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace skillforge
