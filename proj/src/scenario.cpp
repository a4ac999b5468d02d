#include "sono/scenario.hpp"

#include <set>

#include "sono/csv.hpp"
#include "sono/error.hpp"
#include "sono/json_io.hpp"
#include "sono/kinematics.hpp"

namespace sono {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) fail(ErrorCode::ParseError, where + ": unknown key '" + key + "'");
  }
}

Vector6 vector6_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 6) fail(ErrorCode::ParseError, what + ": expected 6 numbers");
  Vector6 v;
  for (int i = 0; i < 6; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

LatencyModel latency_from_json(const json& j) {
  return {j.at("mean_ms").get<double>(), j.at("sd_ms").get<double>()};
}

std::string text_or_file(const json& j, const std::filesystem::path& base_dir) {
  if (j.is_string()) return csv::read_text(base_dir / j.get<std::string>());
  return j.dump();
}

void apply(Scenario& sc, const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) fail(ErrorCode::ParseError, "scenario: expected a JSON object");
  reject_unknown(j,
                 {"name", "seed", "tick_rate", "scan_path", "home_pose", "approach_speed",
                  "retract_speed", "gains", "tissue", "virtual_mass", "force_cap", "chain",
                  "agent", "script", "avatar", "patient_head", "greeting_s", "resting_timeout_s",
                  "max_session_s", "setup_s", "utterances"},
                 "scenario");
  SessionConfig& c = sc.config;
  if (j.contains("name")) sc.name = j.at("name").get<std::string>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("tick_rate")) c.tick_rate = j.at("tick_rate").get<int>();
  if (j.contains("scan_path")) c.scan_path = scan_path_from_json(j.at("scan_path"));
  if (j.contains("home_pose")) c.home_pose = pose_from_json(j.at("home_pose"));
  if (j.contains("approach_speed")) c.approach_speed = j.at("approach_speed").get<double>();
  if (j.contains("retract_speed")) c.retract_speed = j.at("retract_speed").get<double>();
  if (j.contains("gains")) {
    const auto& g = j.at("gains");
    reject_unknown(g, {"stiffness", "damping", "inertia", "desired_wrench"}, "gains");
    if (g.contains("stiffness")) c.gains.stiffness = vector6_from_json(g.at("stiffness"), "stiffness");
    if (g.contains("damping")) c.gains.damping = vector6_from_json(g.at("damping"), "damping");
    if (g.contains("inertia")) c.gains.inertia = vector6_from_json(g.at("inertia"), "inertia");
    if (g.contains("desired_wrench")) {
      c.gains.desired_wrench = vector6_from_json(g.at("desired_wrench"), "desired_wrench");
    }
  }
  if (j.contains("tissue")) {
    const auto& t = j.at("tissue");
    reject_unknown(t, {"surface_height", "stiffness", "contact_damping"}, "tissue");
    if (t.contains("surface_height")) c.tissue.surface_height = t.at("surface_height").get<double>();
    if (t.contains("stiffness")) c.tissue.stiffness = t.at("stiffness").get<double>();
    if (t.contains("contact_damping")) {
      c.tissue.contact_damping = t.at("contact_damping").get<double>();
    }
  }
  if (j.contains("virtual_mass")) c.sim.virtual_mass = j.at("virtual_mass").get<double>();
  if (j.contains("force_cap")) c.sim.force_cap = j.at("force_cap").get<double>();
  if (j.contains("chain")) c.sim.chain = chain_from_json_text(text_or_file(j.at("chain"), base_dir));
  if (j.contains("agent")) {
    const auto& a = j.at("agent");
    reject_unknown(a, {"persona_prompt", "stt", "llm", "tts", "command_keywords", "stop_keywords"},
                   "agent");
    if (a.contains("persona_prompt")) c.agent.persona_prompt = a.at("persona_prompt").get<std::string>();
    if (a.contains("stt")) c.agent.stt = latency_from_json(a.at("stt"));
    if (a.contains("llm")) c.agent.llm = latency_from_json(a.at("llm"));
    if (a.contains("tts")) c.agent.tts = latency_from_json(a.at("tts"));
    if (a.contains("command_keywords")) {
      c.agent.command_keywords = a.at("command_keywords").get<std::vector<std::string>>();
    }
    if (a.contains("stop_keywords")) {
      c.agent.stop_keywords = a.at("stop_keywords").get<std::vector<std::string>>();
    }
  }
  if (j.contains("script")) c.script = ScriptTable::from_json_text(text_or_file(j.at("script"), base_dir));
  if (j.contains("avatar")) {
    const auto& a = j.at("avatar");
    reject_unknown(a,
                   {"head_position", "head_forward_rest", "shoulder_position", "upper_arm_length",
                    "forearm_length", "reach_engage_radius", "elbow_pole_offset"},
                   "avatar");
    AvatarRig& r = c.avatar;
    if (a.contains("head_position")) r.head_position = vec3_from_json(a.at("head_position"));
    if (a.contains("head_forward_rest")) r.head_forward_rest = vec3_from_json(a.at("head_forward_rest"));
    if (a.contains("shoulder_position")) r.shoulder_position = vec3_from_json(a.at("shoulder_position"));
    if (a.contains("upper_arm_length")) r.upper_arm_length = a.at("upper_arm_length").get<double>();
    if (a.contains("forearm_length")) r.forearm_length = a.at("forearm_length").get<double>();
    if (a.contains("reach_engage_radius")) {
      r.reach_engage_radius = a.at("reach_engage_radius").get<double>();
    }
    if (a.contains("elbow_pole_offset")) r.elbow_pole_offset = vec3_from_json(a.at("elbow_pole_offset"));
  }
  if (j.contains("patient_head")) c.patient_head = vec3_from_json(j.at("patient_head"));
  if (j.contains("greeting_s")) c.greeting_s = j.at("greeting_s").get<double>();
  if (j.contains("resting_timeout_s")) c.resting_timeout_s = j.at("resting_timeout_s").get<double>();
  if (j.contains("max_session_s")) c.max_session_s = j.at("max_session_s").get<double>();
  if (j.contains("setup_s")) sc.run.setup_s = j.at("setup_s").get<double>();
  if (j.contains("utterances")) {
    for (const auto& u : j.at("utterances")) {
      reject_unknown(u, {"t_s", "text"}, "utterance");
      ScheduledUtterance s{u.at("t_s").get<double>(), u.at("text").get<std::string>()};
      if (!(s.t_s >= 0.0)) fail(ErrorCode::ParseError, "utterance t_s must be >= 0");
      sc.utterances.push_back(std::move(s));
    }
  }
}

}  // namespace

Scenario scenario_from_json_text(std::string_view text, const std::filesystem::path& base_dir) {
  Scenario sc;
  try {
    apply(sc, nlohmann::json::parse(text), base_dir);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("scenario: ") + e.what());
  }
  if (!(sc.run.setup_s >= 0.0)) fail(ErrorCode::InvalidConfig, "setup_s must be >= 0");
  sc.config.validate();
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_json_text(csv::read_text(path), path.parent_path());
}

}  // namespace sono
