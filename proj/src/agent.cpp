#include "sono/agent.hpp"

#include <algorithm>
#include <cctype>
#include <json.hpp>
#include <random>

#include "sono/error.hpp"

namespace sono {

namespace {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

bool contains_phrase(const std::vector<std::string>& words, const std::vector<std::string>& phrase) {
  if (phrase.empty() || phrase.size() > words.size()) return false;
  return std::search(words.begin(), words.end(), phrase.begin(), phrase.end()) != words.end();
}

bool matches_pattern(const std::vector<std::string>& words, std::string_view pattern) {
  std::size_t start = 0;
  while (start <= pattern.size()) {
    auto bar = pattern.find('|', start);
    if (bar == std::string_view::npos) bar = pattern.size();
    if (contains_phrase(words, tokenize(pattern.substr(start, bar - start)))) return true;
    start = bar + 1;
  }
  return false;
}

bool mentions_any(std::string_view text, const std::vector<std::string>& keywords) {
  const auto words = tokenize(text);
  return std::any_of(keywords.begin(), keywords.end(),
                     [&](const std::string& k) { return contains_phrase(words, tokenize(k)); });
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string fallback_text(ProcedurePhase phase) {
  switch (phase) {
    case ProcedurePhase::Execution:
      return "The scan is in progress and everything looks fine. Keep your arm relaxed.";
    case ProcedurePhase::Complete:
      return "The procedure is finished. You can relax and move your arm now.";
    case ProcedurePhase::Aborted:
      return "The procedure has been stopped. You can relax now.";
    default:
      return "Take your time. Tell me whenever you would like to begin.";
  }
}

}  // namespace

std::string_view to_string(Speaker s) { return s == Speaker::Patient ? "patient" : "agent"; }

Speaker speaker_from_string(std::string_view name) {
  if (name == "patient") return Speaker::Patient;
  if (name == "agent") return Speaker::Agent;
  fail(ErrorCode::ParseError, "unknown speaker '" + std::string(name) + "'");
}

std::string_view to_string(AgentCommand c) {
  switch (c) {
    case AgentCommand::None: return "none";
    case AgentCommand::StartScan: return "start_scan";
    case AgentCommand::StopScan: return "stop_scan";
  }
  return "none";
}

void validate(const Utterance& u) {
  const bool blank = std::all_of(u.text.begin(), u.text.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
  });
  if (blank) fail(ErrorCode::InvalidArgument, "utterance text is empty");
}

void AgentConfig::validate() const {
  for (const auto* m : {&stt, &llm, &tts}) {
    if (!(m->mean_ms >= 0.0) || !(m->sd_ms >= 0.0)) {
      fail(ErrorCode::InvalidArgument, "latency mean and sd must be >= 0");
    }
  }
  if (command_keywords.empty() || stop_keywords.empty()) {
    fail(ErrorCode::InvalidArgument, "command and stop keyword lists must be non-empty");
  }
}

bool contains_keyword(std::string_view text, std::string_view keyword) {
  return contains_phrase(tokenize(text), tokenize(keyword));
}

ScriptTable ScriptTable::defaults() {
  using P = ProcedurePhase;
  ScriptTable t;
  t.entries_[P::Setup] = {
      {std::nullopt, "One moment please, we are still getting everything ready."},
  };
  t.entries_[P::Greeting] = {
      {"hello|hi|hey|good morning|good afternoon",
       "Hello! I'm your assistant today, and I'll be right here for the whole scan."},
      {std::nullopt, "Nice to meet you. Make yourself comfortable; we can begin whenever you are ready."},
  };
  t.entries_[P::Resting] = {
      {"begin|start", "Alright, I'll start the scan now. You will feel gentle pressure on your arm."},
      {"stop", "Okay, we will not go ahead with the scan today."},
      {"hurt|pain|painful|uncomfortable",
       "It should not hurt. The probe presses only gently, and you can tell me to stop at any time."},
      {"how long|how much time|duration",
       "The scan itself is short, about ten seconds of slow movement along your forearm."},
      {"what|why|how",
       "The robot moves an ultrasound probe along your forearm to take images, and I guide it "
       "with you the whole time."},
      {"hello|hi|hey", "Hello again! Do you have any questions before we begin?"},
      {std::nullopt, "Take your time. Tell me whenever you would like to begin."},
      {std::nullopt, "If you have any questions, just ask. Say begin when you are ready."},
  };
  t.entries_[P::Execution] = {
      {"stop", "Stopping the scan now and moving the probe away from your arm."},
      {"how much longer|how long|longer|almost done",
       "The scan is going well and is almost done. Please keep your arm still a little longer."},
      {"hurt|pain|painful|uncomfortable",
       "I am keeping the pressure light. If it is uncomfortable, say stop and I will end the scan."},
      {std::nullopt, "The scan is in progress and everything looks fine. Keep your arm relaxed."},
      {std::nullopt, "We are scanning now. You are doing great."},
  };
  t.entries_[P::Complete] = {
      {"thank|thanks", "You're welcome! Take care."},
      {std::nullopt, "The procedure is finished. You can relax and move your arm now."},
  };
  t.entries_[P::Aborted] = {
      {std::nullopt, "The procedure has been stopped. You can relax now."},
  };
  return t;
}

ScriptTable ScriptTable::from_json_text(std::string_view text) {
  ScriptTable t = defaults();
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) fail(ErrorCode::ParseError, "script table: expected an object");
    for (const auto& [name, list] : j.items()) {
      std::vector<ScriptEntry> entries;
      for (const auto& item : list) {
        ScriptEntry e;
        if (item.contains("pattern") && !item.at("pattern").is_null()) {
          e.pattern = item.at("pattern").get<std::string>();
        }
        e.reply = item.at("reply").get<std::string>();
        entries.push_back(std::move(e));
      }
      t.entries_[phase_from_string(name)] = std::move(entries);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("script table: ") + e.what());
  }
  return t;
}

const std::vector<ScriptEntry>& ScriptTable::entries(ProcedurePhase phase) const {
  static const std::vector<ScriptEntry> empty;
  const auto it = entries_.find(phase);
  return it == entries_.end() ? empty : it->second;
}

void ScriptTable::set_entries(ProcedurePhase phase, std::vector<ScriptEntry> entries) {
  entries_[phase] = std::move(entries);
}

ScriptedGenerator::ScriptedGenerator(ScriptTable table) : table_(std::move(table)) {}

std::string ScriptedGenerator::respond(const PromptContext& context,
                                       std::span<const Utterance> transcript_window) const {
  std::string_view last_patient;
  for (auto it = transcript_window.rbegin(); it != transcript_window.rend(); ++it) {
    if (it->speaker == Speaker::Patient) {
      last_patient = it->text;
      break;
    }
  }
  const auto words = tokenize(last_patient);
  const auto& entries = table_.entries(context.phase);
  std::vector<const ScriptEntry*> fallbacks;
  for (const auto& e : entries) {
    if (!e.pattern) {
      fallbacks.push_back(&e);
    } else if (matches_pattern(words, *e.pattern)) {
      return e.reply;
    }
  }
  if (fallbacks.empty()) return fallback_text(context.phase);
  return fallbacks[splitmix64(context.seed) % fallbacks.size()]->reply;
}

Agent::Agent(AgentConfig config, std::shared_ptr<const ResponseGenerator> generator)
    : config_(std::move(config)), generator_(std::move(generator)) {
  config_.validate();
  if (!generator_) generator_ = std::make_shared<ScriptedGenerator>();
}

AgentCommand Agent::extract_command(ProcedurePhase phase, std::string_view text) const {
  const bool active = phase == ProcedurePhase::Resting || phase == ProcedurePhase::Execution;
  if (active && mentions_any(text, config_.stop_keywords)) return AgentCommand::StopScan;
  if (phase == ProcedurePhase::Resting && mentions_any(text, config_.command_keywords)) {
    return AgentCommand::StartScan;
  }
  return AgentCommand::None;
}

AgentReply Agent::handle_utterance(ProcedurePhase phase, const Utterance& u, std::uint64_t seed,
                                   std::span<const Utterance> transcript_window) const {
  validate(u);
  AgentReply reply;
  reply.command = u.speaker == Speaker::Patient ? extract_command(phase, u.text) : AgentCommand::None;
  reply.latency = sample_latency(config_, seed);

  std::vector<Utterance> window(transcript_window.begin(), transcript_window.end());
  window.push_back(u);
  const PromptContext context{config_.persona_prompt, phase, reply.command, seed};
  try {
    reply.text = generator_->respond(context, window);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::GeneratorUnavailable) throw;
    reply.text = ScriptedGenerator().respond(context, window);
    reply.used_fallback = true;
  }
  return reply;
}

AgentReply handle_utterance(const AgentConfig& config, ProcedurePhase phase, const Utterance& u,
                            std::uint64_t seed) {
  return Agent(config).handle_utterance(phase, u, seed);
}

StageLatency sample_latency(const AgentConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  auto draw = [&rng](const LatencyModel& m) {
    if (m.sd_ms <= 0.0) return m.mean_ms;
    std::normal_distribution<double> dist(m.mean_ms, m.sd_ms);
    return std::max(0.0, dist(rng));
  };
  StageLatency s;
  s.stt_ms = draw(config.stt);
  s.llm_ms = draw(config.llm);
  s.tts_ms = draw(config.tts);
  return s;
}

Utterance phase_announcement(ProcedurePhase from, ProcedurePhase to, double timestamp) {
  if (!is_valid_transition(from, to)) {
    fail(ErrorCode::InvalidTransition, "no transition " + std::string(to_string(from)) + " -> " +
                                           std::string(to_string(to)));
  }
  std::string text;
  switch (to) {
    case ProcedurePhase::Greeting:
      text = "Hello, I'm your virtual assistant. I'll stay with you throughout the ultrasound scan.";
      break;
    case ProcedurePhase::Resting:
      text = "Feel free to ask me anything. When you're ready, just tell me to begin.";
      break;
    case ProcedurePhase::Execution:
      text = "Starting the scan now. The robot will gently place the probe on your arm.";
      break;
    case ProcedurePhase::Complete:
      text = "The procedure is finished. You can relax and move your arm now.";
      break;
    case ProcedurePhase::Aborted:
      text = "The procedure has been stopped and the robot is moving away. You can relax.";
      break;
    case ProcedurePhase::Setup:
      break;
  }
  return {Speaker::Agent, std::move(text), timestamp};
}

}  // namespace sono
