#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sono/phase.hpp"

namespace sono {

enum class Speaker { Patient, Agent };

std::string_view to_string(Speaker s);
Speaker speaker_from_string(std::string_view name);

struct Utterance {
  Speaker speaker = Speaker::Patient;
  std::string text;
  double timestamp = 0.0;  // session seconds

  bool operator==(const Utterance&) const = default;
};

// Throws InvalidArgument when the text is empty after trimming.
void validate(const Utterance& u);

struct LatencyModel {
  double mean_ms = 0.0;
  double sd_ms = 0.0;
};

struct AgentConfig {
  std::string persona_prompt =
      "You are a calm, friendly clinical assistant sitting beside the patient during a "
      "robotic ultrasound scan of the forearm. Answer briefly and reassure.";
  LatencyModel stt{46.0, 5.0};
  LatencyModel llm{552.0, 187.0};
  LatencyModel tts{1281.0, 188.0};
  std::vector<std::string> command_keywords{"start", "begin"};
  std::vector<std::string> stop_keywords{"stop"};

  // Throws InvalidArgument on negative latencies or empty keyword lists.
  void validate() const;
};

enum class AgentCommand { None, StartScan, StopScan };

std::string_view to_string(AgentCommand c);

struct StageLatency {
  double stt_ms = 0.0;
  double llm_ms = 0.0;
  double tts_ms = 0.0;

  double total_ms() const { return stt_ms + llm_ms + tts_ms; }
  bool operator==(const StageLatency&) const = default;
};

struct AgentReply {
  std::string text;
  AgentCommand command = AgentCommand::None;
  StageLatency latency;
  bool used_fallback = false;
};

struct ScriptEntry {
  // Alternatives separated by '|'; each matches as a whole word or phrase,
  // ignoring case. Entries without a pattern are phase fallbacks.
  std::optional<std::string> pattern;
  std::string reply;
};

class ScriptTable {
 public:
  static ScriptTable defaults();
  // JSON object: phase name -> [{"pattern": "...", "reply": "..."}, ...].
  // Phases missing from the file keep their default entries.
  static ScriptTable from_json_text(std::string_view text);

  const std::vector<ScriptEntry>& entries(ProcedurePhase phase) const;
  void set_entries(ProcedurePhase phase, std::vector<ScriptEntry> entries);

 private:
  std::map<ProcedurePhase, std::vector<ScriptEntry>> entries_;
};

// Case-insensitive whole-word (or whole-phrase) containment.
bool contains_keyword(std::string_view text, std::string_view keyword);

struct PromptContext {
  std::string_view persona_prompt;
  ProcedurePhase phase = ProcedurePhase::Resting;
  AgentCommand command = AgentCommand::None;
  std::uint64_t seed = 0;
};

// Language-model stage. Implementations throw Error(GeneratorUnavailable)
// when they cannot answer; the caller then falls back to scripted text.
class ResponseGenerator {
 public:
  virtual ~ResponseGenerator() = default;
  virtual std::string respond(const PromptContext& context,
                              std::span<const Utterance> transcript_window) const = 0;
};

// Deterministic table lookup: first matching pattern for the phase, else a
// fallback entry chosen by the seed.
class ScriptedGenerator final : public ResponseGenerator {
 public:
  explicit ScriptedGenerator(ScriptTable table = ScriptTable::defaults());
  std::string respond(const PromptContext& context,
                      std::span<const Utterance> transcript_window) const override;

 private:
  ScriptTable table_;
};

class Agent {
 public:
  explicit Agent(AgentConfig config = {}, std::shared_ptr<const ResponseGenerator> generator = {});

  const AgentConfig& config() const { return config_; }

  // Extracts the command, asks the generator for a reply (scripted fallback
  // on GeneratorUnavailable) and samples per-stage latency from `seed`.
  AgentReply handle_utterance(ProcedurePhase phase, const Utterance& u, std::uint64_t seed,
                              std::span<const Utterance> transcript_window = {}) const;

  AgentCommand extract_command(ProcedurePhase phase, std::string_view text) const;

 private:
  AgentConfig config_;
  std::shared_ptr<const ResponseGenerator> generator_;
};

// Scripted default pipeline.
AgentReply handle_utterance(const AgentConfig& config, ProcedurePhase phase, const Utterance& u,
                            std::uint64_t seed);

StageLatency sample_latency(const AgentConfig& config, std::uint64_t seed);

// The agent's line on entering `to`. Throws InvalidTransition when
// from->to is not a legal phase change.
Utterance phase_announcement(ProcedurePhase from, ProcedurePhase to, double timestamp);

}  // namespace sono
