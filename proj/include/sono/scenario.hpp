#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sono/orchestrator.hpp"

namespace sono {

struct Scenario {
  std::string name = "default";
  SessionConfig config = SessionConfig::defaults();
  RunOptions run;
  std::vector<ScheduledUtterance> utterances;
};

// Every key is optional and overrides SessionConfig::defaults(). `chain` and
// `script` accept either an inline object or a file path relative to
// `base_dir`. Unknown keys are rejected. Throws ParseError or InvalidConfig.
Scenario scenario_from_json_text(std::string_view text,
                                 const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace sono
