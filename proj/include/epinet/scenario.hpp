#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace epinet {

/// Validation failure with the JSON-path of the offending field ($.a.b).
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& path, const std::string& message)
      : std::runtime_error("scenario error at " + path + ": " + message),
        path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct RunReport {
  std::string command;
  std::string scenario_echo;           // resolved scenario (JSON text)
  std::string headline;                // headline numbers (JSON text)
  std::vector<std::string> outputs;    // files written under out_dir
  double wall_clock_seconds = 0.0;     // printed to stdout, never written

  /// report.json payload; excludes the wall clock so reruns are byte-stable.
  std::string to_json() const;
};

/// Parses, validates and dispatches one scenario; writes all artifacts under
/// out_dir (created if missing). expected_command, when nonempty, must match
/// the scenario's "command". Throws ScenarioError for validation problems;
/// solver failures propagate as other exceptions.
RunReport run_scenario(const std::string& scenario_text, const std::string& out_dir,
                       std::optional<std::uint64_t> seed_override,
                       const std::string& expected_command = "");

}  // namespace epinet
