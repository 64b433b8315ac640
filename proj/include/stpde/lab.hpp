#pragma once

// Experiment orchestration: named studies over the built-in fixtures, driven
// by a flat key = value configuration, emitting a JSON report plus a CSV
// table.  The CLI and the C API are both thin wrappers around run_lab.
//
// Determinism contract: a study's outputs are a pure function of
// (command, configuration); the JSON differs between identical runs only in
// its "timestamp" field, for any worker-thread count.

#include <map>
#include <string>
#include <vector>

namespace stpde {

inline constexpr const char* kVersionString = "0.1.0";
inline constexpr const char* kReportSchemaVersion = "1";
/// Environment variable naming the default output directory for the CLI.
inline constexpr const char* kOutputDirEnvVar = "STPDE_OUT_DIR";

/// Flat `key = value` configuration: one assignment per line, `#` starts a
/// comment, blank lines ignored, later assignments override earlier ones.
class KVConfig {
 public:
  /// Parses configuration text; throws std::invalid_argument naming the
  /// offending line on malformed input.
  static KVConfig parse(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  /// Typed getters return the fallback when the key is absent and throw
  /// std::invalid_argument when the value fails to parse.
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list of reals.
  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& fallback) const;

  const std::map<std::string, std::string>& entries() const {
    return entries_;
  }

 private:
  std::map<std::string, std::string> entries_;
};

/// Outcome of one study run. exit_code follows the CLI contract: 0 when the
/// study ran and passed (or was inconclusive / oracle-limited), 1 when an
/// acceptance check failed or the run aborted, 2 on usage errors.
struct LabResult {
  int exit_code = 2;
  std::string status;   ///< pass | fail | inconclusive | oracle-limited | error
  std::string message;  ///< one-line human-readable summary
  std::string json;     ///< full report document
  std::string csv;      ///< per-level table ("" if none)
};

/// Names accepted by run_lab, in documentation order.
std::vector<std::string> lab_commands();

/// Executes one named study. Never throws: errors are reported through
/// exit_code/status/message.
LabResult run_lab(const std::string& command, const KVConfig& config);

/// $STPDE_OUT_DIR when set and non-empty, else ".".
std::string default_output_dir();

}  // namespace stpde
