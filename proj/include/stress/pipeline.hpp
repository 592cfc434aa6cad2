#pragma once

#include "stress/eval.hpp"
#include "stress/features.hpp"
#include "stress/ingest.hpp"
#include "stress/preprocess.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace stress {

struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path out = "out";
  double sample_rate_hz = 0.0;  // 0: infer from each record's time_s column
  PreprocessConfig preprocess;
  FeatureConfig features;
  EvalConfig eval;
  int table2_n = 0;  // 0: largest evaluated n
  bool skip_bad = false;
  bool save_models = true;

  /// Throws Usage when a parameter is out of bounds.
  void validate() const;
  /// Flat `key=value` text, stable key order; hashed into run_meta.json.
  std::string canonical() const;
};

/// Applies one `key = value` setting. Unknown keys are a usage error.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Flat key-value config text: one `key = value` per line, `#` comments.
void apply_config_text(RunConfig& config, std::string_view text);

struct DriveExtraction {
  std::string drive_id;
  std::vector<FeatureVector> features;
  ExtractionLog log;
  std::vector<ChannelKind> pass_through;
  int windows = 0;
};

/// Normalize, filter, slice and extract one validated drive.
DriveExtraction extract_drive(const DriveInput& drive, const RunConfig& config);

/// Loads and validates every manifest drive. With skip_bad, failing drives
/// are reported in `skipped` instead of aborting.
std::vector<DriveInput> load_drives(const RunConfig& config, std::vector<std::string>* skipped = nullptr);

struct CommandResult {
  std::vector<std::filesystem::path> written;
  std::vector<std::string> warnings;
  std::map<std::string, std::string> input_digests;
};

/// Writes <out>/features/<drive>.csv, <out>/extract_log.json, <out>/run_meta.json.
CommandResult cmd_extract(const RunConfig& config);

/// Reads <out>/features/*.csv (restricted to manifest drives when a manifest
/// is set) and writes report.json, table1.csv, table2.csv, fig3.csv, models/.
CommandResult cmd_evaluate(const RunConfig& config);

/// Extract, then evaluate.
CommandResult cmd_sweep(const RunConfig& config);

/// Writes run_meta.json for `command` with config and input digests.
void write_run_meta(const RunConfig& config, std::string_view command,
                    const std::map<std::string, std::string>& input_digests);

}  // namespace stress
