#include "stress/pipeline.hpp"

#include "stress/error.hpp"
#include "stress/util.hpp"
#include "stress/version.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace stress {

namespace fs = std::filesystem;

namespace {

double to_real(std::string_view key, std::string_view value) {
  double v = 0.0;
  if (!parse_double(value, v) || !std::isfinite(v)) {
    throw Error(ErrorCode::Usage, "config '" + std::string(key) + "': not a number: '" + std::string(value) + "'");
  }
  return v;
}

long long to_int(std::string_view key, std::string_view value) {
  const double v = to_real(key, value);
  if (v != std::floor(v)) throw Error(ErrorCode::Usage, "config '" + std::string(key) + "': not an integer");
  return static_cast<long long>(v);
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error(ErrorCode::Usage, "config '" + std::string(key) + "': expected true/false");
}

std::string channel_list(const std::vector<ChannelKind>& kinds) {
  std::string out;
  for (auto k : kinds) out += (out.empty() ? "" : ",") + std::string(column_name(k));
  return out;
}

std::string safe_file_stem(const std::string& drive_id) {
  std::string out = drive_id;
  for (auto& c : out) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::Usage, what); };
  if (sample_rate_hz < 0.0) fail("record.sample_rate_hz must be >= 0");
  if (preprocess.filter_order < 1 || preprocess.filter_order > 20) fail("filter.order must be in [1, 20]");
  if (!(preprocess.cutoff_ecg_hz > 0 && preprocess.cutoff_resp_hz > 0 && preprocess.cutoff_gsr_hz > 0)) {
    fail("filter cutoffs must be positive");
  }
  if (!(preprocess.window_length_s > 0) || !(preprocess.window_hop_s > 0)) fail("window length and hop must be positive");
  if (!(features.scr_min_prominence > 0) || features.scr_min_distance_s < 0) fail("invalid peak thresholds");
  if (eval.n_values.empty()) fail("at least one n value is required");
  for (int n : eval.n_values) {
    if (n < 1) fail("n values must be >= 1");
  }
  if (eval.forest.n_trees < 1 || eval.forest.max_depth < 1 || eval.forest.min_samples_split < 2 ||
      eval.forest.features_per_split < 0 ||
      eval.forest.features_per_split > static_cast<int>(kExpandedFeatureCount)) {
    fail("forest parameters out of range");
  }
  if (table2_n < 0) fail("table2.n must be >= 0");
  if (eval.jobs < 1) fail("jobs must be >= 1");
}

std::string RunConfig::canonical() const {
  std::string out;
  out += "record.sample_rate_hz=" + format_double(sample_rate_hz) + "\n";
  out += "filter.order=" + std::to_string(preprocess.filter_order) + "\n";
  out += "filter.cutoff.ecg=" + format_double(preprocess.cutoff_ecg_hz) + "\n";
  out += "filter.cutoff.resp=" + format_double(preprocess.cutoff_resp_hz) + "\n";
  out += "filter.cutoff.gsr=" + format_double(preprocess.cutoff_gsr_hz) + "\n";
  out += "filter.pass=" + std::string(to_string(preprocess.filter_pass)) + "\n";
  out += "window.length_s=" + format_double(preprocess.window_length_s) + "\n";
  out += "features.scr_min_prominence=" + format_double(features.scr_min_prominence) + "\n";
  out += "features.scr_min_distance_s=" + format_double(features.scr_min_distance_s) + "\n";
  out += eval.canonical();
  out += "table2.n=" + std::to_string(table2_n) + "\n";
  return out;
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "manifest") c.manifest = std::string(value);
  else if (key == "out") c.out = std::string(value);
  else if (key == "seed") c.eval.forest.rng_seed = static_cast<std::uint64_t>(to_int(key, value));
  else if (key == "jobs") c.eval.jobs = static_cast<unsigned>(std::max(1LL, to_int(key, value)));
  else if (key == "n") {
    c.eval.n_values.clear();
    for (auto part : split(value, ',')) c.eval.n_values.push_back(static_cast<int>(to_int(key, part)));
  } else if (key == "record.sample_rate_hz") c.sample_rate_hz = to_real(key, value);
  else if (key == "filter.order") c.preprocess.filter_order = static_cast<int>(to_int(key, value));
  else if (key == "filter.cutoff.ecg") c.preprocess.cutoff_ecg_hz = to_real(key, value);
  else if (key == "filter.cutoff.resp") c.preprocess.cutoff_resp_hz = to_real(key, value);
  else if (key == "filter.cutoff.gsr") c.preprocess.cutoff_gsr_hz = to_real(key, value);
  else if (key == "filter.pass") c.preprocess.filter_pass = parse_filter_pass(value);
  else if (key == "window.length_s") c.preprocess.window_length_s = to_real(key, value);
  else if (key == "window.hop_s") c.eval.expand.hop_s = c.preprocess.window_hop_s = to_real(key, value);
  else if (key == "features.scr_min_prominence") c.features.scr_min_prominence = to_real(key, value);
  else if (key == "features.scr_min_distance_s") c.features.scr_min_distance_s = to_real(key, value);
  else if (key == "expand.weights") c.eval.expand.weights = parse_weight_scheme(value);
  else if (key == "forest.n_trees") c.eval.forest.n_trees = static_cast<int>(to_int(key, value));
  else if (key == "forest.max_depth") c.eval.forest.max_depth = static_cast<int>(to_int(key, value));
  else if (key == "forest.min_samples_split") c.eval.forest.min_samples_split = static_cast<int>(to_int(key, value));
  else if (key == "forest.features_per_split") c.eval.forest.features_per_split = static_cast<int>(to_int(key, value));
  else if (key == "table2.n") c.table2_n = static_cast<int>(to_int(key, value));
  else if (key == "skip_bad") c.skip_bad = to_bool(key, value);
  else if (key == "save_models") c.save_models = to_bool(key, value);
  else throw Error(ErrorCode::Usage, "unknown config key '" + std::string(key) + "'");
}

void apply_config_text(RunConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::Usage, "config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    apply_setting(config, line.substr(0, eq), line.substr(eq + 1));
  }
}

DriveExtraction extract_drive(const DriveInput& drive, const RunConfig& config) {
  DriveExtraction out;
  out.drive_id = drive.record.drive_id;
  auto processed = preprocess_record(drive.record, config.preprocess);
  out.pass_through = processed.pass_through;
  const auto windows = slice_windows(processed.record, drive.annotation, config.preprocess.window_length_s,
                                     config.preprocess.window_hop_s);
  out.windows = static_cast<int>(windows.size());
  try {
    out.features = extract_windows(windows, config.features, &out.log);
  } catch (const Error& e) {
    throw Error(e.code(), drive.record.drive_id + ": " + e.what());
  }
  return out;
}

std::vector<DriveInput> load_drives(const RunConfig& config, std::vector<std::string>* skipped) {
  if (config.manifest.empty()) throw Error(ErrorCode::Usage, "a manifest is required (--manifest)");
  const auto entries = load_manifest(config.manifest);
  if (entries.empty()) throw Error(ErrorCode::Usage, "manifest lists no drives");

  std::vector<DriveInput> drives;
  for (const auto& entry : entries) {
    try {
      const double rate = config.sample_rate_hz > 0 ? config.sample_rate_hz : infer_sample_rate(entry.record_path);
      auto record = load_record(entry.record_path, rate);
      record.drive_id = entry.drive_id;
      auto annotation = load_annotations(entry.annotation_path);
      if (annotation.drive_id != entry.drive_id) {
        throw Error(ErrorCode::UnmatchedDrive, "annotation names drive '" + annotation.drive_id + "'");
      }
      std::vector<SignalRecord> records;
      records.push_back(std::move(record));
      std::vector<SectionAnnotation> annotations;
      annotations.push_back(std::move(annotation));
      auto pair = validate_drive_set(std::move(records), std::move(annotations), config.preprocess.window_length_s);
      drives.push_back(std::move(pair.front()));
    } catch (const Error& e) {
      if (!config.skip_bad || !skipped) throw Error(e.code(), "drive '" + entry.drive_id + "': " + e.what());
      skipped->push_back(entry.drive_id + ": " + e.what());
    }
  }
  return drives;
}

void write_run_meta(const RunConfig& config, std::string_view command,
                    const std::map<std::string, std::string>& input_digests) {
  nlohmann::ordered_json meta;
  meta["artifact_version"] = std::string(kVersion);
  meta["command"] = std::string(command);
  meta["seed"] = config.eval.forest.rng_seed;
  meta["config_digest"] = sha256_hex(config.canonical());
  meta["config"] = config.canonical();
  auto& inputs = meta["inputs"] = nlohmann::ordered_json::object();
  for (const auto& [name, digest] : input_digests) inputs[name] = digest;
  write_file_atomic(config.out / "run_meta.json", meta.dump(2) + "\n");
}

CommandResult cmd_extract(const RunConfig& config) {
  config.validate();
  CommandResult result;
  std::vector<std::string> skipped;
  const auto drives = load_drives(config, &skipped);
  for (const auto& s : skipped) result.warnings.push_back("skipped " + s);

  std::vector<DriveExtraction> extracted(drives.size());
  std::vector<std::string> failures(drives.size());
  parallel_for(drives.size(), config.eval.jobs, [&](std::size_t i) {
    try {
      extracted[i] = extract_drive(drives[i], config);
    } catch (const Error& e) {
      if (!config.skip_bad) throw;
      failures[i] = e.what();
    }
  });

  auto& digests = result.input_digests;
  digests["manifest"] = sha256_hex(read_file(config.manifest));
  for (const auto& entry : load_manifest(config.manifest)) {
    if (fs::exists(entry.record_path)) digests["record:" + entry.drive_id] = sha256_hex(read_file(entry.record_path));
    if (fs::exists(entry.annotation_path)) {
      digests["annotation:" + entry.drive_id] = sha256_hex(read_file(entry.annotation_path));
    }
  }

  nlohmann::ordered_json log;
  log["drives"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < drives.size(); ++i) {
    if (!failures[i].empty()) {
      result.warnings.push_back("skipped " + failures[i]);
      skipped.push_back(failures[i]);
      continue;
    }
    const auto& x = extracted[i];
    const auto path = config.out / "features" / (safe_file_stem(x.drive_id) + ".csv");
    write_file_atomic(path, serialize_feature_table(x.features));
    result.written.push_back(path);
    if (!x.pass_through.empty()) {
      result.warnings.push_back(x.drive_id + ": cutoff at or above Nyquist, left unfiltered: " +
                                channel_list(x.pass_through));
    }
    nlohmann::ordered_json dj;
    dj["drive_id"] = x.drive_id;
    dj["sample_rate_hz"] = drives[i].record.sample_rate_hz;
    dj["windows"] = x.windows;
    dj["feature_rows"] = x.features.size();
    dj["unfiltered_channels"] = channel_list(x.pass_through);
    auto& sections = dj["sections"] = nlohmann::ordered_json::array();
    for (const auto& s : x.log.sections) {
      sections.push_back({{"section_index", s.section_index},
                          {"situation", std::string(to_string(drives[i].annotation.sections.at(
                                            static_cast<std::size_t>(s.section_index)).situation))},
                          {"windows_in", s.windows_in},
                          {"windows_out", s.windows_out},
                          {"ecg_imputed", s.imputed},
                          {"dropped", s.dropped}});
    }
    log["drives"].push_back(std::move(dj));
  }
  log["skipped"] = skipped;
  const auto log_path = config.out / "extract_log.json";
  write_file_atomic(log_path, log.dump(2) + "\n");
  result.written.push_back(log_path);
  write_run_meta(config, "extract", digests);
  result.written.push_back(config.out / "run_meta.json");
  return result;
}

CommandResult cmd_evaluate(const RunConfig& config) {
  config.validate();
  CommandResult result;
  const auto features_dir = config.out / "features";
  if (!fs::is_directory(features_dir)) {
    throw Error(ErrorCode::Usage, "no feature tables in " + features_dir.string() + " (run 'extract' first)");
  }
  std::set<std::string> wanted;
  if (!config.manifest.empty()) {
    for (const auto& e : load_manifest(config.manifest)) wanted.insert(e.drive_id);
  }

  std::vector<fs::path> tables;
  for (const auto& entry : fs::directory_iterator(features_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") tables.push_back(entry.path());
  }
  std::sort(tables.begin(), tables.end());

  DriveFeatures data;
  auto& digests = result.input_digests;
  for (const auto& path : tables) {
    const auto text = read_file(path);
    auto rows = parse_feature_table(text);
    if (rows.empty()) continue;
    const auto id = rows.front().drive_id;
    if (!wanted.empty() && !wanted.contains(id)) continue;
    if (std::any_of(rows.begin(), rows.end(), [&](const FeatureVector& f) { return f.drive_id != id; })) {
      throw Error(ErrorCode::BadFormat, path.string() + ": rows from more than one drive");
    }
    digests["features:" + id] = sha256_hex(text);
    data[id] = std::move(rows);
  }
  for (const auto& id : wanted) {
    if (!data.contains(id)) result.warnings.push_back("no feature table for manifest drive '" + id + "'");
  }

  std::map<std::string, std::string> models;
  ModelSink sink;
  if (config.save_models) {
    sink = [&](int n, const std::string& drive, const ForestModel& model) {
      models["n" + std::to_string(n) + "_" + safe_file_stem(drive) + ".model"] = serialize_model(model);
    };
  }
  const auto report = sweep_n(data, config.eval, sink);

  const auto& summaries = report.summaries;
  const int table2_n = config.table2_n > 0 ? config.table2_n : summaries.back().n;
  const std::vector<std::pair<std::string, std::string>> outputs = {
      {"report.json", report_json(report)},
      {"table1.csv", table1_csv(report)},
      {"table2.csv", table2_csv(report, table2_n)},
      {"fig3.csv", fig3_csv(report)},
  };
  for (const auto& [name, text] : outputs) {
    write_file_atomic(config.out / name, text);
    result.written.push_back(config.out / name);
  }
  for (const auto& s : summaries) {
    std::vector<ExpandedSample> samples;
    for (const auto& id : report.drives) {
      const auto shifted = shift_and_filter(expand_drive(data.at(id), s.n, config.eval.expand));
      samples.insert(samples.end(), shifted.begin(), shifted.end());
    }
    const auto path = config.out / "expanded" / ("n" + std::to_string(s.n) + ".csv");
    write_file_atomic(path, serialize_expanded_dataset(samples));
    result.written.push_back(path);
  }
  for (const auto& [name, text] : models) {
    write_file_atomic(config.out / "models" / name, text);
    result.written.push_back(config.out / "models" / name);
  }
  write_run_meta(config, "evaluate", digests);
  result.written.push_back(config.out / "run_meta.json");
  return result;
}

CommandResult cmd_sweep(const RunConfig& config) {
  auto extract = cmd_extract(config);
  auto evaluate = cmd_evaluate(config);
  extract.written.insert(extract.written.end(), evaluate.written.begin(), evaluate.written.end());
  extract.warnings.insert(extract.warnings.end(), evaluate.warnings.begin(), evaluate.warnings.end());
  extract.input_digests.merge(evaluate.input_digests);
  write_run_meta(config, "sweep", extract.input_digests);
  std::sort(extract.written.begin(), extract.written.end());
  extract.written.erase(std::unique(extract.written.begin(), extract.written.end()), extract.written.end());
  return extract;
}

}  // namespace stress
