#include "stress/error.hpp"
#include "stress/features.hpp"
#include "stress/util.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace stress {

namespace {

using EcgBlock = std::array<double, kEcgFeatureCount>;

EcgBlock ecg_features(std::span<const double> ecg, double fs) {
  const auto nn = detect_r_peaks(ecg, fs);
  const auto time = hrv_time_features(nn.nn_ms);
  const auto freq = hrv_freq_features(nn);
  EcgBlock out{};
  std::copy(time.begin(), time.end(), out.begin());
  std::copy(freq.values.begin(), freq.values.end(), out.begin() + kHrvTimeFeatureCount);
  return out;
}

FeatureVector non_ecg_features(const Window& w, const FeatureConfig& config) {
  FeatureVector fv;
  fv.drive_id = w.drive_id;
  fv.section_index = w.section_index;
  fv.situation = w.situation;
  fv.window_start_s = w.start_s;
  const auto hand = gsr_features(w.channel(ChannelKind::HandGsr), w.sample_rate_hz, config);
  const auto foot = gsr_features(w.channel(ChannelKind::FootGsr), w.sample_rate_hz, config);
  const auto resp = resp_features(w.channel(ChannelKind::Respiration), w.sample_rate_hz);
  auto it = std::copy(hand.begin(), hand.end(), fv.values.begin());
  it = std::copy(foot.begin(), foot.end(), it);
  std::copy(resp.begin(), resp.end(), it);
  return fv;
}

bool recoverable_ecg_failure(const Error& e) {
  return e.code() == ErrorCode::InsufficientBeats || e.code() == ErrorCode::DegenerateSpectrum;
}

void require_finite(const FeatureVector& fv) {
  for (std::size_t i = 0; i < fv.values.size(); ++i) {
    if (!std::isfinite(fv.values[i])) {
      throw Error(ErrorCode::Internal, fv.drive_id + " section " + std::to_string(fv.section_index) + " window " +
                                           format_double(fv.window_start_s) + ": feature '" +
                                           std::string(feature_names()[i]) + "' is not finite");
    }
  }
}

}  // namespace

const std::array<std::string_view, kBaseFeatureCount>& feature_names() {
  static constexpr std::array<std::string_view, kBaseFeatureCount> kNames = {
      "hand_mean", "hand_var", "hand_peak_count", "hand_peak_height_sum", "hand_peak_duration_sum",
      "hand_peak_prom_mean", "hand_peak_prom_var",
      "foot_mean", "foot_var", "foot_peak_count", "foot_peak_height_sum", "foot_peak_duration_sum",
      "foot_peak_prom_mean", "foot_peak_prom_var",
      "resp_mean", "resp_var", "resp_bp_00_01", "resp_bp_01_02", "resp_bp_02_03", "resp_bp_03_04",
      "mean_nn", "sdnn", "sdsd", "rmssd", "median_nn", "nn50", "pnn50", "nn20", "pnn20", "cvsd", "cvnn",
      "hr_mean", "hr_max", "hr_min", "hr_std",
      "total_power", "vlf_power", "lf_power", "hf_power", "lf_hf_ratio", "lf_norm", "hf_norm"};
  return kNames;
}

FeatureVector extract_window(const Window& window, const FeatureConfig& config) {
  auto fv = non_ecg_features(window, config);
  const auto ecg = ecg_features(window.channel(ChannelKind::Ecg), window.sample_rate_hz);
  std::copy(ecg.begin(), ecg.end(), fv.values.begin() + kEcgFeatureOffset);
  require_finite(fv);
  return fv;
}

std::vector<FeatureVector> extract_windows(std::span<const Window> windows, const FeatureConfig& config,
                                           ExtractionLog* log) {
  std::vector<FeatureVector> out;
  std::optional<EcgBlock> previous;
  ExtractionLog::SectionEntry* entry = nullptr;
  int current_section = -1;
  std::string current_drive;

  for (const auto& w : windows) {
    if (w.section_index != current_section || w.drive_id != current_drive) {
      current_section = w.section_index;
      current_drive = w.drive_id;
      previous.reset();
      if (log) {
        log->sections.push_back({w.section_index, 0, 0, 0, 0});
        entry = &log->sections.back();
      }
    }
    if (entry) ++entry->windows_in;

    auto fv = non_ecg_features(w, config);
    try {
      previous = ecg_features(w.channel(ChannelKind::Ecg), w.sample_rate_hz);
    } catch (const Error& e) {
      if (!recoverable_ecg_failure(e)) throw;
      if (!previous) {
        if (entry) ++entry->dropped;
        continue;
      }
      fv.ecg_imputed = true;
      if (entry) ++entry->imputed;
    }
    std::copy(previous->begin(), previous->end(), fv.values.begin() + kEcgFeatureOffset);
    require_finite(fv);
    if (entry) ++entry->windows_out;
    out.push_back(std::move(fv));
  }
  return out;
}

std::string feature_table_header() {
  std::string header = "drive_id,section_index,situation,window_start_s";
  for (auto name : feature_names()) {
    header += ',';
    header += name;
  }
  return header;
}

std::string serialize_feature_table(std::span<const FeatureVector> rows) {
  std::string out = feature_table_header() + "\n";
  for (const auto& r : rows) {
    out += r.drive_id + "," + std::to_string(r.section_index) + "," + std::string(to_string(r.situation)) + "," +
           format_double(r.window_start_s);
    for (double v : r.values) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<FeatureVector> parse_feature_table(std::string_view csv_text) {
  auto lines = split(csv_text, '\n');
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty() || trim(lines.front()) != feature_table_header()) {
    throw Error(ErrorCode::BadFormat, "feature table header does not match the 42-feature layout");
  }
  std::vector<FeatureVector> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split(trim(lines[i]), ',');
    if (fields.size() != 4 + kBaseFeatureCount) {
      throw Error(ErrorCode::BadFormat, "feature table line " + std::to_string(i + 1) + ": wrong field count");
    }
    FeatureVector fv;
    fv.drive_id = std::string(fields[0]);
    double section = 0.0;
    if (!parse_double(fields[1], section) || section < 0 || section != std::floor(section) ||
        !parse_double(fields[3], fv.window_start_s)) {
      throw Error(ErrorCode::BadFormat, "feature table line " + std::to_string(i + 1) + ": bad key columns");
    }
    fv.section_index = static_cast<int>(section);
    fv.situation = parse_situation(fields[2]);
    for (std::size_t k = 0; k < kBaseFeatureCount; ++k) {
      if (!parse_double(fields[4 + k], fv.values[k]) || !std::isfinite(fv.values[k])) {
        throw Error(ErrorCode::BadFormat, "feature table line " + std::to_string(i + 1) + ": bad value for '" +
                                              std::string(feature_names()[k]) + "'");
      }
    }
    rows.push_back(std::move(fv));
  }
  return rows;
}

}  // namespace stress
