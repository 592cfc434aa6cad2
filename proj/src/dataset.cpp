#include "stress/dataset.hpp"

#include "stress/error.hpp"
#include "stress/util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace stress {

std::string_view to_string(BinaryLabel label) {
  return label == BinaryLabel::LowStress ? "low(=highway)" : "high(=city)";
}

BinaryLabel parse_binary_label(std::string_view text) {
  text = trim(text);
  if (text == "low(=highway)") return BinaryLabel::LowStress;
  if (text == "high(=city)") return BinaryLabel::HighStress;
  throw Error(ErrorCode::BadFormat, "unknown label '" + std::string(text) + "'");
}

WeightScheme parse_weight_scheme(std::string_view text) {
  text = trim(text);
  if (text == "uniform") return WeightScheme::Uniform;
  if (text == "linear") return WeightScheme::Linear;
  if (text == "timestamps") return WeightScheme::Timestamps;
  throw Error(ErrorCode::Usage, "weight scheme must be uniform|linear|timestamps, got '" + std::string(text) + "'");
}

std::string_view to_string(WeightScheme scheme) {
  switch (scheme) {
    case WeightScheme::Uniform: return "uniform";
    case WeightScheme::Linear: return "linear";
    case WeightScheme::Timestamps: return "timestamps";
  }
  return "?";
}

const std::vector<std::string>& expanded_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    out.reserve(kExpandedFeatureCount);
    for (auto base : feature_names()) {
      for (auto stat : kStatNames) out.push_back(std::string(base) + "__" + std::string(stat));
    }
    return out;
  }();
  return names;
}

double time_weighted_average(std::span<const double> values) {
  return time_weighted_average(values, WeightScheme::Linear);
}

double time_weighted_average(std::span<const double> values, WeightScheme scheme, std::span<const double> starts_s,
                             double hop_s) {
  if (values.empty()) throw Error(ErrorCode::TooFewWindows, "time-weighted average of zero values");
  if (scheme == WeightScheme::Timestamps && starts_s.size() != values.size()) {
    throw Error(ErrorCode::Internal, "timestamp weights need one start time per value");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    double w = 1.0;
    if (scheme == WeightScheme::Linear) w = static_cast<double>(i + 1);
    if (scheme == WeightScheme::Timestamps) w = 1.0 + (starts_s[i] - starts_s[0]) / hop_s;
    num += w * values[i];
    den += w;
  }
  return num / den;
}

ExpandedValues expand_section(std::span<const FeatureVector> windows, int n, const ExpandConfig& config) {
  if (n < 1 || windows.size() < static_cast<std::size_t>(n)) {
    const std::string where = windows.empty() ? std::string("empty section")
                                              : windows.front().drive_id + " section " +
                                                    std::to_string(windows.front().section_index);
    throw Error(ErrorCode::TooFewWindows,
                where + ": " + std::to_string(windows.size()) + " windows, need " + std::to_string(n));
  }
  const auto last = windows.last(static_cast<std::size_t>(n));
  std::vector<double> starts(last.size());
  std::transform(last.begin(), last.end(), starts.begin(), [](const FeatureVector& f) { return f.window_start_s; });

  ExpandedValues out{};
  std::vector<double> v(last.size());
  for (std::size_t f = 0; f < kBaseFeatureCount; ++f) {
    for (std::size_t i = 0; i < last.size(); ++i) v[i] = last[i].values[f];
    const double count = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / count;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double twa = time_weighted_average(v, config.weights, starts, config.hop_s);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    const double median = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);

    double* slot = out.data() + f * kStatsPerFeature;
    // Rounding can push a mean of identical values one ulp outside [min, max].
    slot[0] = std::clamp(mean, sorted.front(), sorted.back());
    slot[1] = median;
    slot[2] = std::sqrt(ss / count);
    slot[3] = sorted.front();
    slot[4] = sorted.back();
    slot[5] = std::clamp(twa, sorted.front(), sorted.back());
  }
  return out;
}

std::vector<SectionSample> expand_drive(std::span<const FeatureVector> drive_windows, int n,
                                        const ExpandConfig& config) {
  std::map<int, std::vector<FeatureVector>> by_section;
  for (const auto& w : drive_windows) by_section[w.section_index].push_back(w);
  std::vector<SectionSample> out;
  if (by_section.empty()) return out;
  const std::string drive = drive_windows.front().drive_id;
  int expected = 0;
  for (auto& [index, windows] : by_section) {
    if (index != expected) {
      throw Error(ErrorCode::TooFewWindows,
                  drive + " section " + std::to_string(expected) + ": no windows (all dropped or missing)");
    }
    ++expected;
    std::stable_sort(windows.begin(), windows.end(),
                     [](const FeatureVector& a, const FeatureVector& b) { return a.window_start_s < b.window_start_s; });
    SectionSample s;
    s.drive_id = drive;
    s.section_index = index;
    s.situation = windows.front().situation;
    s.values = expand_section(windows, n, config);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ExpandedSample> shift_and_filter(std::span<const SectionSample> sections) {
  std::vector<ExpandedSample> out;
  for (std::size_t i = 0; i + 1 < sections.size(); ++i) {
    const auto upcoming = stress_label(sections[i + 1].situation);
    if (upcoming == StressLabel::Low) continue;
    out.push_back({sections[i].drive_id, sections[i].section_index, sections[i].values,
                   upcoming == StressLabel::High ? BinaryLabel::HighStress : BinaryLabel::LowStress});
  }
  return out;
}

bool drive_id_less(std::string_view a, std::string_view b) {
  auto as_number = [](std::string_view s, long long& v) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return !s.empty() && ec == std::errc{} && ptr == s.data() + s.size();
  };
  long long x = 0;
  long long y = 0;
  if (as_number(a, x) && as_number(b, y) && x != y) return x < y;
  return a < b;
}

std::vector<LosoFold> assemble_loso(std::span<const ExpandedSample> samples) {
  std::set<std::string, decltype([](const std::string& a, const std::string& b) { return drive_id_less(a, b); })> ids;
  for (const auto& s : samples) ids.insert(s.drive_id);
  if (ids.size() < 2) {
    throw Error(ErrorCode::SingleDrive, std::to_string(ids.size()) + " drive(s); leave-one-out needs at least 2");
  }
  std::vector<LosoFold> folds;
  folds.reserve(ids.size());
  for (const auto& id : ids) {
    LosoFold fold;
    fold.test_drive_id = id;
    for (const auto& s : samples) (s.drive_id == id ? fold.test : fold.train).push_back(s);
    folds.push_back(std::move(fold));
  }
  return folds;
}

std::string serialize_expanded_dataset(std::span<const ExpandedSample> samples) {
  std::string out = "drive_id,section_index,label";
  for (const auto& name : expanded_feature_names()) out += "," + name;
  out += '\n';
  for (const auto& s : samples) {
    out += s.drive_id + "," + std::to_string(s.section_index) + "," + std::string(to_string(s.label));
    for (double v : s.values) out += "," + format_double(v);
    out += '\n';
  }
  return out;
}

}  // namespace stress
