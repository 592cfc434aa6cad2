#pragma once

#include "stress/features.hpp"

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stress {

/// Surviving classes after dropping upcoming-Rest samples: upcoming Highway
/// is reported as low stress, upcoming City as high stress.
enum class BinaryLabel { LowStress = 0, HighStress = 1 };

inline constexpr std::size_t kClassCount = 2;
inline constexpr std::array<BinaryLabel, kClassCount> kClassOrder = {BinaryLabel::LowStress, BinaryLabel::HighStress};

std::string_view to_string(BinaryLabel label);
BinaryLabel parse_binary_label(std::string_view text);

enum class WeightScheme { Uniform, Linear, Timestamps };

WeightScheme parse_weight_scheme(std::string_view text);
std::string_view to_string(WeightScheme scheme);

inline constexpr std::size_t kStatsPerFeature = 6;
inline constexpr std::size_t kExpandedFeatureCount = kBaseFeatureCount * kStatsPerFeature;  // 252
inline constexpr std::array<std::string_view, kStatsPerFeature> kStatNames = {"mean", "median", "std",
                                                                              "min",  "max",    "twa"};

/// `<feature>__<stat>`, base-feature-major.
const std::vector<std::string>& expanded_feature_names();

using ExpandedValues = std::array<double, kExpandedFeatureCount>;

/// Linear recency weighting: sum(i * v_i) / sum(i), i = 1..n.
double time_weighted_average(std::span<const double> values);

/// Weighted average under a scheme. `starts_s` (window start times) is only
/// read by Timestamps, weighting each window by 1 + (start - first start) / hop.
double time_weighted_average(std::span<const double> values, WeightScheme scheme,
                             std::span<const double> starts_s = {}, double hop_s = 50.0);

struct ExpandConfig {
  WeightScheme weights = WeightScheme::Linear;
  double hop_s = 50.0;
};

/// Expands the last n windows of one section (time order) into 252 values.
ExpandedValues expand_section(std::span<const FeatureVector> windows, int n, const ExpandConfig& config = {});

/// One expanded row per section, before the label shift.
struct SectionSample {
  std::string drive_id;
  int section_index = 0;
  DrivingSituation situation = DrivingSituation::Rest;
  ExpandedValues values{};
};

struct ExpandedSample {
  std::string drive_id;
  int section_index = 0;
  ExpandedValues values{};
  BinaryLabel label = BinaryLabel::LowStress;
};

/// Groups one drive's windows by section (sections must be 0..k without gaps)
/// and expands each. Throws TooFewWindows naming drive and section.
std::vector<SectionSample> expand_drive(std::span<const FeatureVector> drive_windows, int n,
                                        const ExpandConfig& config = {});

/// Labels each section with the next section's class, drops the last section
/// and every upcoming-Rest sample.
std::vector<ExpandedSample> shift_and_filter(std::span<const SectionSample> sections);

struct LosoFold {
  std::string test_drive_id;
  std::vector<ExpandedSample> train;
  std::vector<ExpandedSample> test;
};

/// Numeric ids compare numerically ("5" < "10"), otherwise lexicographically.
bool drive_id_less(std::string_view a, std::string_view b);

/// One fold per drive, in drive_id_less order.
std::vector<LosoFold> assemble_loso(std::span<const ExpandedSample> samples);

std::string serialize_expanded_dataset(std::span<const ExpandedSample> samples);

}  // namespace stress
