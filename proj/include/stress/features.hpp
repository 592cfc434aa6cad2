#pragma once

#include "stress/ingest.hpp"
#include "stress/preprocess.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stress {

inline constexpr std::size_t kGsrFeatureCount = 7;
inline constexpr std::size_t kRespFeatureCount = 6;
inline constexpr std::size_t kHrvTimeFeatureCount = 15;
inline constexpr std::size_t kHrvFreqFeatureCount = 7;
inline constexpr std::size_t kEcgFeatureCount = kHrvTimeFeatureCount + kHrvFreqFeatureCount;
inline constexpr std::size_t kBaseFeatureCount =
    2 * kGsrFeatureCount + kRespFeatureCount + kEcgFeatureCount;  // 42

/// Stable, ordered names of the 42 per-window features.
const std::array<std::string_view, kBaseFeatureCount>& feature_names();

/// Offset of the first ECG feature in a FeatureVector.
inline constexpr std::size_t kEcgFeatureOffset = 2 * kGsrFeatureCount + kRespFeatureCount;

struct FeatureConfig {
  double scr_min_prominence = 0.01;  // normalized units / s
  double scr_min_distance_s = 1.0;
};

// ---------------------------------------------------------------- GSR

struct GsrPeak {
  std::size_t onset_index = 0;  // sample index of the derivative peak
  double height = 0.0;
  double duration_s = 0.0;      // width at half prominence
  double prominence = 0.0;
};

/// Central-difference first derivative, scaled to units per second.
std::vector<double> derivative(std::span<const double> signal, double sample_rate_hz);

std::vector<GsrPeak> detect_scr_peaks(std::span<const double> gsr_window, double sample_rate_hz,
                                      const FeatureConfig& config = {});

/// mean, variance, peak count, sum of heights, sum of durations, prominence mean, prominence variance.
std::array<double, kGsrFeatureCount> gsr_features(std::span<const double> gsr_window, double sample_rate_hz,
                                                  const FeatureConfig& config = {});

// ---------------------------------------------------------------- spectra

struct Spectrum {
  std::vector<double> frequencies_hz;
  std::vector<double> power;  // one-sided density, sum(power * df) == variance
};

/// The window mean is removed before the transform.
Spectrum periodogram(std::span<const double> window, double sample_rate_hz);

/// Trapezoid-rule integral of `powers` restricted to bins with lo <= f < hi.
/// Node weights come from the full frequency grid, so adjacent bands add up.
double band_power(std::span<const double> frequencies, std::span<const double> powers, double lo_hz,
                  double hi_hz);
double band_power(const Spectrum& spectrum, double lo_hz, double hi_hz);

std::array<double, kRespFeatureCount> resp_features(std::span<const double> resp_window, double sample_rate_hz);

// ---------------------------------------------------------------- ECG / HRV

struct NnSeries {
  std::vector<double> r_peak_times_s;  // every detected beat
  std::vector<double> nn_ms;           // retained intervals after cleaning
  std::vector<double> nn_times_s;      // time of the beat closing each retained interval
};

inline constexpr double kMinNnMs = 250.0;
inline constexpr double kMaxNnMs = 3000.0;
inline constexpr std::size_t kMinNnIntervals = 4;

/// Derivative / squaring / 150 ms integration / adaptive threshold QRS detector.
NnSeries detect_r_peaks(std::span<const double> ecg_window, double sample_rate_hz);

/// Drops intervals outside [250, 3000] ms or more than 50% off the median,
/// together with both neighbours. Throws InsufficientBeats below 4 survivors.
NnSeries clean_nn(std::vector<double> r_peak_times_s);

std::array<double, kHrvTimeFeatureCount> hrv_time_features(std::span<const double> nn_ms);

struct HrvBands {
  double total = 0.0;  // 0.003 - 0.40 Hz
  double vlf = 0.0;    // 0.003 - 0.04 Hz
  double lf = 0.0;     // 0.04 - 0.15 Hz
  double hf = 0.0;     // 0.15 - 0.40 Hz
};

/// 4 Hz linearly resampled tachogram spectrum, in ms^2.
HrvBands hrv_band_powers(const NnSeries& nn);

struct HrvFrequencyFeatures {
  std::array<double, kHrvFreqFeatureCount> values{};
  bool ratio_undefined = false;  // hf == 0, lf_hf_ratio reported as 0
};

HrvFrequencyFeatures hrv_freq_features(const NnSeries& nn);

// ---------------------------------------------------------------- windows

struct FeatureVector {
  std::string drive_id;
  int section_index = 0;
  DrivingSituation situation = DrivingSituation::Rest;
  double window_start_s = 0.0;
  std::array<double, kBaseFeatureCount> values{};
  bool ecg_imputed = false;
};

/// All 42 features of one window. Throws InsufficientBeats / DegenerateSpectrum
/// when the ECG part cannot be computed.
FeatureVector extract_window(const Window& window, const FeatureConfig& config = {});

struct ExtractionLog {
  struct SectionEntry {
    int section_index = 0;
    int windows_in = 0;
    int windows_out = 0;
    int imputed = 0;
    int dropped = 0;
  };
  std::vector<SectionEntry> sections;
};

/// Extracts every window of a drive, applying ECG copy-forward within each
/// section (a failing first window of a section is dropped).
std::vector<FeatureVector> extract_windows(std::span<const Window> windows, const FeatureConfig& config = {},
                                           ExtractionLog* log = nullptr);

std::string feature_table_header();
std::string serialize_feature_table(std::span<const FeatureVector> rows);
std::vector<FeatureVector> parse_feature_table(std::string_view csv_text);

}  // namespace stress
