#pragma once

#include "stress/ingest.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace stress::synthetic {

/// Rest, City, Highway, City, Highway, City, Rest.
std::vector<DrivingSituation> canonical_pattern();

/// Gaussian-sum ECG (P, Q, R, S, T) with R peaks exactly at `beat_times_s`.
std::vector<double> ecg_from_beats(std::span<const double> beat_times_s, double sample_rate_hz,
                                   std::size_t length, double noise = 0.0, std::uint64_t seed = 0);

struct CohortOptions {
  int drives = 7;
  double sample_rate_hz = 128.0;
  double section_s = 300.0;
  std::uint64_t seed = 1;
};

/// One drive whose City sections carry a fast heart rate and frequent skin
/// conductance responses; Highway and Rest are calm. The class margin is far
/// larger than the per-drive offsets and noise.
DriveInput make_drive(const std::string& drive_id, std::span<const DrivingSituation> pattern, double section_s,
                      double sample_rate_hz, std::uint64_t seed);

std::vector<DriveInput> make_cohort(const CohortOptions& options = {});

/// Writes <id>.csv, <id>.ann and manifest.csv into `dir`; returns the manifest path.
std::filesystem::path write_cohort(const std::filesystem::path& dir, const CohortOptions& options = {});

}  // namespace stress::synthetic
