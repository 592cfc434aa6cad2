#pragma once

#include "stress/forest.hpp"
#include "stress/ingest.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <unistd.h>

namespace testing {

inline constexpr double kPi = std::numbers::pi;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("stresspred_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

inline std::vector<double> sine(std::size_t n, double f_hz, double fs, double amplitude = 1.0, double offset = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = offset + amplitude * std::sin(2 * kPi * f_hz * static_cast<double>(i) / fs);
  return x;
}

inline std::vector<double> uniform_noise(std::size_t n, std::uint64_t seed, double lo = -0.5, double hi = 0.5) {
  stress::Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = lo + (hi - lo) * static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
  return x;
}

inline double uniform01(stress::Rng& rng) { return static_cast<double>(rng.next() >> 11) * 0x1.0p-53; }

inline stress::SignalRecord record_of(const std::string& id, double fs, std::size_t n) {
  stress::SignalRecord r;
  r.drive_id = id;
  r.sample_rate_hz = fs;
  r.channels[stress::ChannelKind::Ecg] = sine(n, 1.2, fs);
  r.channels[stress::ChannelKind::HandGsr] = sine(n, 0.01, fs, 0.5, 2.0);
  r.channels[stress::ChannelKind::FootGsr] = sine(n, 0.02, fs, 0.5, 1.0);
  r.channels[stress::ChannelKind::Respiration] = sine(n, 0.25, fs);
  return r;
}

inline stress::SectionAnnotation annotation_of(const std::string& id,
                                               std::vector<std::pair<double, stress::DrivingSituation>> parts) {
  stress::SectionAnnotation a;
  a.drive_id = id;
  double t = 0.0;
  for (auto [len, sit] : parts) {
    a.sections.push_back({t, t + len, sit});
    t += len;
  }
  return a;
}

}  // namespace testing
