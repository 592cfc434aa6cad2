#include "stress/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stress {

namespace {

struct Candidate {
  std::size_t index;
  std::size_t left_base;
  std::size_t right_base;
  double prominence;
};

// Local maxima; a flat top reports its middle sample. Boundary samples never qualify.
// Samples within `tol` of each other count as level.
std::vector<std::size_t> local_maxima(std::span<const double> x, double tol) {
  std::vector<std::size_t> peaks;
  const std::size_t n = x.size();
  std::size_t i = 1;
  while (n >= 3 && i < n - 1) {
    if (x[i - 1] < x[i] - tol) {
      std::size_t ahead = i + 1;
      while (ahead < n - 1 && std::abs(x[ahead] - x[i]) <= tol) ++ahead;
      if (x[ahead] < x[i] - tol) {
        peaks.push_back((i + ahead - 1) / 2);
        i = ahead;
        continue;
      }
    }
    ++i;
  }
  return peaks;
}

// Relative to the largest |derivative|; absorbs rounding noise on flat stretches.
constexpr double kLevelTolerance = 1e-9;

// Higher peaks claim their neighbourhood first.
std::vector<std::size_t> select_by_distance(std::span<const double> x, std::vector<std::size_t> peaks,
                                            std::size_t distance) {
  if (distance <= 1 || peaks.size() < 2) return peaks;
  std::vector<std::size_t> order(peaks.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[peaks[a]] > x[peaks[b]]; });
  std::vector<bool> keep(peaks.size(), true);
  for (const auto j : order) {
    if (!keep[j]) continue;
    for (std::size_t k = j; k-- > 0 && peaks[j] - peaks[k] < distance;) keep[k] = false;
    for (std::size_t k = j + 1; k < peaks.size() && peaks[k] - peaks[j] < distance; ++k) keep[k] = false;
  }
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < peaks.size(); ++j) {
    if (keep[j]) out.push_back(peaks[j]);
  }
  return out;
}

// Prominence against the higher of the two flanking minima, floored at zero slope.
Candidate prominence_of(std::span<const double> x, std::size_t peak, double tol) {
  const double top = x[peak];
  std::size_t left_base = peak;
  double left_min = top;
  for (std::size_t i = peak + 1; i-- > 0 && x[i] <= top + tol;) {
    if (x[i] < left_min) {
      left_min = x[i];
      left_base = i;
    }
  }
  std::size_t right_base = peak;
  double right_min = top;
  for (std::size_t i = peak; i < x.size() && x[i] <= top + tol; ++i) {
    if (x[i] < right_min) {
      right_min = x[i];
      right_base = i;
    }
  }
  const double base = std::max({left_min, right_min, 0.0});
  return {peak, left_base, right_base, top - base};
}

double half_prominence_width(std::span<const double> x, const Candidate& c) {
  const double level = x[c.index] - 0.5 * c.prominence;
  std::size_t i = c.index;
  while (c.left_base < i && level < x[i]) --i;
  double left = static_cast<double>(i);
  if (x[i] < level) left += (level - x[i]) / (x[i + 1] - x[i]);

  i = c.index;
  while (i < c.right_base && level < x[i]) ++i;
  double right = static_cast<double>(i);
  if (x[i] < level) right -= (level - x[i]) / (x[i - 1] - x[i]);
  return right - left;
}

}  // namespace

std::vector<double> derivative(std::span<const double> signal, double sample_rate_hz) {
  const std::size_t n = signal.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  d.front() = (signal[1] - signal[0]) * sample_rate_hz;
  d.back() = (signal[n - 1] - signal[n - 2]) * sample_rate_hz;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = 0.5 * (signal[i + 1] - signal[i - 1]) * sample_rate_hz;
  return d;
}

std::vector<GsrPeak> detect_scr_peaks(std::span<const double> gsr_window, double sample_rate_hz,
                                      const FeatureConfig& config) {
  const auto d = derivative(gsr_window, sample_rate_hz);
  double scale = 0.0;
  for (double v : d) scale = std::max(scale, std::abs(v));
  const double tol = kLevelTolerance * scale;
  const auto distance =
      static_cast<std::size_t>(std::max(1.0, std::ceil(config.scr_min_distance_s * sample_rate_hz - 1e-9)));
  const auto peaks = select_by_distance(d, local_maxima(d, tol), distance);

  std::vector<GsrPeak> out;
  for (const auto p : peaks) {
    if (!(d[p] > 0.0)) continue;
    const auto c = prominence_of(d, p, tol);
    if (c.prominence < config.scr_min_prominence || !(c.prominence > 0.0)) continue;
    out.push_back({p, d[p], half_prominence_width(d, c) / sample_rate_hz, c.prominence});
  }
  return out;
}

std::array<double, kGsrFeatureCount> gsr_features(std::span<const double> gsr_window, double sample_rate_hz,
                                                  const FeatureConfig& config) {
  std::array<double, kGsrFeatureCount> f{};
  if (gsr_window.empty()) return f;
  const double n = static_cast<double>(gsr_window.size());
  const double mean = std::accumulate(gsr_window.begin(), gsr_window.end(), 0.0) / n;
  double var = 0.0;
  for (double v : gsr_window) var += (v - mean) * (v - mean);
  f[0] = mean;
  f[1] = var / n;

  const auto peaks = detect_scr_peaks(gsr_window, sample_rate_hz, config);
  if (peaks.empty()) return f;
  double prom_mean = 0.0;
  for (const auto& p : peaks) {
    f[3] += p.height;
    f[4] += p.duration_s;
    prom_mean += p.prominence;
  }
  const double count = static_cast<double>(peaks.size());
  prom_mean /= count;
  double prom_var = 0.0;
  for (const auto& p : peaks) prom_var += (p.prominence - prom_mean) * (p.prominence - prom_mean);
  f[2] = count;
  f[5] = prom_mean;
  f[6] = prom_var / count;
  return f;
}

}  // namespace stress
