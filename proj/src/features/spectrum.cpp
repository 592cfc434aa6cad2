#include "stress/error.hpp"
#include "stress/features.hpp"
#include "stress/util.hpp"

#include <fftw3.h>

#include <memory>
#include <mutex>
#include <numeric>

namespace stress {

namespace {

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* plan) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
};

}  // namespace

Spectrum periodogram(std::span<const double> window, double sample_rate_hz) {
  const std::size_t n = window.size();
  Spectrum s;
  if (n < 2) return s;
  const double mean = std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(n);
  std::vector<double> in(n);
  for (std::size_t i = 0; i < n; ++i) in[i] = window[i] - mean;
  const std::size_t bins = n / 2 + 1;
  std::vector<fftw_complex> out(bins);

  std::unique_ptr<fftw_plan_s, PlanDeleter> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out.data(), FFTW_ESTIMATE));
  }
  if (!plan) throw Error(ErrorCode::Internal, "fftw plan creation failed");
  fftw_execute(plan.get());

  const double scale = 1.0 / (static_cast<double>(n) * sample_rate_hz);
  s.frequencies_hz.resize(bins);
  s.power.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    s.frequencies_hz[k] = static_cast<double>(k) * sample_rate_hz / static_cast<double>(n);
    double p = (out[k][0] * out[k][0] + out[k][1] * out[k][1]) * scale;
    const bool nyquist = (n % 2 == 0) && k == n / 2;
    if (k != 0 && !nyquist) p *= 2.0;
    s.power[k] = p;
  }
  return s;
}

double band_power(std::span<const double> frequencies, std::span<const double> powers, double lo_hz,
                  double hi_hz) {
  if (frequencies.size() != powers.size()) throw Error(ErrorCode::Internal, "frequency/power size mismatch");
  const std::size_t n = frequencies.size();
  double total = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < n; ++k) {
    const double f = frequencies[k];
    if (f < lo_hz || f >= hi_hz) continue;
    any = true;
    const double left = k > 0 ? frequencies[k] - frequencies[k - 1] : 0.0;
    const double right = k + 1 < n ? frequencies[k + 1] - frequencies[k] : 0.0;
    total += 0.5 * (left + right) * powers[k];
  }
  if (!any) {
    throw Error(ErrorCode::EmptyBand, "no frequency bin in [" + format_double(lo_hz) + ", " +
                                          format_double(hi_hz) + ") Hz");
  }
  return total;
}

double band_power(const Spectrum& spectrum, double lo_hz, double hi_hz) {
  return band_power(spectrum.frequencies_hz, spectrum.power, lo_hz, hi_hz);
}

std::array<double, kRespFeatureCount> resp_features(std::span<const double> resp_window, double sample_rate_hz) {
  std::array<double, kRespFeatureCount> f{};
  if (resp_window.empty()) return f;
  const double n = static_cast<double>(resp_window.size());
  const double mean = std::accumulate(resp_window.begin(), resp_window.end(), 0.0) / n;
  double var = 0.0;
  for (double v : resp_window) var += (v - mean) * (v - mean);
  f[0] = mean;
  f[1] = var / n;
  const auto spectrum = periodogram(resp_window, sample_rate_hz);
  static constexpr std::array<double, 5> kEdges = {0.0, 0.1, 0.2, 0.3, 0.4};
  for (std::size_t b = 0; b < 4; ++b) f[2 + b] = band_power(spectrum, kEdges[b], kEdges[b + 1]);
  return f;
}

}  // namespace stress
