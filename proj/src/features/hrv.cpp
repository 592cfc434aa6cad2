#include "stress/error.hpp"
#include "stress/features.hpp"
#include "stress/util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stress {

namespace {

constexpr double kRefractoryS = 0.25;
constexpr double kIntegrationS = 0.150;
constexpr double kSearchS = 0.1;
constexpr double kThresholdInitS = 2.0;
constexpr double kTachogramRateHz = 4.0;
constexpr double kMinTachogramSpanS = 30.0;
// Band power (ms^2) below which a band counts as empty; a flat tachogram leaves
// only rounding residue after mean removal.
constexpr double kNegligiblePowerMs2 = 1e-9;
constexpr double kMaxMedianDeviation = 0.5;

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pop_std(std::span<const double> v, double mean) {
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Local maxima of the integrated signal, flat tops reported at their middle.
std::vector<std::size_t> integrated_maxima(const std::vector<double>& x) {
  std::vector<std::size_t> peaks;
  const std::size_t n = x.size();
  for (std::size_t i = 1; n >= 3 && i < n - 1;) {
    if (x[i - 1] < x[i]) {
      std::size_t ahead = i + 1;
      while (ahead < n - 1 && x[ahead] == x[i]) ++ahead;
      if (x[ahead] < x[i]) {
        peaks.push_back((i + ahead - 1) / 2);
        i = ahead;
        continue;
      }
    }
    ++i;
  }
  return peaks;
}

}  // namespace

NnSeries detect_r_peaks(std::span<const double> ecg, double fs) {
  const std::size_t n = ecg.size();
  if (n < 8 || !(fs > 0.0)) throw Error(ErrorCode::InsufficientBeats, "window too short for QRS detection");

  // Five-point derivative, squared.
  std::vector<double> energy(n, 0.0);
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const double d = fs * (-ecg[i - 2] - 2.0 * ecg[i - 1] + 2.0 * ecg[i + 1] + ecg[i + 2]) / 8.0;
    energy[i] = d * d;
  }

  // Centered moving-window integration.
  const auto half = static_cast<std::size_t>(std::max(0.0, std::round(kIntegrationS * fs / 2.0)));
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + energy[i];
  std::vector<double> integrated(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    integrated[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  const double peak_level = *std::max_element(integrated.begin(), integrated.end());
  if (!(peak_level > 1e-12)) throw Error(ErrorCode::InsufficientBeats, "no QRS energy in window");

  // Adaptive threshold between running signal-peak and noise-peak levels.
  const auto init_len = std::min(n, static_cast<std::size_t>(kThresholdInitS * fs) + 1);
  double signal_level = *std::max_element(integrated.begin(), integrated.begin() + static_cast<std::ptrdiff_t>(init_len));
  double noise_level = 0.5 * mean_of(std::span(integrated).first(init_len));
  const auto refractory = static_cast<std::size_t>(std::ceil(kRefractoryS * fs));

  std::vector<std::size_t> beats;
  for (const auto c : integrated_maxima(integrated)) {
    const double a = integrated[c];
    const double threshold = noise_level + 0.25 * (signal_level - noise_level);
    if (a > threshold) {
      if (!beats.empty() && c - beats.back() < refractory) {
        if (a > integrated[beats.back()]) beats.back() = c;
        continue;
      }
      beats.push_back(c);
      signal_level = 0.125 * a + 0.875 * signal_level;
    } else {
      noise_level = 0.125 * a + 0.875 * noise_level;
    }
  }

  // Refine each beat on the ECG itself: largest deviation near the energy peak,
  // then a 3-point parabola.
  const double level = mean_of(ecg);
  const auto search = static_cast<std::size_t>(std::max(1.0, std::round(kSearchS * fs)));
  std::vector<double> times;
  for (const auto b : beats) {
    const std::size_t lo = b >= search ? b - search : 0;
    const std::size_t hi = std::min(n - 1, b + search);
    std::size_t best = lo;
    for (std::size_t i = lo; i <= hi; ++i) {
      if (std::abs(ecg[i] - level) > std::abs(ecg[best] - level)) best = i;
    }
    double offset = 0.0;
    if (best > 0 && best + 1 < n) {
      const double y0 = std::abs(ecg[best - 1] - level);
      const double y1 = std::abs(ecg[best] - level);
      const double y2 = std::abs(ecg[best + 1] - level);
      const double denom = y0 - 2.0 * y1 + y2;
      if (denom < 0.0) offset = std::clamp(0.5 * (y0 - y2) / denom, -0.5, 0.5);
    }
    const double t = (static_cast<double>(best) + offset) / fs;
    if (!times.empty() && t - times.back() < kRefractoryS) continue;
    times.push_back(t);
  }
  return clean_nn(std::move(times));
}

NnSeries clean_nn(std::vector<double> r_peak_times_s) {
  NnSeries out;
  out.r_peak_times_s = std::move(r_peak_times_s);
  const auto& t = out.r_peak_times_s;
  if (t.size() < 2) throw Error(ErrorCode::InsufficientBeats, std::to_string(t.size()) + " beats detected");

  std::vector<double> nn(t.size() - 1);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) nn[i] = 1000.0 * (t[i + 1] - t[i]);

  std::vector<double> plausible;
  for (double v : nn) {
    if (v >= kMinNnMs && v <= kMaxNnMs) plausible.push_back(v);
  }
  const double median = plausible.empty() ? 0.0 : median_of(plausible);

  std::vector<bool> drop(nn.size(), false);
  for (std::size_t i = 0; i < nn.size(); ++i) {
    const bool bad = nn[i] < kMinNnMs || nn[i] > kMaxNnMs ||
                     std::abs(nn[i] - median) > kMaxMedianDeviation * median;
    if (!bad) continue;
    drop[i] = true;
    if (i > 0) drop[i - 1] = true;
    if (i + 1 < nn.size()) drop[i + 1] = true;
  }
  for (std::size_t i = 0; i < nn.size(); ++i) {
    if (drop[i]) continue;
    out.nn_ms.push_back(nn[i]);
    out.nn_times_s.push_back(t[i + 1]);
  }
  if (out.nn_ms.size() < kMinNnIntervals) {
    throw Error(ErrorCode::InsufficientBeats,
                std::to_string(out.nn_ms.size()) + " valid NN intervals, need " + std::to_string(kMinNnIntervals));
  }
  return out;
}

std::array<double, kHrvTimeFeatureCount> hrv_time_features(std::span<const double> nn) {
  if (nn.size() < 2) throw Error(ErrorCode::InsufficientBeats, "need at least two NN intervals");
  std::vector<double> diffs(nn.size() - 1);
  for (std::size_t i = 0; i + 1 < nn.size(); ++i) diffs[i] = nn[i + 1] - nn[i];

  const double mean_nn = mean_of(nn);
  const double sdnn = pop_std(nn, mean_nn);
  const double sdsd = pop_std(diffs, mean_of(diffs));
  double sq = 0.0;
  double nn50 = 0.0;
  double nn20 = 0.0;
  for (double d : diffs) {
    sq += d * d;
    if (std::abs(d) > 50.0) nn50 += 1.0;
    if (std::abs(d) > 20.0) nn20 += 1.0;
  }
  const double n_diffs = static_cast<double>(diffs.size());
  const double rmssd = std::sqrt(sq / n_diffs);

  std::vector<double> hr(nn.size());
  std::transform(nn.begin(), nn.end(), hr.begin(), [](double v) { return 60000.0 / v; });
  const double hr_mean = mean_of(hr);
  const auto [hr_min, hr_max] = std::minmax_element(hr.begin(), hr.end());

  return {mean_nn,
          sdnn,
          sdsd,
          rmssd,
          median_of(std::vector<double>(nn.begin(), nn.end())),
          nn50,
          100.0 * nn50 / n_diffs,
          nn20,
          100.0 * nn20 / n_diffs,
          rmssd / mean_nn,
          sdnn / mean_nn,
          hr_mean,
          *hr_max,
          *hr_min,
          pop_std(hr, hr_mean)};
}

HrvBands hrv_band_powers(const NnSeries& nn) {
  const auto& t = nn.nn_times_s;
  if (nn.nn_ms.size() < kMinNnIntervals || t.size() != nn.nn_ms.size()) {
    throw Error(ErrorCode::InsufficientBeats, "need at least four NN intervals");
  }
  const double span = t.back() - t.front();
  if (span < kMinTachogramSpanS) {
    throw Error(ErrorCode::InsufficientBeats, "NN series spans " + format_double(span) + " s, need 30 s");
  }
  const double step = 1.0 / kTachogramRateHz;
  const auto count = static_cast<std::size_t>(std::floor(span / step + 1e-9)) + 1;
  std::vector<double> resampled(count);
  std::size_t j = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double at = t.front() + static_cast<double>(i) * step;
    while (j + 2 < t.size() && t[j + 1] < at) ++j;
    const double w = std::clamp((at - t[j]) / (t[j + 1] - t[j]), 0.0, 1.0);
    resampled[i] = nn.nn_ms[j] + w * (nn.nn_ms[j + 1] - nn.nn_ms[j]);
  }
  const auto spectrum = periodogram(resampled, kTachogramRateHz);
  return {band_power(spectrum, 0.003, 0.40), band_power(spectrum, 0.003, 0.04), band_power(spectrum, 0.04, 0.15),
          band_power(spectrum, 0.15, 0.40)};
}

HrvFrequencyFeatures hrv_freq_features(const NnSeries& nn) {
  const auto bands = hrv_band_powers(nn);
  const double lf_hf = bands.lf + bands.hf;
  if (!(lf_hf > kNegligiblePowerMs2)) throw Error(ErrorCode::DegenerateSpectrum, "LF + HF power is zero");
  HrvFrequencyFeatures out;
  out.ratio_undefined = !(bands.hf > kNegligiblePowerMs2);
  out.values = {bands.total,
                bands.vlf,
                bands.lf,
                bands.hf,
                out.ratio_undefined ? 0.0 : bands.lf / bands.hf,
                100.0 * bands.lf / lf_hf,
                100.0 * bands.hf / lf_hf};
  return out;
}

}  // namespace stress
