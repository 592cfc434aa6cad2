#include "stress/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace stress::oracle {

std::vector<double> dft_periodogram(std::span<const double> x, double fs) {
  const std::size_t n = x.size();
  long double mean = 0;
  for (double v : x) mean += v;
  mean /= n;
  std::vector<double> p(n / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) {
    long double re = 0;
    long double im = 0;
    for (std::size_t t = 0; t < n; ++t) {
      // Reduce the phase index first so large k*t stays exact.
      const auto phase = static_cast<long double>((k * t) % n) / static_cast<long double>(n);
      re += (x[t] - mean) * std::cos(2 * std::numbers::pi_v<long double> * phase);
      im -= (x[t] - mean) * std::sin(2 * std::numbers::pi_v<long double> * phase);
    }
    long double v = (re * re + im * im) / (static_cast<long double>(n) * fs);
    const bool nyquist = n % 2 == 0 && k == n / 2;
    if (k != 0 && !nyquist) v *= 2;
    p[k] = static_cast<double>(v);
  }
  return p;
}

double butterworth_gain_sq(double f, double fc, double fs, int order) {
  const double r = std::tan(std::numbers::pi * f / fs) / std::tan(std::numbers::pi * fc / fs);
  return 1.0 / (1.0 + std::pow(r, 2.0 * order));
}

double sine_amplitude(std::span<const double> x, double f, double fs) {
  // Normal equations for [sin, cos, 1], solved by Cramer's rule.
  double m[3][3] = {};
  double v[3] = {};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = 2 * std::numbers::pi * f * static_cast<double>(i) / fs;
    const double b[3] = {std::sin(w), std::cos(w), 1.0};
    for (int r = 0; r < 3; ++r) {
      v[r] += b[r] * x[i];
      for (int c = 0; c < 3; ++c) m[r][c] += b[r] * b[c];
    }
  }
  auto det = [](const double a[3][3]) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  const double d = det(m);
  double coef[2];
  for (int k = 0; k < 2; ++k) {
    double t[3][3];
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) t[r][c] = c == k ? v[r] : m[r][c];
    }
    coef[k] = det(t) / d;
  }
  return std::hypot(coef[0], coef[1]);
}

double gini(std::span<const std::size_t> counts) {
  // Probability that two draws with replacement disagree: sum over ordered pairs i != j.
  std::uint64_t total = 0, disagree = 0;
  for (auto c : counts) total += c;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (std::size_t j = 0; j < counts.size(); ++j) {
      if (i != j) disagree += static_cast<std::uint64_t>(counts[i]) * counts[j];
    }
  }
  return static_cast<double>(disagree) / static_cast<double>(total * total);
}

std::optional<Split> exhaustive_split(const TrainingData& data, std::span<const std::size_t> rows,
                                      std::span<const std::size_t> features) {
  auto counts_where = [&](auto pred) {
    std::array<std::size_t, 2> c{};
    for (auto r : rows) {
      if (pred(r)) ++c[static_cast<std::size_t>(data.y[r])];
    }
    return c;
  };
  const auto all = counts_where([](std::size_t) { return true; });
  const double n = static_cast<double>(rows.size());
  const double parent = gini(all);

  // Weighted child impurity as an exact fraction g_num / (n_l * n_r * n).
  using Wide = __int128;
  Wide best_g_num = 0;
  Wide best_g_den = 1;
  std::optional<Split> best;
  std::vector<std::size_t> order(features.begin(), features.end());
  std::sort(order.begin(), order.end());
  for (auto f : order) {
    std::set<double> values;
    for (auto r : rows) values.insert(data.at(r, f));
    for (auto it = values.begin(); std::next(it) != values.end(); ++it) {
      const double thr = *it + (*std::next(it) - *it) / 2.0;
      const auto left = counts_where([&](std::size_t r) { return data.at(r, f) <= thr; });
      const std::array<std::size_t, 2> right{all[0] - left[0], all[1] - left[1]};
      const double nl = static_cast<double>(left[0] + left[1]);
      const double nr = static_cast<double>(right[0] + right[1]);
      if (nl == 0 || nr == 0) continue;
      const double dec = parent - (nl / n) * gini(left) - (nr / n) * gini(right);
      if (dec <= kMinImpurityDecrease) continue;
      const Wide il = static_cast<Wide>(nl);
      const Wide ir = static_cast<Wide>(nr);
      const Wide g_num = ir * (il * il - Wide(left[0]) * left[0] - Wide(left[1]) * left[1]) +
                         il * (ir * ir - Wide(right[0]) * right[0] - Wide(right[1]) * right[1]);
      const Wide g_den = il * ir * static_cast<Wide>(rows.size());
      if (!best || g_num * best_g_den < best_g_num * g_den) {
        best = Split{f, thr, dec};
        best_g_num = g_num;
        best_g_den = g_den;
      }
    }
  }
  return best;
}

std::array<double, 15> hrv_time(std::span<const double> nn) {
  using LD = long double;
  const std::size_t n = nn.size();
  LD s = 0;
  for (double v : nn) s += v;
  const LD mean = s / n;
  LD ss = 0;
  for (double v : nn) ss += (v - mean) * (v - mean);
  const LD sdnn = std::sqrt(ss / n);

  std::vector<LD> d;
  for (std::size_t i = 1; i < n; ++i) d.push_back(static_cast<LD>(nn[i]) - nn[i - 1]);
  LD ds = 0;
  LD dsq = 0;
  int c50 = 0;
  int c20 = 0;
  for (LD v : d) {
    ds += v;
    dsq += v * v;
    c50 += std::fabs(v) > 50 ? 1 : 0;
    c20 += std::fabs(v) > 20 ? 1 : 0;
  }
  const LD dmean = ds / d.size();
  LD dvar = 0;
  for (LD v : d) dvar += (v - dmean) * (v - dmean);
  const LD sdsd = std::sqrt(dvar / d.size());
  const LD rmssd = std::sqrt(dsq / d.size());

  std::vector<double> sorted(nn.begin(), nn.end());
  std::sort(sorted.begin(), sorted.end());
  const double median = n % 2 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;

  LD hs = 0;
  LD hmax = 0;
  LD hmin = 1e300;
  for (double v : nn) {
    const LD h = 60000.0L / v;
    hs += h;
    hmax = std::max(hmax, h);
    hmin = std::min(hmin, h);
  }
  const LD hmean = hs / n;
  LD hv = 0;
  for (double v : nn) hv += (60000.0L / v - hmean) * (60000.0L / v - hmean);

  const LD nd = static_cast<LD>(d.size());
  return {static_cast<double>(mean),        static_cast<double>(sdnn),       static_cast<double>(sdsd),
          static_cast<double>(rmssd),       median,                          static_cast<double>(c50),
          static_cast<double>(100 * c50 / nd), static_cast<double>(c20),     static_cast<double>(100 * c20 / nd),
          static_cast<double>(rmssd / mean), static_cast<double>(sdnn / mean), static_cast<double>(hmean),
          static_cast<double>(hmax),        static_cast<double>(hmin),       static_cast<double>(std::sqrt(hv / n))};
}

}  // namespace stress::oracle
