#include "stress/selftest.hpp"

#include "stress/eval.hpp"
#include "stress/features.hpp"
#include "stress/oracles.hpp"
#include "stress/pipeline.hpp"
#include "stress/preprocess.hpp"
#include "stress/synthetic.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

namespace stress {

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = static_cast<double>(rng.next() >> 11) * 0x1.0p-53 - 0.5;
  return x;
}

std::string check_filter() {
  const double fs = 128.0;
  const double fc = 10.0;
  for (double f : {1.0, 5.0, 10.0, 14.0, 20.0}) {
    std::vector<double> x(4096);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2 * std::numbers::pi * f * static_cast<double>(i) / fs);
    const auto y = butterworth_lowpass(x, {5, fc, fs}, FilterPass::ZeroPhase).signal;
    const std::span<const double> mid(y.data() + 1024, 2048);
    const double got = oracle::sine_amplitude(mid, f, fs);
    const double want = oracle::butterworth_gain_sq(f, fc, fs, 5);
    if (std::abs(got - want) > 1e-3) {
      std::ostringstream s;
      s << "gain at " << f << " Hz: " << got << " vs " << want;
      return s.str();
    }
  }
  return {};
}

std::string check_spectrum() {
  for (std::size_t n : {257u, 512u}) {
    const auto x = noise(n, n);
    const auto got = periodogram(x, 4.0);
    const auto want = oracle::dft_periodogram(x, 4.0);
    for (std::size_t k = 0; k < want.size(); ++k) {
      if (std::abs(got.power[k] - want[k]) > 1e-9 * (1.0 + want[k])) return "bin " + std::to_string(k);
    }
  }
  return {};
}

std::string check_hrv() {
  auto x = noise(200, 7);
  for (auto& v : x) v = 800.0 + 200.0 * v;
  const auto got = hrv_time_features(x);
  const auto want = oracle::hrv_time(x);
  for (std::size_t k = 0; k < got.size(); ++k) {
    if (std::abs(got[k] - want[k]) > 1e-9 * (1.0 + std::abs(want[k]))) return "feature " + std::to_string(k);
  }
  return {};
}

std::string check_gini() {
  for (std::size_t a = 0; a < 20; ++a) {
    for (std::size_t b = 0; b < 20; ++b) {
      if (a + b == 0) continue;
      const std::array<std::size_t, 2> c{a, b};
      if (std::abs(gini(c) - oracle::gini(c)) > 1e-12) return "counts " + std::to_string(a) + "," + std::to_string(b);
    }
  }
  return {};
}

std::string check_best_split() {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    TrainingData d;
    d.n_features = 4;
    for (int i = 0; i < 30; ++i) {
      std::vector<double> row(4);
      // Coarse grid so ties and repeated values occur.
      for (auto& v : row) v = static_cast<double>(rng.below(6));
      d.add(row, rng.below(2) ? BinaryLabel::HighStress : BinaryLabel::LowStress, std::to_string(i));
    }
    std::vector<std::size_t> rows;
    for (int i = 0; i < 30; ++i) rows.push_back(rng.below(30));
    const std::vector<std::size_t> feats{0, 1, 2, 3};
    const auto got = best_split(d, rows, feats);
    const auto want = oracle::exhaustive_split(d, rows, feats);
    if (got.has_value() != want.has_value()) return "trial " + std::to_string(trial) + ": existence";
    if (got && (got->feature != want->feature || got->threshold != want->threshold)) {
      return "trial " + std::to_string(trial) + ": chose a different split";
    }
  }
  return {};
}

std::string check_end_to_end(unsigned jobs) {
  synthetic::CohortOptions opts;
  opts.drives = 3;
  RunConfig cfg;
  cfg.eval.jobs = jobs;
  cfg.eval.n_values = {2};
  cfg.eval.forest.n_trees = 25;
  DriveFeatures data;
  for (const auto& drive : synthetic::make_cohort(opts)) {
    data[drive.record.drive_id] = extract_drive(drive, cfg).features;
  }
  const auto report = sweep_n(data, cfg.eval);
  const double acc = report.summaries.front().test_accuracy;
  if (acc < 0.99) return "synthetic accuracy " + std::to_string(acc);
  return {};
}

}  // namespace

bool run_selftest(std::ostream& out, unsigned jobs) {
  const std::pair<const char*, std::function<std::string()>> suites[] = {
      {"filter", check_filter},
      {"spectrum", check_spectrum},
      {"hrv", check_hrv},
      {"gini", check_gini},
      {"best_split", check_best_split},
      {"end_to_end", [jobs] { return check_end_to_end(jobs); }},
  };
  bool ok = true;
  for (const auto& [name, fn] : suites) {
    std::string failure;
    try {
      failure = fn();
    } catch (const std::exception& e) {
      failure = std::string("threw: ") + e.what();
    }
    out << (failure.empty() ? "PASS " : "FAIL ") << name;
    if (!failure.empty()) out << " (" << failure << ")";
    out << "\n";
    ok = ok && failure.empty();
  }
  return ok;
}

}  // namespace stress
