#include "doctest.h"
#include "helpers.hpp"

#include "stress/error.hpp"
#include "stress/eval.hpp"
#include "stress/synthetic.hpp"

#include <algorithm>

using namespace stress;
using enum BinaryLabel;

namespace {

ConfusionMatrix matrix(std::size_t ll, std::size_t lh, std::size_t hl, std::size_t hh) {
  ConfusionMatrix cm;
  cm.counts = {{{ll, lh}, {hl, hh}}};
  return cm;
}

// Every feature tells City apart from everything else.
DriveFeatures toy_drives(int drives, int windows_per_section, std::uint64_t seed) {
  Rng rng(seed);
  DriveFeatures out;
  const auto pattern = synthetic::canonical_pattern();
  for (int d = 0; d < drives; ++d) {
    const std::string id = std::to_string(d + 1);
    auto& list = out[id];
    double t = 0.0;
    for (std::size_t s = 0; s < pattern.size(); ++s) {
      for (int w = 0; w < windows_per_section; ++w) {
        FeatureVector f;
        f.drive_id = id;
        f.section_index = static_cast<int>(s);
        f.situation = pattern[s];
        f.window_start_s = t + 50.0 * w;
        for (auto& v : f.values) v = testing::uniform01(rng) + (pattern[s] == DrivingSituation::City ? 5.0 : 0.0);
        list.push_back(f);
      }
      t += 50.0 * (windows_per_section + 1);
    }
  }
  return out;
}

EvalConfig small_config() {
  EvalConfig c;
  c.forest.n_trees = 15;
  c.forest.rng_seed = 11;
  return c;
}

// Straight from the definitions, with rational counts.
Metrics recount(const ConfusionMatrix& cm) {
  Metrics m;
  double total = 0, right = 0;
  for (std::size_t k = 0; k < 2; ++k) {
    double tp = static_cast<double>(cm.counts[k][k]);
    double predicted = static_cast<double>(cm.counts[0][k] + cm.counts[1][k]);
    double actual = static_cast<double>(cm.counts[k][0] + cm.counts[k][1]);
    auto& c = m.per_class[k];
    c.support = static_cast<std::size_t>(actual);
    c.precision = predicted > 0 ? tp / predicted : 0;
    c.recall = actual > 0 ? tp / actual : 0;
    c.f1 = c.precision + c.recall > 0 ? 2 * c.precision * c.recall / (c.precision + c.recall) : 0;
    total += actual;
    right += tp;
  }
  for (const auto& c : m.per_class) {
    const double w = static_cast<double>(c.support) / total;
    m.weighted.precision += w * c.precision;
    m.weighted.recall += w * c.recall;
    m.weighted.f1 += w * c.f1;
  }
  m.accuracy = right / total;
  return m;
}

}  // namespace

TEST_CASE("perfect predictions score 1 everywhere") {
  const auto m = metrics_from_confusion(matrix(4, 0, 0, 6));
  CHECK(m.accuracy == 1.0);
  for (const auto& c : m.per_class) {
    CHECK(c.precision == 1.0);
    CHECK(c.recall == 1.0);
    CHECK(c.f1 == 1.0);
  }
  CHECK(m.weighted.f1 == 1.0);
}

TEST_CASE("metrics worked example") {
  const auto m = metrics_from_confusion(matrix(2, 1, 0, 3));
  const auto& low = m.per_class[0];
  const auto& high = m.per_class[1];
  CHECK(low.precision == 1.0);
  CHECK(low.recall == doctest::Approx(2.0 / 3.0));
  CHECK(low.f1 == doctest::Approx(0.8));
  CHECK(high.precision == doctest::Approx(0.75));
  CHECK(high.recall == 1.0);
  CHECK(high.f1 == doctest::Approx(6.0 / 7.0));
  CHECK(m.accuracy == doctest::Approx(5.0 / 6.0));
  CHECK(low.support == 3);
  CHECK(high.support == 3);
}

TEST_CASE("F1 is the harmonic mean") {
  // precision 0.96, recall 0.95
  const auto m = metrics_from_confusion(matrix(95, 5, 4, 96));
  CHECK(m.per_class[0].precision == doctest::Approx(95.0 / 99.0));
  ClassMetrics c;
  const double p = 0.96, r = 0.95;
  c.f1 = 2 * p * r / (p + r);
  CHECK(c.f1 == doctest::Approx(0.955).epsilon(1e-3));
}

TEST_CASE("empty confusion matrix") {
  try {
    metrics_from_confusion(ConfusionMatrix{});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyMatrix);
  }
}

TEST_CASE("metrics agree with a direct recount on random matrices") {
  Rng rng(6);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto cm = matrix(rng.below(6), rng.below(6), rng.below(6), rng.below(6));
    if (cm.total() == 0) continue;
    const auto got = metrics_from_confusion(cm);
    const auto want = recount(cm);
    CHECK(got.accuracy == doctest::Approx(want.accuracy).epsilon(1e-14));
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(got.per_class[k].precision == doctest::Approx(want.per_class[k].precision).epsilon(1e-14));
      CHECK(got.per_class[k].recall == doctest::Approx(want.per_class[k].recall).epsilon(1e-14));
      CHECK(got.per_class[k].f1 == doctest::Approx(want.per_class[k].f1).epsilon(1e-14));
      CHECK(got.per_class[k].support == want.per_class[k].support);
    }
    CHECK(got.weighted.f1 == doctest::Approx(want.weighted.f1).epsilon(1e-14));
    // Weighted F1 sits between the per-class values.
    const double lo = std::min(got.per_class[0].f1, got.per_class[1].f1);
    const double hi = std::max(got.per_class[0].f1, got.per_class[1].f1);
    CHECK(got.weighted.f1 >= lo - 1e-15);
    CHECK(got.weighted.f1 <= hi + 1e-15);
    for (double v : {got.accuracy, got.weighted.precision, got.weighted.recall, got.weighted.f1}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("summaries are unweighted means over folds") {
  std::vector<FoldMetrics> folds(3);
  const std::vector<ConfusionMatrix> cms{matrix(2, 0, 0, 3), matrix(1, 1, 0, 3), matrix(0, 0, 1, 1)};
  for (std::size_t i = 0; i < 3; ++i) {
    folds[i].n = 2;
    folds[i].test_drive_id = std::to_string(i);
    folds[i].train_accuracy = 0.9 + 0.05 * static_cast<double>(i);
    folds[i].confusion = cms[i];
    folds[i].test = metrics_from_confusion(cms[i]);
    folds[i].test_accuracy = folds[i].test.accuracy;
  }
  FoldMetrics other;
  other.n = 3;
  other.test_accuracy = 0.0;
  folds.push_back(other);

  const auto s = summarize(2, folds);
  CHECK(s.folds == 3);
  CHECK(s.test_accuracy == doctest::Approx((1.0 + 0.8 + 0.5) / 3.0));
  CHECK(s.train_accuracy == doctest::Approx(0.95));
  // The third fold has no low-stress support, so low-stress averages over two folds.
  CHECK(s.per_class[0].recall == doctest::Approx((1.0 + 0.5) / 2.0));
  CHECK(s.per_class[1].recall == doctest::Approx((1.0 + 1.0 + 0.5) / 3.0));
  CHECK(s.weighted.f1 ==
        doctest::Approx((folds[0].test.weighted.f1 + folds[1].test.weighted.f1 + folds[2].test.weighted.f1) / 3.0));
}

TEST_CASE("sweep_n on separable toy drives") {
  const auto data = toy_drives(4, 5, 1);
  const auto config = small_config();
  std::vector<std::pair<int, std::string>> sunk;
  const auto report = sweep_n(data, config, [&](int n, const std::string& id, const ForestModel& m) {
    sunk.emplace_back(n, id);
    CHECK(m.trees.size() == 15);
    CHECK(m.feature_names.size() == kExpandedFeatureCount);
  });
  CHECK(report.drives == std::vector<std::string>{"1", "2", "3", "4"});
  REQUIRE(report.folds.size() == 16);
  CHECK(sunk.size() == 16);
  REQUIRE(report.summaries.size() == 4);
  for (std::size_t i = 0; i < report.folds.size(); ++i) {
    const auto& f = report.folds[i];
    CHECK(f.n == 2 + static_cast<int>(i / 4));
    CHECK(f.test_drive_id == std::to_string(i % 4 + 1));
    CHECK(f.confusion.total() == 5);
    CHECK(f.confusion.counts[0][0] + f.confusion.counts[0][1] == 2);
    CHECK(f.train_size == 15);
    CHECK(f.test_accuracy == 1.0);
  }
  for (const auto& s : report.summaries) CHECK(s.weighted.f1 == 1.0);
}

TEST_CASE("sweep_n names the short section") {
  auto data = toy_drives(3, 5, 2);
  auto& w = data["2"];
  // Section 3 keeps four of its five windows.
  w.erase(w.begin() + 3 * 5 + 4);
  try {
    sweep_n(data, small_config());
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewWindows);
    CHECK(std::string(e.what()).find("2 section 3: 4 windows, need 5") != std::string::npos);
  }
}

TEST_CASE("report writers") {
  const auto report = sweep_n(toy_drives(3, 5, 3), small_config());
  const auto t1 = table1_csv(report);
  CHECK(t1.rfind("n,1,2,3\n2,", 0) == 0);
  CHECK(std::count(t1.begin(), t1.end(), '\n') == 5);

  const auto t2 = table2_csv(report, 5);
  CHECK(t2 ==
        "class,precision,recall,f1,n\n"
        "low(=highway),1,1,1,5\n"
        "high(=city),1,1,1,5\n"
        "weighted_average,1,1,1,5\n");
  CHECK_THROWS_AS(table2_csv(report, 7), Error);

  const auto f3 = fig3_csv(report);
  CHECK(f3.rfind("n,test_accuracy,train_accuracy,weighted_precision,weighted_recall,weighted_f1,low_f1,high_f1\n", 0) == 0);
  CHECK(std::count(f3.begin(), f3.end(), '\n') == 5);

  const auto json = report_json(report);
  CHECK(json.find("\"class_order\"") != std::string::npos);
  CHECK(json.find("\"averages\"") != std::string::npos);
  CHECK(json == report_json(sweep_n(toy_drives(3, 5, 3), small_config())));
}

TEST_CASE("report bytes do not depend on jobs") {
  auto config = small_config();
  config.n_values = {3};
  const auto a = report_json(sweep_n(toy_drives(3, 4, 5), config));
  config.jobs = 3;
  CHECK(report_json(sweep_n(toy_drives(3, 4, 5), config)) == a);
  config.forest.rng_seed = 12;
  const auto b = report_json(sweep_n(toy_drives(3, 4, 5), config));
  CHECK(b != a);
}
