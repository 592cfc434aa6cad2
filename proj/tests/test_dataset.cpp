#include "doctest.h"
#include "helpers.hpp"

#include "stress/dataset.hpp"
#include "stress/error.hpp"

#include <algorithm>
#include <set>

using namespace stress;
using enum DrivingSituation;

namespace {

constexpr std::size_t kMean = 0, kMedian = 1, kStd = 2, kMin = 3, kMax = 4, kTwa = 5;

double stat(const ExpandedValues& v, std::size_t feature, std::size_t which) {
  return v[feature * kStatsPerFeature + which];
}

FeatureVector window(const std::string& drive, int section, DrivingSituation s, double start, double fill) {
  FeatureVector f;
  f.drive_id = drive;
  f.section_index = section;
  f.situation = s;
  f.window_start_s = start;
  f.values.fill(fill);
  return f;
}

// `per_section` windows in every section, values drawn from rng.
std::vector<FeatureVector> drive_windows(const std::string& id, const std::vector<DrivingSituation>& pattern,
                                         int per_section, Rng& rng) {
  std::vector<FeatureVector> out;
  double t = 0.0;
  for (std::size_t s = 0; s < pattern.size(); ++s) {
    for (int w = 0; w < per_section; ++w) {
      auto f = window(id, static_cast<int>(s), pattern[s], t + 50.0 * w, 0.0);
      for (auto& v : f.values) v = testing::uniform01(rng) * 10.0 - 5.0;
      out.push_back(f);
    }
    t += 50.0 * (per_section + 1);
  }
  return out;
}

std::vector<SectionSample> sections_of(const std::vector<DrivingSituation>& pattern, const std::string& id = "d") {
  std::vector<SectionSample> out;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    SectionSample s;
    s.drive_id = id;
    s.section_index = static_cast<int>(i);
    s.situation = pattern[i];
    s.values.fill(static_cast<double>(i));
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("time_weighted_average examples") {
  CHECK(time_weighted_average(std::vector{4.2, 4.2, 4.2}) == doctest::Approx(4.2).epsilon(1e-15));
  CHECK(time_weighted_average(std::vector{1.0, 2.0, 3.0}) == doctest::Approx(14.0 / 6.0).epsilon(1e-15));
  CHECK(time_weighted_average(std::vector{5.0}) == 5.0);
}

TEST_CASE("time_weighted_average schemes") {
  const std::vector v{1.0, 2.0, 3.0};
  CHECK(time_weighted_average(v, WeightScheme::Uniform) == doctest::Approx(2.0));
  CHECK(time_weighted_average(v, WeightScheme::Linear) == doctest::Approx(14.0 / 6.0));
  // Evenly spaced starts reproduce linear weights; a gap shifts weight forward.
  CHECK(time_weighted_average(v, WeightScheme::Timestamps, std::vector{0.0, 50.0, 100.0}, 50.0) ==
        doctest::Approx(14.0 / 6.0));
  CHECK(time_weighted_average(v, WeightScheme::Timestamps, std::vector{0.0, 50.0, 150.0}, 50.0) ==
        doctest::Approx((1.0 + 4.0 + 12.0) / 7.0));
  CHECK(parse_weight_scheme("timestamps") == WeightScheme::Timestamps);
  CHECK_THROWS_AS(parse_weight_scheme("cubic"), Error);
}

TEST_CASE("expand_section examples") {
  SUBCASE("n = 2") {
    const std::vector<FeatureVector> w{window("d", 0, City, 0, 0.2), window("d", 0, City, 50, 0.4)};
    const auto v = expand_section(w, 2);
    for (std::size_t f = 0; f < kBaseFeatureCount; ++f) {
      CHECK(stat(v, f, kMean) == doctest::Approx(0.3));
      CHECK(stat(v, f, kMedian) == doctest::Approx(0.3));
      CHECK(stat(v, f, kStd) == doctest::Approx(0.1));
      CHECK(stat(v, f, kMin) == 0.2);
      CHECK(stat(v, f, kMax) == 0.4);
      CHECK(stat(v, f, kTwa) == doctest::Approx(1.0 / 3.0));
    }
  }
  SUBCASE("n = 1") {
    const std::vector<FeatureVector> w{window("d", 0, City, 0, 0.7)};
    const auto v = expand_section(w, 1);
    for (std::size_t f = 0; f < kBaseFeatureCount; ++f) {
      for (std::size_t k : {kMean, kMedian, kMin, kMax, kTwa}) CHECK(stat(v, f, k) == 0.7);
      CHECK(stat(v, f, kStd) == 0.0);
    }
  }
  SUBCASE("n = 5 on a constant") {
    std::vector<FeatureVector> w;
    for (int i = 0; i < 5; ++i) w.push_back(window("d", 0, City, 50.0 * i, 1.9));
    const auto v = expand_section(w, 5);
    for (std::size_t f = 0; f < kBaseFeatureCount; ++f) {
      CHECK(stat(v, f, kStd) == 0.0);
      for (std::size_t k : {kMean, kMedian, kMin, kMax, kTwa}) CHECK(stat(v, f, k) == doctest::Approx(1.9).epsilon(1e-15));
    }
  }
  SUBCASE("only the last n windows count") {
    const std::vector<FeatureVector> w{window("d", 0, City, 0, 100.0), window("d", 0, City, 50, 1.0),
                                       window("d", 0, City, 100, 3.0)};
    const auto v = expand_section(w, 2);
    CHECK(stat(v, 0, kMax) == 3.0);
    CHECK(stat(v, 0, kMin) == 1.0);
  }
  SUBCASE("too few windows") {
    const std::vector<FeatureVector> w{window("d", 0, City, 0, 0.2)};
    CHECK_THROWS_AS(expand_section(w, 2), Error);
  }
}

TEST_CASE("expanded names and arity") {
  const auto& names = expanded_feature_names();
  CHECK(names.size() == 252);
  CHECK(kExpandedFeatureCount == 252);
  CHECK(names[0] == "hand_mean__mean");
  CHECK(names[5] == "hand_mean__twa");
  CHECK(names[6] == "hand_var__mean");
  CHECK(names.back() == "hf_norm__twa");
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == 252);
}

TEST_CASE("order-statistics sandwich holds for random sections") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(5));
    std::vector<FeatureVector> w;
    for (int i = 0; i < n + static_cast<int>(rng.below(3)); ++i) {
      auto f = window("d", 0, City, 50.0 * i, 0.0);
      for (auto& v : f.values) v = (testing::uniform01(rng) - 0.5) * std::pow(10.0, static_cast<double>(rng.below(6)));
      w.push_back(f);
    }
    for (auto scheme : {WeightScheme::Linear, WeightScheme::Uniform, WeightScheme::Timestamps}) {
      const auto v = expand_section(w, n, {scheme, 50.0});
      for (std::size_t f = 0; f < kBaseFeatureCount; ++f) {
        const double lo = stat(v, f, kMin);
        const double hi = stat(v, f, kMax);
        for (std::size_t k : {kMean, kMedian, kTwa}) {
          CHECK(lo <= stat(v, f, k));
          CHECK(stat(v, f, k) <= hi);
        }
        CHECK(stat(v, f, kStd) >= 0.0);
        CHECK(std::isfinite(stat(v, f, kStd)));
      }
    }
  }
}

TEST_CASE("expand_drive names the section that is short of windows") {
  Rng rng(1);
  auto w = drive_windows("drive9", {Rest, City, Rest}, 3, rng);
  w.erase(w.begin() + 3, w.begin() + 5);  // section 1 keeps one window
  try {
    expand_drive(w, 2);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewWindows);
    CHECK(std::string(e.what()).find("drive9") != std::string::npos);
    CHECK(std::string(e.what()).find("section 1") != std::string::npos);
  }
  const auto ok = expand_drive(drive_windows("d", {Rest, City, Rest}, 3, rng), 3);
  CHECK(ok.size() == 3);
  CHECK(ok[1].situation == City);
}

TEST_CASE("shift_and_filter examples") {
  SUBCASE("five sections") {
    const auto out = shift_and_filter(sections_of({Rest, City, Highway, City, Rest}));
    REQUIRE(out.size() == 3);
    CHECK(out[0].section_index == 0);
    CHECK(out[1].section_index == 1);
    CHECK(out[2].section_index == 2);
    CHECK(out[0].label == BinaryLabel::HighStress);
    CHECK(out[1].label == BinaryLabel::LowStress);
    CHECK(out[2].label == BinaryLabel::HighStress);
    CHECK(out[1].values[0] == 1.0);
  }
  SUBCASE("canonical seven sections: 3 high, 2 low") {
    const auto out = shift_and_filter(sections_of({Rest, City, Highway, City, Highway, City, Rest}));
    REQUIRE(out.size() == 5);
    const std::vector<BinaryLabel> want{BinaryLabel::HighStress, BinaryLabel::LowStress, BinaryLabel::HighStress,
                                        BinaryLabel::LowStress, BinaryLabel::HighStress};
    for (std::size_t i = 0; i < 5; ++i) CHECK(out[i].label == want[i]);
    CHECK(std::count_if(out.begin(), out.end(), [](auto& s) { return s.label == BinaryLabel::HighStress; }) == 3);
  }
  SUBCASE("the shift drops exactly one sample before the upcoming-Rest filter") {
    for (std::size_t k = 1; k <= 6; ++k) {
      std::vector<DrivingSituation> pattern{Rest};
      for (std::size_t i = 0; i < k; ++i) pattern.push_back(i % 2 ? Highway : City);
      pattern.push_back(Rest);
      const auto out = shift_and_filter(sections_of(pattern));
      // Of the k+1 shifted samples, only the one before the final Rest is dropped.
      CHECK(out.size() == pattern.size() - 2);
    }
  }
  SUBCASE("labels never describe an upcoming Rest") {
    const auto out = shift_and_filter(sections_of({Rest, City, Rest, Highway, Rest}));
    REQUIRE(out.size() == 2);
    CHECK(out[0].section_index == 0);
    CHECK(out[1].section_index == 2);
  }
}

TEST_CASE("binary label strings") {
  CHECK(to_string(BinaryLabel::LowStress) == "low(=highway)");
  CHECK(to_string(BinaryLabel::HighStress) == "high(=city)");
  CHECK(parse_binary_label("high(=city)") == BinaryLabel::HighStress);
}

TEST_CASE("drive_id_less") {
  CHECK(drive_id_less("5", "10"));
  CHECK_FALSE(drive_id_less("10", "5"));
  CHECK(drive_id_less("05", "6"));
  CHECK(drive_id_less("a10", "a5"));
  CHECK(drive_id_less("15", "drive"));
}

TEST_CASE("assemble_loso") {
  Rng rng(3);
  auto samples_for = [&](const std::vector<std::string>& ids) {
    std::vector<ExpandedSample> all;
    for (const auto& id : ids) {
      const auto secs = expand_drive(drive_windows(id, {Rest, City, Highway, City, Highway, City, Rest}, 2, rng), 2);
      const auto shifted = shift_and_filter(secs);
      all.insert(all.end(), shifted.begin(), shifted.end());
    }
    return all;
  };

  SUBCASE("seven drives, ordered numerically") {
    const auto folds = assemble_loso(samples_for({"15", "5", "6", "7", "10", "11", "12"}));
    REQUIRE(folds.size() == 7);
    const std::vector<std::string> order{"5", "6", "7", "10", "11", "12", "15"};
    for (std::size_t i = 0; i < 7; ++i) {
      CHECK(folds[i].test_drive_id == order[i]);
      CHECK(folds[i].test.size() == 5);
      CHECK(folds[i].train.size() == 30);
    }
  }
  SUBCASE("two drives") { CHECK(assemble_loso(samples_for({"a", "b"})).size() == 2); }
  SUBCASE("one drive") {
    try {
      assemble_loso(samples_for({"a"}));
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SingleDrive);
    }
  }
  SUBCASE("folds are disjoint and covering on random partitions") {
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<ExpandedSample> all;
      const int drives = 2 + static_cast<int>(rng.below(8));
      for (int i = 0; i < 40; ++i) {
        ExpandedSample s;
        s.drive_id = "d" + std::to_string(rng.below(static_cast<std::uint64_t>(drives)));
        s.section_index = i;
        all.push_back(s);
      }
      std::set<std::string> ids;
      for (const auto& s : all) ids.insert(s.drive_id);
      if (ids.size() < 2) continue;
      const auto folds = assemble_loso(all);
      CHECK(folds.size() == ids.size());
      for (const auto& f : folds) {
        CHECK(f.train.size() + f.test.size() == all.size());
        for (const auto& s : f.test) CHECK(s.drive_id == f.test_drive_id);
        for (const auto& s : f.train) CHECK(s.drive_id != f.test_drive_id);
        std::multiset<int> seen;
        for (const auto& s : f.train) seen.insert(s.section_index);
        for (const auto& s : f.test) seen.insert(s.section_index);
        CHECK(seen.size() == all.size());
        CHECK(std::set<int>(seen.begin(), seen.end()).size() == all.size());
      }
    }
  }
}

TEST_CASE("expanded dataset CSV") {
  Rng rng(4);
  const auto secs = expand_drive(drive_windows("d", {Rest, City, Rest}, 2, rng), 2);
  const auto shifted = shift_and_filter(secs);
  const auto csv = serialize_expanded_dataset(shifted);
  const auto header = csv.substr(0, csv.find('\n'));
  CHECK(header.rfind("drive_id,section_index,label,hand_mean__mean,", 0) == 0);
  CHECK(std::count(header.begin(), header.end(), ',') == 2 + 252);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + static_cast<long>(shifted.size()));
  CHECK(csv.find("\nd,0,high(=city),") != std::string::npos);
}
