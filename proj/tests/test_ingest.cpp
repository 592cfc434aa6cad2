#include "doctest.h"
#include "helpers.hpp"

#include "stress/error.hpp"
#include "stress/ingest.hpp"
#include "stress/util.hpp"

#include <cstring>
#include <sstream>

using namespace stress;
using testing::TempDir;

namespace {

std::string record_csv(std::size_t rows, double fs, bool with_resp = true, std::string extra_col = "") {
  std::ostringstream s;
  s << "time_s,ecg,hand_gsr,foot_gsr" << (with_resp ? ",resp" : "") << extra_col << "\n";
  for (std::size_t i = 0; i < rows; ++i) {
    s << format_double(static_cast<double>(i) / fs) << "," << format_double(0.001 * static_cast<double>(i % 97)) << ","
      << format_double(1.5 + 0.25 * static_cast<double>(i % 13)) << ",0.3";
    if (with_resp) s << "," << format_double(-0.1 * static_cast<double>(i % 7));
    if (!extra_col.empty()) s << ",99";
    s << "\n";
  }
  return s.str();
}

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Internal;
}

}  // namespace

TEST_CASE("load_record accepts the minimal 200 s record at 15.5 Hz") {
  TempDir dir("ingest_min");
  const auto path = dir.path() / "drive05.csv";
  write_file_atomic(path, record_csv(3100, 15.5));
  const auto r = load_record(path, 15.5);
  CHECK(r.drive_id == "drive05");
  CHECK(r.length() == 3100);
  CHECK(r.duration_s() == doctest::Approx(200.0));
  CHECK(r.channels.size() == 4);
  for (auto k : kAllChannels) CHECK(r.channel(k).size() == 3100);
}

TEST_CASE("load_record errors") {
  SUBCASE("missing resp column names the channel") {
    try {
      parse_record(record_csv(3100, 15.5, false), 15.5, "d");
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingChannel);
      CHECK(std::string(e.what()).find("resp") != std::string::npos);
    }
  }
  SUBCASE("one sample short of 200 s") {
    CHECK(code_of([] { parse_record(record_csv(3099, 15.5), 15.5, "d"); }) == ErrorCode::TooShort);
  }
  SUBCASE("non-finite sample reports its row") {
    auto text = record_csv(3100, 15.5);
    const auto pos = text.find("\n", text.find("\n") + 1);  // end of first data row
    const auto row2 = text.find(",", pos + 1);
    text.replace(row2 + 1, text.find(",", row2 + 1) - row2 - 1, "nan");
    try {
      parse_record(text, 15.5, "d");
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonFiniteSample);
      CHECK(std::string(e.what()).find("data row 1 (line 3)") != std::string::npos);
    }
  }
  SUBCASE("time step inconsistent with the declared rate") {
    CHECK(code_of([] { parse_record(record_csv(3100, 15.5), 16.0, "d"); }) == ErrorCode::BadFormat);
  }
  SUBCASE("file that does not exist") {
    CHECK(code_of([] { load_record("/nonexistent/x.csv", 10.0); }) == ErrorCode::Io);
  }
}

TEST_CASE("extra columns are ignored and numeric columns round-trip bit-exactly") {
  const auto text = record_csv(3200, 16.0, true, ",emg");
  const auto r = parse_record(text, 16.0, "d");
  CHECK(r.channels.size() == 4);
  const auto again = parse_record(serialize_record(r), 16.0, "d");
  for (auto k : kAllChannels) {
    const auto& a = r.channel(k);
    const auto& b = again.channel(k);
    REQUIRE(a.size() == b.size());
    bool identical = true;
    for (std::size_t i = 0; i < a.size(); ++i) identical = identical && std::memcmp(&a[i], &b[i], sizeof(double)) == 0;
    CHECK(identical);
  }
}

TEST_CASE("round-trip keeps awkward doubles exact") {
  auto r = testing::record_of("d", 10.0, 2000);
  testing::TempDir dir("ingest_rt");
  Rng rng(3);
  for (auto& [k, v] : r.channels) {
    for (auto& x : v) x = (testing::uniform01(rng) - 0.5) * 1e-7 + static_cast<double>(rng.below(1000)) * 0.1;
  }
  const auto back = parse_record(serialize_record(r), 10.0, "d");
  CHECK(back.channels == r.channels);
}

TEST_CASE("infer_sample_rate reads the time step") {
  TempDir dir("ingest_rate");
  write_file_atomic(dir.path() / "a.csv", record_csv(3100, 15.5));
  CHECK(infer_sample_rate(dir.path() / "a.csv") == doctest::Approx(15.5).epsilon(1e-9));
}

TEST_CASE("annotations: accepted example and round-trip") {
  const std::string text =
      "drive 05\n"
      "# comment line\n"
      "0 900 Rest\n900 1800 City\n1800 2700 Highway\n2700 3600 City\n3600 4500 Rest\n";
  const auto a = parse_annotations(text);
  CHECK(a.drive_id == "05");
  REQUIRE(a.sections.size() == 5);
  CHECK(a.sections[1].situation == DrivingSituation::City);
  CHECK(a.end_s() == 4500.0);
  CHECK(parse_annotations(serialize_annotations(a)) == a);
}

TEST_CASE("annotation validation errors") {
  using enum DrivingSituation;
  CHECK(code_of([] { parse_annotations("drive x\n0 300 Rest\n300 360 City\n360 600 Highway\n600 900 Rest\n"); }) ==
        ErrorCode::SectionTooShort);
  CHECK(code_of([] { parse_annotations("drive x\n0 300 Rest\n300 600 City\n600 900 City\n900 1200 Rest\n"); }) ==
        ErrorCode::BadAlternation);
  CHECK(code_of([] { parse_annotations("drive x\n0 300 Rest\n310 600 City\n600 900 Rest\n"); }) ==
        ErrorCode::NonContiguous);
  CHECK(code_of([] { parse_annotations("drive x\n10 300 Rest\n300 600 City\n600 900 Rest\n"); }) ==
        ErrorCode::NonContiguous);
  CHECK(code_of([] { parse_annotations("drive x\n0 300 City\n300 600 Highway\n600 900 Rest\n"); }) ==
        ErrorCode::BadAlternation);
  CHECK(code_of([] { parse_annotations("drive x\n0 300 Rest\n300 600 Rest\n"); }) == ErrorCode::BadAlternation);
  CHECK(code_of([] { parse_annotations("0 300 Rest\n"); }) == ErrorCode::BadFormat);
  CHECK(code_of([] { parse_annotations("drive x\n0 300 Parking\n"); }) == ErrorCode::BadFormat);
}

TEST_CASE("stress label map is total and fixed") {
  static_assert(stress_label(DrivingSituation::Rest) == StressLabel::Low);
  static_assert(stress_label(DrivingSituation::Highway) == StressLabel::Medium);
  static_assert(stress_label(DrivingSituation::City) == StressLabel::High);
}

TEST_CASE("validate_drive_set") {
  using enum DrivingSituation;
  auto annotation = [](const std::string& id, double len) {
    return testing::annotation_of(id, {{len / 3, Rest}, {len / 3, City}, {len / 3, Rest}});
  };
  SUBCASE("seven matched pairs, record order kept") {
    std::vector<SignalRecord> records;
    std::vector<SectionAnnotation> anns;
    for (int i = 7; i >= 1; --i) {
      records.push_back(testing::record_of("d" + std::to_string(i), 4.0, 4 * 450));
      anns.insert(anns.begin(), annotation("d" + std::to_string(i), 450));
    }
    const auto pairs = validate_drive_set(records, anns);
    REQUIRE(pairs.size() == 7);
    for (const auto& p : pairs) CHECK(p.record.drive_id == p.annotation.drive_id);
    CHECK(pairs.front().record.drive_id == "d7");
  }
  SUBCASE("record shorter than the annotation by more than one window") {
    std::vector<SignalRecord> records{testing::record_of("d", 4.0, 4 * 2000)};
    std::vector<SectionAnnotation> anns{testing::annotation_of("d", {{900, Rest}, {1800, City}, {1800, Rest}})};
    CHECK(code_of([&] { validate_drive_set(records, anns); }) == ErrorCode::DurationMismatch);
  }
  SUBCASE("orphan record is named") {
    std::vector<SignalRecord> records;
    std::vector<SectionAnnotation> anns;
    for (int i = 0; i < 7; ++i) records.push_back(testing::record_of("d" + std::to_string(i), 4.0, 4 * 450));
    for (int i = 0; i < 6; ++i) anns.push_back(annotation("d" + std::to_string(i), 450));
    try {
      validate_drive_set(records, anns);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnmatchedDrive);
      CHECK(std::string(e.what()).find("d6") != std::string::npos);
    }
  }
  SUBCASE("orphan annotation") {
    std::vector<SignalRecord> records{testing::record_of("a", 4.0, 4 * 450)};
    std::vector<SectionAnnotation> anns{annotation("a", 450), annotation("b", 450)};
    CHECK(code_of([&] { validate_drive_set(records, anns); }) == ErrorCode::UnmatchedDrive);
  }
}

TEST_CASE("manifest parsing resolves relative paths") {
  const auto entries = parse_manifest("# header\n05, r/05.csv, a/05.ann\n\n06,/abs/06.csv,06.ann\n", "/base");
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].drive_id == "05");
  CHECK(entries[0].record_path == std::filesystem::path("/base/r/05.csv"));
  CHECK(entries[1].record_path == std::filesystem::path("/abs/06.csv"));
  CHECK(code_of([] { parse_manifest("05,only_two\n"); }) == ErrorCode::BadFormat);
}
