#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stress {

enum class ChannelKind { Ecg, HandGsr, FootGsr, Respiration };

inline constexpr std::array<ChannelKind, 4> kAllChannels = {
    ChannelKind::Ecg, ChannelKind::HandGsr, ChannelKind::FootGsr, ChannelKind::Respiration};

/// CSV column name of a channel (`ecg`, `hand_gsr`, `foot_gsr`, `resp`).
std::string_view column_name(ChannelKind kind);

enum class DrivingSituation { Rest, City, Highway };

enum class StressLabel { Low, Medium, High };

std::string_view to_string(DrivingSituation situation);
DrivingSituation parse_situation(std::string_view text);

/// Rest -> Low, Highway -> Medium, City -> High.
constexpr StressLabel stress_label(DrivingSituation situation) {
  switch (situation) {
    case DrivingSituation::Rest: return StressLabel::Low;
    case DrivingSituation::Highway: return StressLabel::Medium;
    case DrivingSituation::City: return StressLabel::High;
  }
  return StressLabel::Low;
}

struct SignalRecord {
  std::string drive_id;
  double sample_rate_hz = 0.0;
  std::map<ChannelKind, std::vector<double>> channels;

  std::size_t length() const;
  double duration_s() const { return static_cast<double>(length()) / sample_rate_hz; }
  const std::vector<double>& channel(ChannelKind kind) const;
};

struct Section {
  double start_s = 0.0;
  double end_s = 0.0;
  DrivingSituation situation = DrivingSituation::Rest;

  double length_s() const { return end_s - start_s; }
  friend bool operator==(const Section&, const Section&) = default;
};

struct SectionAnnotation {
  std::string drive_id;
  std::vector<Section> sections;

  double end_s() const { return sections.empty() ? 0.0 : sections.back().end_s; }
  friend bool operator==(const SectionAnnotation&, const SectionAnnotation&) = default;
};

struct DriveInput {
  SignalRecord record;
  SectionAnnotation annotation;
};

struct ManifestEntry {
  std::string drive_id;
  std::filesystem::path record_path;
  std::filesystem::path annotation_path;
};

inline constexpr double kMinRecordSeconds = 200.0;
inline constexpr double kMinSectionSeconds = 100.0;

/// Reads a record CSV (`time_s,ecg,hand_gsr,foot_gsr,resp`, extra columns ignored).
/// The drive id defaults to the file stem.
SignalRecord load_record(const std::filesystem::path& path, double sample_rate_hz);

/// Sample rate implied by the first `time_s` step of a record CSV.
double infer_sample_rate(const std::filesystem::path& path);

SignalRecord parse_record(std::string_view csv_text, double sample_rate_hz, std::string drive_id);

/// Writes the participating channels back out; numeric values round-trip bit-exactly.
std::string serialize_record(const SignalRecord& record);

SectionAnnotation load_annotations(const std::filesystem::path& path);
SectionAnnotation parse_annotations(std::string_view text);
std::string serialize_annotations(const SectionAnnotation& annotation);

/// Throws NonContiguous, BadAlternation or SectionTooShort.
void validate_annotation(const SectionAnnotation& annotation);

/// Pairs records with annotations by drive id, in record order.
std::vector<DriveInput> validate_drive_set(std::vector<SignalRecord> records,
                                           std::vector<SectionAnnotation> annotations,
                                           double window_length_s = 100.0);

std::vector<ManifestEntry> parse_manifest(std::string_view text,
                                          const std::filesystem::path& base_dir = {});
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

}  // namespace stress
