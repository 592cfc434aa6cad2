#include "stress/ingest.hpp"

#include "stress/error.hpp"
#include "stress/util.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

namespace stress {

namespace {

constexpr double kTimeStepTolerance = 1e-6;

std::string row_context(std::size_t data_row) {
  // +2: header line, 1-based
  return "data row " + std::to_string(data_row) + " (line " + std::to_string(data_row + 2) + ")";
}

}  // namespace

std::string_view column_name(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::Ecg: return "ecg";
    case ChannelKind::HandGsr: return "hand_gsr";
    case ChannelKind::FootGsr: return "foot_gsr";
    case ChannelKind::Respiration: return "resp";
  }
  return "?";
}

std::string_view to_string(DrivingSituation situation) {
  switch (situation) {
    case DrivingSituation::Rest: return "Rest";
    case DrivingSituation::City: return "City";
    case DrivingSituation::Highway: return "Highway";
  }
  return "?";
}

DrivingSituation parse_situation(std::string_view text) {
  text = trim(text);
  if (text == "Rest") return DrivingSituation::Rest;
  if (text == "City") return DrivingSituation::City;
  if (text == "Highway") return DrivingSituation::Highway;
  throw Error(ErrorCode::BadFormat, "unknown driving situation '" + std::string(text) + "'");
}

std::size_t SignalRecord::length() const {
  return channels.empty() ? 0 : channels.begin()->second.size();
}

const std::vector<double>& SignalRecord::channel(ChannelKind kind) const {
  const auto it = channels.find(kind);
  if (it == channels.end()) {
    throw Error(ErrorCode::MissingChannel,
                drive_id + ": channel '" + std::string(column_name(kind)) + "' absent");
  }
  return it->second;
}

SignalRecord parse_record(std::string_view csv_text, double sample_rate_hz, std::string drive_id) {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw Error(ErrorCode::BadFormat, drive_id + ": sample rate must be positive");
  }
  auto lines = split(csv_text, '\n');
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw Error(ErrorCode::BadFormat, drive_id + ": empty record file");

  const auto header = split(trim(lines.front()), ',');
  std::optional<std::size_t> time_col;
  std::map<ChannelKind, std::size_t> channel_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = trim(header[c]);
    if (name == "time_s") time_col = c;
    for (auto kind : kAllChannels) {
      if (name == column_name(kind)) channel_col[kind] = c;
    }
  }
  for (auto kind : kAllChannels) {
    if (!channel_col.contains(kind)) {
      throw Error(ErrorCode::MissingChannel,
                  drive_id + ": column '" + std::string(column_name(kind)) + "' absent");
    }
  }
  if (!time_col) throw Error(ErrorCode::BadFormat, drive_id + ": column 'time_s' absent");

  SignalRecord record;
  record.drive_id = std::move(drive_id);
  record.sample_rate_hz = sample_rate_hz;
  for (auto kind : kAllChannels) record.channels[kind].reserve(lines.size() - 1);

  const double step = 1.0 / sample_rate_hz;
  double previous_time = 0.0;
  for (std::size_t row = 0; row + 1 < lines.size(); ++row) {
    const auto fields = split(trim(lines[row + 1]), ',');
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::BadFormat, record.drive_id + ": " + row_context(row) + " has " +
                                            std::to_string(fields.size()) + " fields, expected " +
                                            std::to_string(header.size()));
    }
    double time = 0.0;
    if (!parse_double(fields[*time_col], time)) {
      throw Error(ErrorCode::BadFormat, record.drive_id + ": " + row_context(row) + " bad time_s");
    }
    if (!std::isfinite(time)) {
      throw Error(ErrorCode::NonFiniteSample, record.drive_id + ": " + row_context(row) + " time_s");
    }
    if (row > 0 && std::abs((time - previous_time) - step) > kTimeStepTolerance) {
      throw Error(ErrorCode::BadFormat, record.drive_id + ": " + row_context(row) +
                                            " time step differs from 1/sample_rate");
    }
    previous_time = time;
    for (auto kind : kAllChannels) {
      double value = 0.0;
      if (!parse_double(fields[channel_col[kind]], value)) {
        throw Error(ErrorCode::BadFormat, record.drive_id + ": " + row_context(row) + " bad value in '" +
                                              std::string(column_name(kind)) + "'");
      }
      if (!std::isfinite(value)) {
        throw Error(ErrorCode::NonFiniteSample, record.drive_id + ": " + row_context(row) + " column '" +
                                                    std::string(column_name(kind)) + "'");
      }
      record.channels[kind].push_back(value);
    }
  }

  const auto minimum = static_cast<std::size_t>(std::ceil(sample_rate_hz * kMinRecordSeconds - 1e-9));
  if (record.length() < minimum) {
    throw Error(ErrorCode::TooShort, record.drive_id + ": " + std::to_string(record.length()) +
                                         " samples, need at least " + std::to_string(minimum));
  }
  return record;
}

SignalRecord load_record(const std::filesystem::path& path, double sample_rate_hz) {
  return parse_record(read_file(path), sample_rate_hz, path.stem().string());
}

double infer_sample_rate(const std::filesystem::path& path) {
  const auto text = read_file(path);
  const auto lines = split(text, '\n');
  if (lines.size() < 3) throw Error(ErrorCode::TooShort, path.string() + ": fewer than two rows");
  const auto header = split(trim(lines[0]), ',');
  const auto it = std::find_if(header.begin(), header.end(),
                               [](std::string_view h) { return trim(h) == "time_s"; });
  if (it == header.end()) throw Error(ErrorCode::BadFormat, path.string() + ": column 'time_s' absent");
  const auto col = static_cast<std::size_t>(it - header.begin());
  const auto r0 = split(trim(lines[1]), ',');
  const auto r1 = split(trim(lines[2]), ',');
  double t0 = 0.0;
  double t1 = 0.0;
  if (r0.size() <= col || r1.size() <= col || !parse_double(r0[col], t0) || !parse_double(r1[col], t1) ||
      !(t1 > t0)) {
    throw Error(ErrorCode::BadFormat, path.string() + ": cannot infer sample rate from time_s");
  }
  return 1.0 / (t1 - t0);
}

std::string serialize_record(const SignalRecord& record) {
  std::string out = "time_s";
  for (auto kind : kAllChannels) {
    out += ',';
    out += column_name(kind);
  }
  out += '\n';
  const std::size_t n = record.length();
  for (std::size_t i = 0; i < n; ++i) {
    out += format_double(static_cast<double>(i) / record.sample_rate_hz);
    for (auto kind : kAllChannels) {
      out += ',';
      out += format_double(record.channel(kind)[i]);
    }
    out += '\n';
  }
  return out;
}

void validate_annotation(const SectionAnnotation& annotation) {
  const auto& s = annotation.sections;
  const auto& id = annotation.drive_id;
  if (s.empty()) throw Error(ErrorCode::BadFormat, id + ": no sections");
  if (s.front().start_s != 0.0) {
    throw Error(ErrorCode::NonContiguous, id + ": first section must start at 0");
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i].end_s > s[i].start_s)) {
      throw Error(ErrorCode::NonContiguous, id + ": section " + std::to_string(i) + " has end <= start");
    }
    if (i + 1 < s.size() && s[i].end_s != s[i + 1].start_s) {
      throw Error(ErrorCode::NonContiguous,
                  id + ": section " + std::to_string(i) + " does not end where the next begins");
    }
  }
  bool pattern_ok = s.size() >= 3 && s.front().situation == DrivingSituation::Rest &&
                    s.back().situation == DrivingSituation::Rest;
  for (std::size_t i = 1; pattern_ok && i + 1 < s.size(); ++i) {
    if (s[i].situation == DrivingSituation::Rest) pattern_ok = false;
    if (i >= 2 && s[i].situation == s[i - 1].situation) pattern_ok = false;
  }
  if (!pattern_ok) {
    std::string pattern;
    for (const auto& sec : s) pattern += std::string(pattern.empty() ? "" : ",") + std::string(to_string(sec.situation));
    throw Error(ErrorCode::BadAlternation, id + ": expected Rest,(City|Highway alternating)+,Rest; got " + pattern);
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i].length_s() < kMinSectionSeconds) {
      throw Error(ErrorCode::SectionTooShort, id + ": section " + std::to_string(i) + " lasts " +
                                                  format_double(s[i].length_s()) + " s");
    }
  }
}

SectionAnnotation parse_annotations(std::string_view text) {
  SectionAnnotation annotation;
  bool have_drive = false;
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string_view> tokens;
    for (auto tok : split(line, ' ')) {
      if (!trim(tok).empty()) tokens.push_back(trim(tok));
    }
    if (!have_drive) {
      if (tokens.size() != 2 || tokens[0] != "drive") {
        throw Error(ErrorCode::BadFormat, "annotation line " + std::to_string(line_no) +
                                              ": expected 'drive <drive_id>'");
      }
      annotation.drive_id = std::string(tokens[1]);
      have_drive = true;
      continue;
    }
    Section section;
    if (tokens.size() != 3 || !parse_double(tokens[0], section.start_s) ||
        !parse_double(tokens[1], section.end_s)) {
      throw Error(ErrorCode::BadFormat, "annotation line " + std::to_string(line_no) +
                                            ": expected '<start_s> <end_s> <Rest|City|Highway>'");
    }
    section.situation = parse_situation(tokens[2]);
    annotation.sections.push_back(section);
  }
  if (!have_drive) throw Error(ErrorCode::BadFormat, "annotation file has no 'drive' line");
  validate_annotation(annotation);
  return annotation;
}

SectionAnnotation load_annotations(const std::filesystem::path& path) {
  return parse_annotations(read_file(path));
}

std::string serialize_annotations(const SectionAnnotation& annotation) {
  std::string out = "drive " + annotation.drive_id + "\n";
  for (const auto& s : annotation.sections) {
    out += format_double(s.start_s) + " " + format_double(s.end_s) + " " +
           std::string(to_string(s.situation)) + "\n";
  }
  return out;
}

std::vector<DriveInput> validate_drive_set(std::vector<SignalRecord> records,
                                           std::vector<SectionAnnotation> annotations,
                                           double window_length_s) {
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    if (!by_id.emplace(annotations[i].drive_id, i).second) {
      throw Error(ErrorCode::UnmatchedDrive, "duplicate annotation for drive '" + annotations[i].drive_id + "'");
    }
  }
  std::set<std::string> seen;
  std::vector<DriveInput> pairs;
  pairs.reserve(records.size());
  for (auto& record : records) {
    if (!seen.insert(record.drive_id).second) {
      throw Error(ErrorCode::UnmatchedDrive, "duplicate record for drive '" + record.drive_id + "'");
    }
    const auto it = by_id.find(record.drive_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::UnmatchedDrive, "record '" + record.drive_id + "' has no annotation");
    }
    auto& annotation = annotations[it->second];
    const double gap = std::abs(record.duration_s() - annotation.end_s());
    if (gap > window_length_s) {
      throw Error(ErrorCode::DurationMismatch,
                  record.drive_id + ": record covers " + format_double(record.duration_s()) +
                      " s but annotation ends at " + format_double(annotation.end_s()) + " s");
    }
    pairs.push_back({std::move(record), std::move(annotation)});
  }
  for (const auto& [id, index] : by_id) {
    if (!seen.contains(id)) throw Error(ErrorCode::UnmatchedDrive, "annotation '" + id + "' has no record");
  }
  return pairs;
}

std::vector<ManifestEntry> parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  std::vector<ManifestEntry> entries;
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line, ',');
    if (fields.size() != 3 || trim(fields[0]).empty()) {
      throw Error(ErrorCode::BadFormat, "manifest line " + std::to_string(line_no) +
                                            ": expected '<drive_id>,<record_csv>,<annotation>'");
    }
    auto resolve = [&](std::string_view p) {
      std::filesystem::path path{std::string(trim(p))};
      return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    entries.push_back({std::string(trim(fields[0])), resolve(fields[1]), resolve(fields[2])});
  }
  return entries;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_file(path), path.parent_path());
}

}  // namespace stress
