#pragma once

#include "stress/ingest.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace stress {

enum class FilterPass { Single, ZeroPhase };

FilterPass parse_filter_pass(std::string_view text);
std::string_view to_string(FilterPass pass);

struct FilterSpec {
  int order = 5;
  double cutoff_hz = 1.0;
  double sample_rate_hz = 1.0;

  /// Cutoff at or above Nyquist: the filter is skipped.
  bool pass_through() const { return cutoff_hz >= sample_rate_hz / 2.0; }
};

/// One biquad in transposed direct form II, a0 normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

/// Digital Butterworth low-pass as cascaded sections (bilinear transform with
/// prewarping). Each section has unit DC gain.
std::vector<Biquad> butterworth_sections(const FilterSpec& spec);

struct FilterResult {
  std::vector<double> signal;
  bool pass_through = false;
};

FilterResult butterworth_lowpass(std::span<const double> signal, const FilterSpec& spec,
                                 FilterPass pass = FilterPass::ZeroPhase);

std::vector<double> min_max_normalize(std::span<const double> signal);

struct PreprocessConfig {
  int filter_order = 5;
  double cutoff_ecg_hz = 40.0;
  double cutoff_resp_hz = 10.0;
  double cutoff_gsr_hz = 1.0;
  FilterPass filter_pass = FilterPass::ZeroPhase;
  double window_length_s = 100.0;
  double window_hop_s = 50.0;

  double cutoff_for(ChannelKind kind) const;
};

struct PreprocessedRecord {
  SignalRecord record;
  /// Channels whose cutoff was at or above Nyquist and were left unfiltered.
  std::vector<ChannelKind> pass_through;
};

/// Normalize, then filter, every participating channel.
PreprocessedRecord preprocess_record(const SignalRecord& record, const PreprocessConfig& config);

struct Window {
  std::string drive_id;
  int section_index = 0;
  DrivingSituation situation = DrivingSituation::Rest;
  double start_s = 0.0;
  double end_s = 0.0;
  double sample_rate_hz = 0.0;
  std::map<ChannelKind, std::vector<double>> samples;

  const std::vector<double>& channel(ChannelKind kind) const { return samples.at(kind); }
};

/// Number of windows a section of `section_length_s` seconds holds.
int window_count(double section_length_s, double window_length_s = 100.0, double hop_s = 50.0);

/// Section-anchored sliding windows; never straddle a section boundary.
std::vector<Window> slice_windows(const SignalRecord& record, const SectionAnnotation& annotation,
                                  double window_length_s = 100.0, double hop_s = 50.0);

}  // namespace stress
