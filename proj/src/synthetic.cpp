#include "stress/synthetic.hpp"

#include "stress/forest.hpp"
#include "stress/util.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace stress::synthetic {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
}

double gaussian(Rng& rng) {
  // Box-Muller; u1 kept away from zero.
  const double u1 = (static_cast<double>(rng.next() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

struct Wave {
  double offset_s;
  double amplitude;
  double sigma_s;
};

constexpr Wave kBeat[] = {
    {-0.200, 0.12, 0.025},  // P
    {-0.025, -0.10, 0.010}, // Q
    {0.000, 1.00, 0.012},   // R
    {0.025, -0.20, 0.010},  // S
    {0.300, 0.30, 0.045},   // T
};

struct Physiology {
  double heart_rate_bpm;
  double scr_interval_lo_s;
  double scr_interval_hi_s;
  double breathing_hz;
};

Physiology physiology(DrivingSituation s) {
  switch (s) {
    case DrivingSituation::City: return {96.0, 4.0, 8.0, 0.33};
    case DrivingSituation::Highway: return {66.0, 25.0, 45.0, 0.25};
    case DrivingSituation::Rest: return {62.0, 30.0, 50.0, 0.22};
  }
  return {62.0, 30.0, 50.0, 0.22};
}

// Bateman-shaped response, unit peak.
double scr_shape(double t) {
  constexpr double kRise = 0.7;
  constexpr double kDecay = 3.0;
  static const double peak = [] {
    const double at = std::log(kDecay / kRise) * kRise * kDecay / (kDecay - kRise);
    return std::exp(-at / kDecay) - std::exp(-at / kRise);
  }();
  if (t <= 0.0) return 0.0;
  return (std::exp(-t / kDecay) - std::exp(-t / kRise)) / peak;
}

}  // namespace

std::vector<DrivingSituation> canonical_pattern() {
  using enum DrivingSituation;
  return {Rest, City, Highway, City, Highway, City, Rest};
}

std::vector<double> ecg_from_beats(std::span<const double> beat_times_s, double sample_rate_hz, std::size_t length,
                                   double noise, std::uint64_t seed) {
  std::vector<double> ecg(length, 0.0);
  for (const double tb : beat_times_s) {
    const auto lo = static_cast<long long>(std::floor((tb - 0.4) * sample_rate_hz));
    const auto hi = static_cast<long long>(std::ceil((tb + 0.5) * sample_rate_hz));
    for (long long i = std::max(0LL, lo); i <= hi && i < static_cast<long long>(length); ++i) {
      const double t = static_cast<double>(i) / sample_rate_hz - tb;
      double v = 0.0;
      for (const auto& w : kBeat) {
        const double z = (t - w.offset_s) / w.sigma_s;
        v += w.amplitude * std::exp(-0.5 * z * z);
      }
      ecg[static_cast<std::size_t>(i)] += v;
    }
  }
  if (noise > 0.0) {
    Rng rng(seed, 0xEC6);
    for (auto& v : ecg) v += noise * gaussian(rng);
  }
  return ecg;
}

DriveInput make_drive(const std::string& drive_id, std::span<const DrivingSituation> pattern, double section_s,
                      double sample_rate_hz, std::uint64_t seed) {
  Rng rng(seed, 0);
  const double duration = section_s * static_cast<double>(pattern.size());
  const auto length = static_cast<std::size_t>(std::floor(duration * sample_rate_hz));
  auto situation_at = [&](double t) {
    const auto idx = static_cast<std::size_t>(std::max(0.0, std::floor(t / section_s)));
    return pattern[std::min(idx, pattern.size() - 1)];
  };

  const double hr_offset = uniform(rng, -3.0, 3.0);
  const double scr_gain = uniform(rng, 0.8, 1.2);
  const double tonic = uniform(rng, 2.0, 6.0);

  std::vector<double> beats;
  for (double t = uniform(rng, 0.2, 0.6); t < duration;) {
    beats.push_back(t);
    const double bpm = physiology(situation_at(t)).heart_rate_bpm + hr_offset;
    const double rr = 60.0 / bpm * (1.0 + 0.03 * std::sin(kTwoPi * 0.25 * t)) + 0.008 * gaussian(rng);
    t += rr;
  }

  std::vector<double> scr_onsets;
  std::vector<double> scr_amplitudes;
  for (double t = uniform(rng, 0.0, 5.0); t < duration;) {
    scr_onsets.push_back(t);
    scr_amplitudes.push_back(scr_gain * uniform(rng, 0.3, 0.6));
    const auto p = physiology(situation_at(t));
    t += uniform(rng, p.scr_interval_lo_s, p.scr_interval_hi_s);
  }

  SignalRecord record;
  record.drive_id = drive_id;
  record.sample_rate_hz = sample_rate_hz;
  record.channels[ChannelKind::Ecg] = ecg_from_beats(beats, sample_rate_hz, length, 0.02, seed);

  auto& hand = record.channels[ChannelKind::HandGsr];
  auto& foot = record.channels[ChannelKind::FootGsr];
  auto& resp = record.channels[ChannelKind::Respiration];
  hand.assign(length, 0.0);
  foot.assign(length, 0.0);
  resp.assign(length, 0.0);
  for (std::size_t k = 0; k < scr_onsets.size(); ++k) {
    const auto first = static_cast<std::size_t>(std::ceil(scr_onsets[k] * sample_rate_hz));
    const auto last = std::min(length, static_cast<std::size_t>((scr_onsets[k] + 30.0) * sample_rate_hz));
    for (std::size_t i = first; i < last; ++i) {
      const double t = static_cast<double>(i) / sample_rate_hz - scr_onsets[k];
      hand[i] += scr_amplitudes[k] * scr_shape(t);
      foot[i] += 0.6 * scr_amplitudes[k] * scr_shape(t - 1.0);
    }
  }
  double phase = 0.0;
  for (std::size_t i = 0; i < length; ++i) {
    const double t = static_cast<double>(i) / sample_rate_hz;
    const double drift = 0.2 * std::sin(kTwoPi * t / 1500.0);
    hand[i] += tonic + drift + 0.003 * gaussian(rng);
    foot[i] += 0.8 * tonic + drift + 0.003 * gaussian(rng);
    phase += kTwoPi * physiology(situation_at(t)).breathing_hz / sample_rate_hz;
    resp[i] = 0.5 + 0.3 * std::sin(phase) + 0.02 * gaussian(rng);
  }
  SectionAnnotation annotation;
  annotation.drive_id = drive_id;
  for (std::size_t s = 0; s < pattern.size(); ++s) {
    annotation.sections.push_back(
        {section_s * static_cast<double>(s), section_s * static_cast<double>(s + 1), pattern[s]});
  }
  return {std::move(record), std::move(annotation)};
}

std::vector<DriveInput> make_cohort(const CohortOptions& options) {
  const auto pattern = canonical_pattern();
  std::vector<DriveInput> cohort;
  for (int d = 0; d < options.drives; ++d) {
    char id[16];
    std::snprintf(id, sizeof id, "syn%02d", d + 1);
    cohort.push_back(make_drive(id, pattern, options.section_s, options.sample_rate_hz,
                                options.seed * 1000003ULL + static_cast<std::uint64_t>(d)));
  }
  return cohort;
}

std::filesystem::path write_cohort(const std::filesystem::path& dir, const CohortOptions& options) {
  std::string manifest = "# drive_id,record,annotation\n";
  for (const auto& drive : make_cohort(options)) {
    const auto& id = drive.record.drive_id;
    write_file_atomic(dir / (id + ".csv"), serialize_record(drive.record));
    write_file_atomic(dir / (id + ".ann"), serialize_annotations(drive.annotation));
    manifest += id + "," + id + ".csv," + id + ".ann\n";
  }
  write_file_atomic(dir / "manifest.csv", manifest);
  return dir / "manifest.csv";
}

}  // namespace stress::synthetic
