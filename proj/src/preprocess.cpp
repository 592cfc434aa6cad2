#include "stress/preprocess.hpp"

#include "stress/error.hpp"
#include "stress/util.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace stress {

namespace {

constexpr double kEps = 1e-9;

void run_sections(std::vector<double>& x, const std::vector<Biquad>& sections) {
  if (x.empty()) return;
  for (const auto& s : sections) {
    // Steady state for a constant input equal to the first sample (unit DC gain per section).
    const double c = x.front();
    double z2 = (s.b2 - s.a2) * c;
    double z1 = (s.b1 - s.a1) * c + z2;
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
}

}  // namespace

FilterPass parse_filter_pass(std::string_view text) {
  text = trim(text);
  if (text == "single") return FilterPass::Single;
  if (text == "zero-phase") return FilterPass::ZeroPhase;
  throw Error(ErrorCode::Usage, "filter pass must be 'single' or 'zero-phase', got '" + std::string(text) + "'");
}

std::string_view to_string(FilterPass pass) {
  return pass == FilterPass::Single ? "single" : "zero-phase";
}

std::vector<Biquad> butterworth_sections(const FilterSpec& spec) {
  if (spec.order < 1 || !(spec.cutoff_hz > 0.0) || !(spec.sample_rate_hz > 0.0)) {
    throw Error(ErrorCode::Usage, "invalid filter spec");
  }
  const int n = spec.order;
  const double fs = spec.sample_rate_hz;
  const double warped = 2.0 * fs * std::tan(std::numbers::pi * spec.cutoff_hz / fs);
  auto to_z = [&](std::complex<double> s) { return (1.0 + s / (2.0 * fs)) / (1.0 - s / (2.0 * fs)); };

  std::vector<Biquad> sections;
  for (int k = 1; k <= n / 2; ++k) {
    const double angle = std::numbers::pi * (2.0 * k + n - 1) / (2.0 * n);
    const auto z = to_z(warped * std::polar(1.0, angle));
    Biquad q;
    q.a1 = -2.0 * z.real();
    q.a2 = std::norm(z);
    const double g = (1.0 + q.a1 + q.a2) / 4.0;
    q.b0 = g;
    q.b1 = 2.0 * g;
    q.b2 = g;
    sections.push_back(q);
  }
  if (n % 2 == 1) {
    const double z = to_z({-warped, 0.0}).real();
    Biquad q;
    q.a1 = -z;
    const double g = (1.0 - z) / 2.0;
    q.b0 = g;
    q.b1 = g;
    sections.push_back(q);
  }
  return sections;
}

FilterResult butterworth_lowpass(std::span<const double> signal, const FilterSpec& spec, FilterPass pass) {
  const auto pad = static_cast<std::size_t>(3 * (spec.order + 1));
  const auto min_len = static_cast<std::size_t>(std::max(6 * spec.order, static_cast<int>(pad)));
  if (signal.size() <= min_len) {
    throw Error(ErrorCode::TooShortForFilter, std::to_string(signal.size()) + " samples, need more than " +
                                                  std::to_string(min_len));
  }
  FilterResult result;
  if (spec.pass_through()) {
    result.signal.assign(signal.begin(), signal.end());
    result.pass_through = true;
    return result;
  }
  const auto sections = butterworth_sections(spec);

  if (pass == FilterPass::Single) {
    result.signal.assign(signal.begin(), signal.end());
    run_sections(result.signal, sections);
    return result;
  }

  // Odd extension at both ends, forward pass, backward pass, trim.
  const std::size_t n = signal.size();
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * signal[0] - signal[i]);
  ext.insert(ext.end(), signal.begin(), signal.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * signal[n - 1] - signal[n - 1 - i]);

  run_sections(ext, sections);
  std::reverse(ext.begin(), ext.end());
  run_sections(ext, sections);
  std::reverse(ext.begin(), ext.end());

  result.signal.assign(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                       ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
  return result;
}

std::vector<double> min_max_normalize(std::span<const double> signal) {
  if (signal.size() < 2) throw Error(ErrorCode::ConstantSignal, "fewer than two samples");
  const auto [lo_it, hi_it] = std::minmax_element(signal.begin(), signal.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) throw Error(ErrorCode::ConstantSignal, "max equals min (" + format_double(lo) + ")");
  const double range = hi - lo;
  std::vector<double> out(signal.size());
  std::transform(signal.begin(), signal.end(), out.begin(), [&](double v) { return (v - lo) / range; });
  return out;
}

double PreprocessConfig::cutoff_for(ChannelKind kind) const {
  switch (kind) {
    case ChannelKind::Ecg: return cutoff_ecg_hz;
    case ChannelKind::Respiration: return cutoff_resp_hz;
    case ChannelKind::HandGsr:
    case ChannelKind::FootGsr: return cutoff_gsr_hz;
  }
  return cutoff_gsr_hz;
}

PreprocessedRecord preprocess_record(const SignalRecord& record, const PreprocessConfig& config) {
  PreprocessedRecord out;
  out.record.drive_id = record.drive_id;
  out.record.sample_rate_hz = record.sample_rate_hz;
  for (auto kind : kAllChannels) {
    const auto context = record.drive_id + "/" + std::string(column_name(kind)) + ": ";
    try {
      const auto normalized = min_max_normalize(record.channel(kind));
      const FilterSpec spec{config.filter_order, config.cutoff_for(kind), record.sample_rate_hz};
      auto filtered = butterworth_lowpass(normalized, spec, config.filter_pass);
      if (filtered.pass_through) out.pass_through.push_back(kind);
      out.record.channels[kind] = std::move(filtered.signal);
    } catch (const Error& e) {
      throw Error(e.code(), context + e.what());
    }
  }
  return out;
}

int window_count(double section_length_s, double window_length_s, double hop_s) {
  if (section_length_s + kEps < window_length_s) return 0;
  return static_cast<int>(std::floor((section_length_s - window_length_s) / hop_s + kEps)) + 1;
}

std::vector<Window> slice_windows(const SignalRecord& record, const SectionAnnotation& annotation,
                                  double window_length_s, double hop_s) {
  const double rate = record.sample_rate_hz;
  const auto count = static_cast<std::size_t>(std::floor(window_length_s * rate + kEps));
  const std::size_t total = record.length();
  std::vector<Window> windows;
  for (std::size_t si = 0; si < annotation.sections.size(); ++si) {
    const auto& section = annotation.sections[si];
    const int per_section = window_count(section.length_s(), window_length_s, hop_s);
    for (int k = 0; k < per_section; ++k) {
      const double start = section.start_s + k * hop_s;
      const auto first = static_cast<std::size_t>(std::ceil(start * rate - kEps));
      if (first + count > total) break;
      Window w;
      w.drive_id = record.drive_id;
      w.section_index = static_cast<int>(si);
      w.situation = section.situation;
      w.start_s = start;
      w.end_s = start + window_length_s;
      w.sample_rate_hz = rate;
      for (const auto& [kind, data] : record.channels) {
        w.samples[kind].assign(data.begin() + static_cast<std::ptrdiff_t>(first),
                               data.begin() + static_cast<std::ptrdiff_t>(first + count));
      }
      windows.push_back(std::move(w));
    }
  }
  return windows;
}

}  // namespace stress
