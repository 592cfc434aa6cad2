#pragma once

// Slow, direct reference computations used by the tests and `selftest`.
// None of these share code with the production kernels.

#include "stress/forest.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace stress::oracle {

/// One-sided periodogram of the mean-removed input by direct O(N^2) DFT.
std::vector<double> dft_periodogram(std::span<const double> x, double sample_rate_hz);

/// |H(f)|^2 of the bilinear-transformed Butterworth low-pass (prewarped cutoff).
double butterworth_gain_sq(double f_hz, double cutoff_hz, double sample_rate_hz, int order);

/// Least-squares amplitude of a sinusoid at f_hz (fits a*sin + b*cos + c).
double sine_amplitude(std::span<const double> x, double f_hz, double sample_rate_hz);

double gini(std::span<const std::size_t> counts);

/// Tries every feature and every midpoint; tie rule as documented on best_split.
std::optional<Split> exhaustive_split(const TrainingData& data, std::span<const std::size_t> rows,
                                      std::span<const std::size_t> features);

/// Same order as hrv_time_features; long double accumulation.
std::array<double, 15> hrv_time(std::span<const double> nn_ms);

}  // namespace stress::oracle
