#pragma once

#include "stress/dataset.hpp"
#include "stress/forest.hpp"

#include <array>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace stress {

/// counts[actual][predicted], class order LowStress, HighStress.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kClassCount>, kClassCount> counts{};

  void add(BinaryLabel actual, BinaryLabel predicted) {
    ++counts[static_cast<std::size_t>(actual)][static_cast<std::size_t>(predicted)];
  }
  std::size_t total() const;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct Metrics {
  std::array<ClassMetrics, kClassCount> per_class{};
  ClassMetrics weighted{};  // support-weighted over classes with support > 0
  double accuracy = 0.0;
};

/// Zero denominators yield 0. Throws EmptyMatrix when the matrix is all zeros.
Metrics metrics_from_confusion(const ConfusionMatrix& cm);

struct FoldMetrics {
  std::string test_drive_id;
  int n = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::size_t train_size = 0;
  ConfusionMatrix confusion;
  Metrics test;
};

using ModelSink = std::function<void(int n, const std::string& test_drive_id, const ForestModel& model)>;

/// Fits one forest per fold (same base seed for every fold) and scores it.
std::vector<FoldMetrics> run_loso(std::span<const LosoFold> folds, int n, const ForestConfig& config,
                                  unsigned jobs = 1, const ModelSink& on_model = {});

/// Unweighted means over folds; a class's metrics are averaged only over folds
/// where that class has test support.
struct NSummary {
  int n = 0;
  std::size_t folds = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::array<ClassMetrics, kClassCount> per_class{};
  ClassMetrics weighted{};
};

NSummary summarize(int n, std::span<const FoldMetrics> folds);

struct EvalConfig {
  ForestConfig forest;
  ExpandConfig expand;
  std::vector<int> n_values = {2, 3, 4, 5};
  unsigned jobs = 1;

  /// Stable text form hashed into the report metadata.
  std::string canonical() const;
};

struct EvalReport {
  std::vector<std::string> drives;  // drive_id_less order
  std::vector<FoldMetrics> folds;   // sorted by (n, drive)
  std::vector<NSummary> summaries;  // one per n, ascending
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string dataset_digest;
  std::string artifact_version;
};

/// Per-drive window features keyed by drive id.
using DriveFeatures = std::map<std::string, std::vector<FeatureVector>>;

/// Expansion + label shift + LOSO for every n. Throws TooFewWindows naming
/// (drive, section) when a section has fewer than max(n) windows.
EvalReport sweep_n(const DriveFeatures& drive_data, const EvalConfig& config, const ModelSink& on_model = {});

std::string report_json(const EvalReport& report);
/// Rows n, columns drives: low-stress F1.
std::string table1_csv(const EvalReport& report);
/// Averaged per-class and weighted precision/recall/F1 for one n.
std::string table2_csv(const EvalReport& report, int n);
/// n vs averaged metrics.
std::string fig3_csv(const EvalReport& report);

}  // namespace stress
