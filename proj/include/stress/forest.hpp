#pragma once

#include "stress/dataset.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stress {

using ClassCounts = std::array<std::size_t, kClassCount>;

/// Splits must lower weighted Gini impurity by more than this to be taken.
inline constexpr double kMinImpurityDecrease = 1e-12;

/// 1 - sum p_k^2. Throws EmptyNode on an all-zero count vector.
double gini(std::span<const std::size_t> class_counts);

/// xoshiro256** seeded through splitmix64; identical streams on every platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed);
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next();
  /// Uniform in [0, bound), rejection sampled. bound > 0.
  std::uint64_t below(std::uint64_t bound);

private:
  std::array<std::uint64_t, 4> s_{};
};

/// Row-major training matrix with labels and stable sample ids.
struct TrainingData {
  std::size_t n_features = 0;
  std::vector<double> x;
  std::vector<BinaryLabel> y;
  std::vector<std::string> ids;

  std::size_t size() const { return y.size(); }
  double at(std::size_t row, std::size_t feature) const { return x[row * n_features + feature]; }
  std::span<const double> row(std::size_t r) const { return {x.data() + r * n_features, n_features}; }
  void add(std::span<const double> values, BinaryLabel label, std::string id);
};

/// Id is "<drive_id>#<section_index>".
TrainingData to_training_data(std::span<const ExpandedSample> samples);

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;  // left branch takes value <= threshold
  double impurity_decrease = 0.0;
};

/// Best midpoint split over the candidates. `rows` may repeat (bootstrap
/// multiplicity). Ties go to the lower feature index, then the lower threshold.
std::optional<Split> best_split(const TrainingData& data, std::span<const std::size_t> rows,
                                std::span<const std::size_t> candidate_features);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  ClassCounts counts{};

  bool is_leaf() const { return feature < 0; }
  BinaryLabel majority() const;
};

struct Tree {
  std::vector<TreeNode> nodes;  // root first, preorder

  const TreeNode& leaf_for(std::span<const double> sample) const;
  int depth() const;  // edges on the longest root-leaf path
};

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 30;
  int min_samples_split = 2;
  int features_per_split = 0;  // 0: ceil(sqrt(feature count))
  std::uint64_t rng_seed = 0;

  int resolved_features_per_split(std::size_t n_features) const;
};

Tree grow_tree(const TrainingData& data, std::span<const std::size_t> rows, const ForestConfig& config, Rng& rng);

struct ForestModel {
  std::vector<Tree> trees;
  ForestConfig config;
  std::vector<std::string> feature_names;
  std::array<BinaryLabel, kClassCount> class_order = kClassOrder;
};

/// Trees train on bootstraps drawn over samples sorted by id, each from its own
/// (seed, tree index) stream; `jobs` only affects speed.
ForestModel fit_forest(const TrainingData& data, const ForestConfig& config,
                       std::vector<std::string> feature_names = {}, unsigned jobs = 1);
ForestModel fit_forest(std::span<const ExpandedSample> train, const ForestConfig& config, unsigned jobs = 1);

struct Prediction {
  BinaryLabel label = BinaryLabel::LowStress;
  double vote_fraction = 0.0;
};

Prediction predict(const ForestModel& model, std::span<const double> sample);

std::string serialize_model(const ForestModel& model);
ForestModel deserialize_model(std::string_view text);

}  // namespace stress
