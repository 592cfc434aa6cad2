#include "stress/forest.hpp"

#include "stress/error.hpp"
#include "stress/util.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace stress {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

double split_point(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

ClassCounts count_rows(const TrainingData& data, std::span<const std::size_t> rows) {
  ClassCounts c{};
  for (const auto r : rows) ++c[static_cast<std::size_t>(data.y[r])];
  return c;
}

bool is_pure(const ClassCounts& c) {
  return std::count_if(c.begin(), c.end(), [](std::size_t v) { return v > 0; }) <= 1;
}

void grow_node(const TrainingData& data, std::vector<std::size_t>& rows, int depth, const ForestConfig& config,
               int features_per_split, Rng& rng, Tree& tree) {
  const int index = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  tree.nodes[index].counts = count_rows(data, rows);
  const auto counts = tree.nodes[index].counts;

  if (depth >= config.max_depth || is_pure(counts) ||
      rows.size() < static_cast<std::size_t>(config.min_samples_split)) {
    return;
  }

  // Partial Fisher-Yates draw of distinct features.
  std::vector<std::size_t> pool(data.n_features);
  std::iota(pool.begin(), pool.end(), 0);
  const auto k = static_cast<std::size_t>(features_per_split);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());

  const auto split = best_split(data, rows, pool);
  if (!split) return;

  std::vector<std::size_t> left;
  std::vector<std::size_t> right;
  for (const auto r : rows) (data.at(r, split->feature) <= split->threshold ? left : right).push_back(r);
  rows.clear();
  rows.shrink_to_fit();

  tree.nodes[index].feature = static_cast<int>(split->feature);
  tree.nodes[index].threshold = split->threshold;
  tree.nodes[index].left = static_cast<int>(tree.nodes.size());
  grow_node(data, left, depth + 1, config, features_per_split, rng, tree);
  tree.nodes[index].right = static_cast<int>(tree.nodes.size());
  grow_node(data, right, depth + 1, config, features_per_split, rng, tree);
}

bool id_less(const std::string& a, const std::string& b) {
  const auto ha = a.rfind('#');
  const auto hb = b.rfind('#');
  if (ha != std::string::npos && hb != std::string::npos) {
    const auto da = std::string_view(a).substr(0, ha);
    const auto db = std::string_view(b).substr(0, hb);
    if (da != db) return drive_id_less(da, db);
    return drive_id_less(std::string_view(a).substr(ha + 1), std::string_view(b).substr(hb + 1));
  }
  return drive_id_less(a, b);
}

}  // namespace

double gini(std::span<const std::size_t> class_counts) {
  std::size_t total = 0;
  for (auto c : class_counts) total += c;
  if (total == 0) throw Error(ErrorCode::EmptyNode, "gini of an empty node");
  // Integer numerator and denominator, one rounding: exact while total^2 < 2^53.
  std::uint64_t squares = 0;
  for (auto c : class_counts) squares += static_cast<std::uint64_t>(c) * c;
  const auto t2 = static_cast<std::uint64_t>(total) * total;
  return static_cast<double>(t2 - squares) / static_cast<double>(t2);
}

Rng::Rng(std::uint64_t seed) : Rng(seed, 0) {}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed ^ (0xD1B54A32D192ED03ULL * (stream + 1));
  for (auto& word : s_) word = splitmix64(state);
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  while (true) {
    const std::uint64_t r = next();
    if (r >= threshold) return r % bound;
  }
}

void TrainingData::add(std::span<const double> values, BinaryLabel label, std::string id) {
  if (n_features == 0 && y.empty()) n_features = values.size();
  if (values.size() != n_features) {
    throw Error(ErrorCode::ArityMismatch, "sample has " + std::to_string(values.size()) + " features, expected " +
                                              std::to_string(n_features));
  }
  x.insert(x.end(), values.begin(), values.end());
  y.push_back(label);
  ids.push_back(std::move(id));
}

TrainingData to_training_data(std::span<const ExpandedSample> samples) {
  TrainingData data;
  data.n_features = kExpandedFeatureCount;
  for (const auto& s : samples) data.add(s.values, s.label, s.drive_id + "#" + std::to_string(s.section_index));
  return data;
}

std::optional<Split> best_split(const TrainingData& data, std::span<const std::size_t> rows,
                                std::span<const std::size_t> candidate_features) {
  if (rows.size() < 2) return std::nullopt;
  const ClassCounts parent = count_rows(data, rows);
  const double parent_gini = gini(parent);
  const double n = static_cast<double>(rows.size());

  std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
  std::sort(features.begin(), features.end());
  features.erase(std::unique(features.begin(), features.end()), features.end());

  // Candidates are ranked by the exact rational (sum_l^2/n_l + sum_r^2/n_r), which
  // orders splits like the impurity decrease but keeps true ties tied.
  using Wide = unsigned __int128;
  Wide best_num = 0;
  Wide best_den = 1;
  std::optional<Split> best;
  std::vector<std::pair<double, std::size_t>> column(rows.size());
  for (const auto f : features) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      column[i] = {data.at(rows[i], f), static_cast<std::size_t>(data.y[rows[i]])};
    }
    std::sort(column.begin(), column.end());
    ClassCounts left{};
    for (std::size_t i = 0; i + 1 < column.size(); ++i) {
      ++left[column[i].second];
      if (column[i].first == column[i + 1].first) continue;
      ClassCounts right{};
      for (std::size_t k = 0; k < kClassCount; ++k) right[k] = parent[k] - left[k];
      const double nl = static_cast<double>(i + 1);
      const double nr = n - nl;
      const double decrease = parent_gini - (nl / n) * gini(left) - (nr / n) * gini(right);
      if (decrease <= kMinImpurityDecrease) continue;
      const Wide cl = i + 1;
      const Wide cr = rows.size() - (i + 1);
      const Wide sq_l = Wide(left[0]) * left[0] + Wide(left[1]) * left[1];
      const Wide sq_r = Wide(right[0]) * right[0] + Wide(right[1]) * right[1];
      const Wide num = sq_l * cr + sq_r * cl;
      const Wide den = cl * cr;
      if (!best || num * best_den > best_num * den) {
        best = Split{f, split_point(column[i].first, column[i + 1].first), decrease};
        best_num = num;
        best_den = den;
      }
    }
  }
  return best;
}

BinaryLabel TreeNode::majority() const {
  // Ties go to the first class.
  return counts[1] > counts[0] ? BinaryLabel::HighStress : BinaryLabel::LowStress;
}

const TreeNode& Tree::leaf_for(std::span<const double> sample) const {
  const TreeNode* node = &nodes.front();
  while (!node->is_leaf()) {
    node = &nodes[static_cast<std::size_t>(sample[static_cast<std::size_t>(node->feature)] <= node->threshold
                                               ? node->left
                                               : node->right)];
  }
  return *node;
}

int Tree::depth() const {
  if (nodes.empty()) return 0;
  std::function<int(int)> walk = [&](int i) -> int {
    const auto& node = nodes[static_cast<std::size_t>(i)];
    return node.is_leaf() ? 0 : 1 + std::max(walk(node.left), walk(node.right));
  };
  return walk(0);
}

int ForestConfig::resolved_features_per_split(std::size_t n_features) const {
  const int k = features_per_split > 0
                    ? features_per_split
                    : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_features)) - 1e-12));
  return std::clamp(k, 1, static_cast<int>(n_features));
}

Tree grow_tree(const TrainingData& data, std::span<const std::size_t> rows, const ForestConfig& config, Rng& rng) {
  if (rows.empty()) throw Error(ErrorCode::EmptyNode, "cannot grow a tree from zero samples");
  Tree tree;
  std::vector<std::size_t> working(rows.begin(), rows.end());
  grow_node(data, working, 0, config, config.resolved_features_per_split(data.n_features), rng, tree);
  return tree;
}

ForestModel fit_forest(const TrainingData& data, const ForestConfig& config, std::vector<std::string> feature_names,
                       unsigned jobs) {
  if (config.n_trees < 1 || config.max_depth < 1 || config.min_samples_split < 2 || config.features_per_split < 0 ||
      (config.features_per_split > 0 && static_cast<std::size_t>(config.features_per_split) > data.n_features)) {
    throw Error(ErrorCode::Usage, "invalid forest configuration");
  }
  const auto counts = count_rows(data, [&] {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    return all;
  }());
  if (data.size() < 2 || is_pure(counts)) {
    throw Error(ErrorCode::SingleClassTrainingSet,
                "training set has " + std::to_string(counts[0]) + " low and " + std::to_string(counts[1]) + " high samples");
  }
  if (feature_names.empty()) {
    for (std::size_t f = 0; f < data.n_features; ++f) feature_names.push_back("f" + std::to_string(f));
  }
  if (feature_names.size() != data.n_features) throw Error(ErrorCode::ArityMismatch, "feature name count mismatch");

  std::vector<std::size_t> by_id(data.size());
  std::iota(by_id.begin(), by_id.end(), 0);
  std::stable_sort(by_id.begin(), by_id.end(),
                   [&](std::size_t a, std::size_t b) { return id_less(data.ids[a], data.ids[b]); });

  ForestModel model;
  model.config = config;
  model.config.features_per_split = config.resolved_features_per_split(data.n_features);
  model.feature_names = std::move(feature_names);
  model.trees.resize(static_cast<std::size_t>(config.n_trees));
  parallel_for(model.trees.size(), jobs, [&](std::size_t t) {
    Rng rng(config.rng_seed, t);
    std::vector<std::size_t> sample(data.size());
    for (auto& s : sample) s = by_id[static_cast<std::size_t>(rng.below(by_id.size()))];
    model.trees[t] = grow_tree(data, sample, model.config, rng);
  });
  return model;
}

ForestModel fit_forest(std::span<const ExpandedSample> train, const ForestConfig& config, unsigned jobs) {
  return fit_forest(to_training_data(train), config, expanded_feature_names(), jobs);
}

Prediction predict(const ForestModel& model, std::span<const double> sample) {
  if (sample.size() != model.feature_names.size()) {
    throw Error(ErrorCode::ArityMismatch, "sample has " + std::to_string(sample.size()) + " features, model expects " +
                                              std::to_string(model.feature_names.size()));
  }
  std::array<std::size_t, kClassCount> votes{};
  for (const auto& tree : model.trees) ++votes[static_cast<std::size_t>(tree.leaf_for(sample).majority())];
  const auto winner = votes[1] > votes[0] ? BinaryLabel::HighStress : BinaryLabel::LowStress;
  return {winner, static_cast<double>(votes[static_cast<std::size_t>(winner)]) /
                      static_cast<double>(model.trees.size())};
}

// ---------------------------------------------------------------- serialization

namespace {

constexpr std::string_view kMagic = "stress-forest v1";

void write_node(const Tree& tree, int index, std::string& out) {
  const auto& node = tree.nodes[static_cast<std::size_t>(index)];
  if (node.is_leaf()) {
    out += "L " + std::to_string(node.counts[0]) + " " + std::to_string(node.counts[1]) + "\n";
    return;
  }
  out += "N " + std::to_string(node.feature) + " " + format_double(node.threshold) + " " +
         std::to_string(node.counts[0]) + " " + std::to_string(node.counts[1]) + "\n";
  write_node(tree, node.left, out);
  write_node(tree, node.right, out);
}

class LineReader {
public:
  explicit LineReader(std::string_view text) : lines_(split(text, '\n')) {}

  std::vector<std::string_view> tokens() {
    if (pos_ >= lines_.size()) throw Error(ErrorCode::BadFormat, "model file truncated");
    std::vector<std::string_view> out;
    for (auto t : split(trim(lines_[pos_++]), ' ')) {
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

  std::string_view line() {
    if (pos_ >= lines_.size()) throw Error(ErrorCode::BadFormat, "model file truncated");
    return trim(lines_[pos_++]);
  }

  std::size_t line_number() const { return pos_; }

private:
  std::vector<std::string_view> lines_;
  std::size_t pos_ = 0;
};

long long to_integer(std::string_view text, std::size_t line) {
  double v = 0.0;
  if (!parse_double(text, v) || v != std::floor(v)) {
    throw Error(ErrorCode::BadFormat, "model line " + std::to_string(line) + ": expected integer");
  }
  return static_cast<long long>(v);
}

long long keyed(LineReader& in, std::string_view key) {
  const auto t = in.tokens();
  if (t.size() != 2 || t[0] != key) {
    throw Error(ErrorCode::BadFormat, "model line " + std::to_string(in.line_number()) + ": expected '" +
                                          std::string(key) + "'");
  }
  return to_integer(t[1], in.line_number());
}

int read_node(LineReader& in, Tree& tree, std::size_t n_features) {
  const auto t = in.tokens();
  const int index = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  const auto line = in.line_number();
  if (t.size() == 3 && t[0] == "L") {
    tree.nodes[index].counts = {static_cast<std::size_t>(to_integer(t[1], line)),
                                static_cast<std::size_t>(to_integer(t[2], line))};
    return index;
  }
  if (t.size() != 5 || t[0] != "N") throw Error(ErrorCode::BadFormat, "model line " + std::to_string(line) + ": bad node");
  TreeNode node;
  node.feature = static_cast<int>(to_integer(t[1], line));
  if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= n_features ||
      !parse_double(t[2], node.threshold)) {
    throw Error(ErrorCode::BadFormat, "model line " + std::to_string(line) + ": bad split");
  }
  node.counts = {static_cast<std::size_t>(to_integer(t[3], line)), static_cast<std::size_t>(to_integer(t[4], line))};
  tree.nodes[index] = node;
  const int left = read_node(in, tree, n_features);
  const int right = read_node(in, tree, n_features);
  tree.nodes[index].left = left;
  tree.nodes[index].right = right;
  return index;
}

}  // namespace

std::string serialize_model(const ForestModel& model) {
  std::string out(kMagic);
  out += "\n";
  out += "n_trees " + std::to_string(model.config.n_trees) + "\n";
  out += "max_depth " + std::to_string(model.config.max_depth) + "\n";
  out += "min_samples_split " + std::to_string(model.config.min_samples_split) + "\n";
  out += "features_per_split " + std::to_string(model.config.features_per_split) + "\n";
  out += "rng_seed " + std::to_string(model.config.rng_seed) + "\n";
  out += "classes " + std::string(to_string(model.class_order[0])) + " " + std::string(to_string(model.class_order[1])) + "\n";
  out += "features " + std::to_string(model.feature_names.size()) + "\n";
  for (const auto& name : model.feature_names) out += name + "\n";
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    out += "tree " + std::to_string(t) + "\n";
    write_node(model.trees[t], 0, out);
  }
  out += "end\n";
  return out;
}

ForestModel deserialize_model(std::string_view text) {
  LineReader in(text);
  if (in.line() != kMagic) throw Error(ErrorCode::BadFormat, "not a stress-forest v1 model");
  ForestModel model;
  model.config.n_trees = static_cast<int>(keyed(in, "n_trees"));
  model.config.max_depth = static_cast<int>(keyed(in, "max_depth"));
  model.config.min_samples_split = static_cast<int>(keyed(in, "min_samples_split"));
  model.config.features_per_split = static_cast<int>(keyed(in, "features_per_split"));
  {
    const auto t = in.tokens();
    std::uint64_t seed = 0;
    std::istringstream ss(t.size() == 2 && t[0] == "rng_seed" ? std::string(t[1]) : std::string());
    if (!(ss >> seed)) throw Error(ErrorCode::BadFormat, "model: expected 'rng_seed'");
    model.config.rng_seed = seed;
  }
  const auto classes = in.tokens();
  if (classes.size() != 3 || classes[0] != "classes") throw Error(ErrorCode::BadFormat, "model: expected 'classes'");
  model.class_order = {parse_binary_label(classes[1]), parse_binary_label(classes[2])};
  if (model.class_order != kClassOrder) throw Error(ErrorCode::BadFormat, "model: unsupported class order");
  const auto n_features = static_cast<std::size_t>(keyed(in, "features"));
  for (std::size_t f = 0; f < n_features; ++f) model.feature_names.emplace_back(in.line());
  for (int t = 0; t < model.config.n_trees; ++t) {
    if (keyed(in, "tree") != t) throw Error(ErrorCode::BadFormat, "model: trees out of order");
    Tree tree;
    read_node(in, tree, n_features);
    model.trees.push_back(std::move(tree));
  }
  if (in.line() != "end") throw Error(ErrorCode::BadFormat, "model: missing 'end'");
  return model;
}

}  // namespace stress
