#include "stress/eval.hpp"

#include "stress/error.hpp"
#include "stress/util.hpp"
#include "stress/version.hpp"

#include "json.hpp"

#include <algorithm>
#include <set>

namespace stress {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

double accuracy_on(const ForestModel& model, std::span<const ExpandedSample> samples) {
  std::size_t hits = 0;
  for (const auto& s : samples) hits += predict(model, s.values).label == s.label ? 1 : 0;
  return ratio(hits, samples.size());
}

nlohmann::ordered_json class_json(const ClassMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
}

std::string label_key(std::size_t k) { return std::string(to_string(kClassOrder[k])); }

}  // namespace

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (const auto& row : counts) {
    for (auto c : row) t += c;
  }
  return t;
}

Metrics metrics_from_confusion(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix has no entries");
  Metrics m;
  std::size_t trace = 0;
  for (std::size_t k = 0; k < kClassCount; ++k) {
    std::size_t predicted = 0;
    std::size_t actual = 0;
    for (std::size_t j = 0; j < kClassCount; ++j) {
      predicted += cm.counts[j][k];
      actual += cm.counts[k][j];
    }
    const std::size_t tp = cm.counts[k][k];
    trace += tp;
    auto& c = m.per_class[k];
    c.precision = ratio(tp, predicted);
    c.recall = ratio(tp, actual);
    c.f1 = harmonic(c.precision, c.recall);
    c.support = actual;
  }
  m.accuracy = ratio(trace, total);
  for (const auto& c : m.per_class) {
    const double w = ratio(c.support, total);
    m.weighted.precision += w * c.precision;
    m.weighted.recall += w * c.recall;
    m.weighted.f1 += w * c.f1;
  }
  m.weighted.support = total;
  return m;
}

std::vector<FoldMetrics> run_loso(std::span<const LosoFold> folds, int n, const ForestConfig& config, unsigned jobs,
                                  const ModelSink& on_model) {
  if (folds.size() < 2) throw Error(ErrorCode::SingleDrive, "leave-one-out needs at least two folds");
  std::vector<FoldMetrics> out;
  out.reserve(folds.size());
  for (const auto& fold : folds) {
    ForestModel model;
    try {
      model = fit_forest(fold.train, config, jobs);
    } catch (const Error& e) {
      throw Error(e.code(), "fold '" + fold.test_drive_id + "' (n=" + std::to_string(n) + "): " + e.what());
    }
    if (on_model) on_model(n, fold.test_drive_id, model);

    FoldMetrics fm;
    fm.test_drive_id = fold.test_drive_id;
    fm.n = n;
    fm.train_size = fold.train.size();
    fm.train_accuracy = accuracy_on(model, fold.train);
    for (const auto& s : fold.test) fm.confusion.add(s.label, predict(model, s.values).label);
    if (fm.confusion.total() > 0) {
      fm.test = metrics_from_confusion(fm.confusion);
      fm.test_accuracy = fm.test.accuracy;
    }
    out.push_back(std::move(fm));
  }
  return out;
}

NSummary summarize(int n, std::span<const FoldMetrics> folds) {
  NSummary s;
  s.n = n;
  std::array<std::size_t, kClassCount> class_folds{};
  for (const auto& f : folds) {
    if (f.n != n) continue;
    ++s.folds;
    s.train_accuracy += f.train_accuracy;
    s.test_accuracy += f.test_accuracy;
    s.weighted.precision += f.test.weighted.precision;
    s.weighted.recall += f.test.weighted.recall;
    s.weighted.f1 += f.test.weighted.f1;
    s.weighted.support += f.test.weighted.support;
    for (std::size_t k = 0; k < kClassCount; ++k) {
      const auto& c = f.test.per_class[k];
      s.per_class[k].support += c.support;
      if (c.support == 0) continue;
      ++class_folds[k];
      s.per_class[k].precision += c.precision;
      s.per_class[k].recall += c.recall;
      s.per_class[k].f1 += c.f1;
    }
  }
  if (s.folds == 0) return s;
  const double nf = static_cast<double>(s.folds);
  s.train_accuracy /= nf;
  s.test_accuracy /= nf;
  s.weighted.precision /= nf;
  s.weighted.recall /= nf;
  s.weighted.f1 /= nf;
  for (std::size_t k = 0; k < kClassCount; ++k) {
    if (class_folds[k] == 0) continue;
    const double c = static_cast<double>(class_folds[k]);
    s.per_class[k].precision /= c;
    s.per_class[k].recall /= c;
    s.per_class[k].f1 /= c;
  }
  return s;
}

std::string EvalConfig::canonical() const {
  std::string out;
  out += "forest.n_trees=" + std::to_string(forest.n_trees) + "\n";
  out += "forest.max_depth=" + std::to_string(forest.max_depth) + "\n";
  out += "forest.min_samples_split=" + std::to_string(forest.min_samples_split) + "\n";
  out += "forest.features_per_split=" + std::to_string(forest.features_per_split) + "\n";
  out += "seed=" + std::to_string(forest.rng_seed) + "\n";
  out += "expand.weights=" + std::string(to_string(expand.weights)) + "\n";
  out += "window.hop_s=" + format_double(expand.hop_s) + "\n";
  out += "n_values=";
  for (std::size_t i = 0; i < n_values.size(); ++i) out += (i ? "," : "") + std::to_string(n_values[i]);
  out += "\n";
  return out;
}

EvalReport sweep_n(const DriveFeatures& drive_data, const EvalConfig& config, const ModelSink& on_model) {
  if (config.n_values.empty()) throw Error(ErrorCode::Usage, "no n values to evaluate");
  std::vector<int> ns = config.n_values;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  if (ns.front() < 1) throw Error(ErrorCode::Usage, "n must be at least 1");

  EvalReport report;
  report.seed = config.forest.rng_seed;
  report.artifact_version = std::string(kVersion);
  report.config_digest = sha256_hex(config.canonical());
  for (const auto& [id, windows] : drive_data) report.drives.push_back(id);
  std::sort(report.drives.begin(), report.drives.end(), [](const auto& a, const auto& b) { return drive_id_less(a, b); });
  {
    std::string canonical;
    for (const auto& id : report.drives) canonical += serialize_feature_table(drive_data.at(id));
    report.dataset_digest = sha256_hex(canonical);
  }

  // Fail on the largest n first so the error names the limiting section.
  for (const auto& id : report.drives) expand_drive(drive_data.at(id), ns.back(), config.expand);

  for (const int n : ns) {
    std::vector<ExpandedSample> samples;
    for (const auto& id : report.drives) {
      const auto sections = expand_drive(drive_data.at(id), n, config.expand);
      const auto shifted = shift_and_filter(sections);
      samples.insert(samples.end(), shifted.begin(), shifted.end());
    }
    const auto folds = assemble_loso(samples);
    auto metrics = run_loso(folds, n, config.forest, config.jobs, on_model);
    report.folds.insert(report.folds.end(), metrics.begin(), metrics.end());
  }
  std::stable_sort(report.folds.begin(), report.folds.end(), [](const FoldMetrics& a, const FoldMetrics& b) {
    if (a.n != b.n) return a.n < b.n;
    return drive_id_less(a.test_drive_id, b.test_drive_id);
  });
  for (const int n : ns) report.summaries.push_back(summarize(n, report.folds));
  return report;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["artifact_version"] = report.artifact_version;
  j["seed"] = report.seed;
  j["config_digest"] = report.config_digest;
  j["dataset_digest"] = report.dataset_digest;
  j["class_order"] = {label_key(0), label_key(1)};
  j["drives"] = report.drives;
  auto& folds = j["folds"] = nlohmann::ordered_json::array();
  for (const auto& f : report.folds) {
    nlohmann::ordered_json fj;
    fj["n"] = f.n;
    fj["test_drive_id"] = f.test_drive_id;
    fj["train_size"] = f.train_size;
    fj["train_accuracy"] = f.train_accuracy;
    fj["test_accuracy"] = f.test_accuracy;
    fj["confusion"] = {{f.confusion.counts[0][0], f.confusion.counts[0][1]},
                       {f.confusion.counts[1][0], f.confusion.counts[1][1]}};
    fj["per_class"] = {{label_key(0), class_json(f.test.per_class[0])}, {label_key(1), class_json(f.test.per_class[1])}};
    fj["weighted"] = class_json(f.test.weighted);
    folds.push_back(std::move(fj));
  }
  auto& sums = j["averages"] = nlohmann::ordered_json::array();
  for (const auto& s : report.summaries) {
    nlohmann::ordered_json sj;
    sj["n"] = s.n;
    sj["folds"] = s.folds;
    sj["train_accuracy"] = s.train_accuracy;
    sj["test_accuracy"] = s.test_accuracy;
    sj["per_class"] = {{label_key(0), class_json(s.per_class[0])}, {label_key(1), class_json(s.per_class[1])}};
    sj["weighted"] = class_json(s.weighted);
    sums.push_back(std::move(sj));
  }
  return j.dump(2) + "\n";
}

std::string table1_csv(const EvalReport& report) {
  std::string out = "n";
  for (const auto& d : report.drives) out += "," + d;
  out += "\n";
  for (const auto& s : report.summaries) {
    out += std::to_string(s.n);
    for (const auto& d : report.drives) {
      const auto it = std::find_if(report.folds.begin(), report.folds.end(),
                                   [&](const FoldMetrics& f) { return f.n == s.n && f.test_drive_id == d; });
      out += ",";
      if (it != report.folds.end()) out += format_double(it->test.per_class[0].f1);
    }
    out += "\n";
  }
  return out;
}

std::string table2_csv(const EvalReport& report, int n) {
  const auto it = std::find_if(report.summaries.begin(), report.summaries.end(),
                               [&](const NSummary& s) { return s.n == n; });
  if (it == report.summaries.end()) throw Error(ErrorCode::Usage, "n=" + std::to_string(n) + " was not evaluated");
  std::string out = "class,precision,recall,f1,n\n";
  auto row = [&](std::string_view name, const ClassMetrics& c) {
    out += std::string(name) + "," + format_double(c.precision) + "," + format_double(c.recall) + "," +
           format_double(c.f1) + "," + std::to_string(n) + "\n";
  };
  row(to_string(BinaryLabel::LowStress), it->per_class[0]);
  row(to_string(BinaryLabel::HighStress), it->per_class[1]);
  row("weighted_average", it->weighted);
  return out;
}

std::string fig3_csv(const EvalReport& report) {
  std::string out =
      "n,test_accuracy,train_accuracy,weighted_precision,weighted_recall,weighted_f1,low_f1,high_f1\n";
  for (const auto& s : report.summaries) {
    out += std::to_string(s.n) + "," + format_double(s.test_accuracy) + "," + format_double(s.train_accuracy) + "," +
           format_double(s.weighted.precision) + "," + format_double(s.weighted.recall) + "," +
           format_double(s.weighted.f1) + "," + format_double(s.per_class[0].f1) + "," +
           format_double(s.per_class[1].f1) + "\n";
  }
  return out;
}

}  // namespace stress
