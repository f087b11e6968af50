#include "pmsys/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "pmsys/error.hpp"
#include "pmsys/random.hpp"

namespace pmsys::model {
namespace {

constexpr const char* kFormatName = "pmsys-forest";
constexpr int kFormatVersion = 1;

bool is_unit_interval_feature(const std::string& name) {
  static const std::set<std::string> names = {"anger",        "disgust",           "fear",
                                              "joy",          "sadness",           "openness",
                                              "conscientiousness", "extraversion", "agreeableness",
                                              "neuroticism"};
  return names.count(name) != 0;
}

struct Split {
  int feature = -1;
  double threshold = 0;
  double score = -1;  // sum over children of sum(count^2)/size; larger is purer
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& x, const std::vector<int>& y, std::size_t n_labels,
              std::size_t m, std::size_t min_leaf, Rng& rng)
      : x_(x), y_(y), n_labels_(n_labels), m_(m), min_leaf_(min_leaf), rng_(rng) {}

  std::vector<TreeNode> build(std::vector<std::uint32_t> samples) {
    nodes_.clear();
    grow(std::move(samples));
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<std::uint32_t> samples) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    std::vector<std::size_t> counts(n_labels_, 0);
    for (auto s : samples) ++counts[static_cast<std::size_t>(y_[s])];
    const auto majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    const bool pure = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) <= 1;
    if (pure || samples.size() < 2 * min_leaf_) {
      nodes_[static_cast<std::size_t>(id)].label = majority;
      return id;
    }

    const auto split = find_split(samples);
    if (split.feature < 0) {
      nodes_[static_cast<std::size_t>(id)].label = majority;
      return id;
    }

    std::vector<std::uint32_t> left, right;
    for (auto s : samples) {
      (x_[s][static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();
    const int l = grow(std::move(left));
    const int r = grow(std::move(right));
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    node.label = majority;
    return id;
  }

  Split find_split(const std::vector<std::uint32_t>& samples) {
    const auto n_features = x_.front().size();
    std::vector<std::size_t> features(n_features);
    std::iota(features.begin(), features.end(), 0);
    shuffle(features, rng_);

    Split best;
    for (std::size_t k = 0; k < n_features; ++k) {
      if (k >= m_ && best.feature >= 0) break;
      evaluate_feature(samples, features[k], best);
    }
    return best;
  }

  void evaluate_feature(const std::vector<std::uint32_t>& samples, std::size_t feature, Split& best) {
    std::vector<std::pair<double, std::uint32_t>> column;
    column.reserve(samples.size());
    for (auto s : samples) column.emplace_back(x_[s][feature], s);
    std::sort(column.begin(), column.end());

    const auto n = column.size();
    std::vector<std::size_t> right(n_labels_, 0), left(n_labels_, 0);
    for (const auto& [_, s] : column) ++right[static_cast<std::size_t>(y_[s])];
    double left_sq = 0;
    double right_sq = 0;
    for (auto c : right) right_sq += static_cast<double>(c) * static_cast<double>(c);

    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto label = static_cast<std::size_t>(y_[column[i].second]);
      const auto cl = static_cast<double>(left[label]);
      const auto cr = static_cast<double>(right[label]);
      left_sq += 2 * cl + 1;   // (c+1)^2 - c^2
      right_sq += -2 * cr + 1;  // (c-1)^2 - c^2
      ++left[label];
      --right[label];

      const auto n_left = i + 1;
      const auto n_right = n - n_left;
      if (column[i].first == column[i + 1].first) continue;
      if (n_left < min_leaf_ || n_right < min_leaf_) continue;
      const double score = left_sq / static_cast<double>(n_left) + right_sq / static_cast<double>(n_right);
      if (score > best.score) {
        best.score = score;
        best.feature = static_cast<int>(feature);
        // Threshold sits on an observed value so that any strictly increasing
        // transform of a feature yields the same partitions.
        best.threshold = column[i].first;
      }
    }
  }

  const std::vector<std::vector<double>>& x_;
  const std::vector<int>& y_;
  std::size_t n_labels_;
  std::size_t m_;
  std::size_t min_leaf_;
  Rng& rng_;
  std::vector<TreeNode> nodes_;
};

std::vector<std::string> collect_labels(const FeatureTable& table) {
  std::set<std::string> labels;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (!table.rows[i].label) throw ValidationError("training row " + std::to_string(i) + " has no label");
    labels.insert(*table.rows[i].label);
  }
  return {labels.begin(), labels.end()};
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::size_t argmax_first(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

FeatureSchema FeatureSchema::defaults() {
  return {{"anger", "disgust", "joy", "sadness", "conscientiousness", "agreeableness", "neuroticism", "age"}};
}

std::optional<std::size_t> FeatureSchema::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

void validate_row(const FeatureSchema& schema, const FeatureRow& row) {
  if (row.values.size() != schema.names.size()) {
    throw ValidationError("row has " + std::to_string(row.values.size()) + " values, schema has " +
                          std::to_string(schema.names.size()));
  }
  for (std::size_t i = 0; i < row.values.size(); ++i) {
    const auto& name = schema.names[i];
    const double v = row.values[i];
    if (!std::isfinite(v)) throw ValidationError("feature '" + name + "' is not finite");
    if (is_unit_interval_feature(name) && (v < 0 || v > 1)) {
      throw ValidationError("feature '" + name + "' must lie in [0,1]");
    }
    if (name == "age" && !(v > 0)) throw ValidationError("age must be positive");
  }
  if (row.label && row.label->empty()) throw ValidationError("empty label");
}

int Tree::predict(std::span<const double> values) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& node = nodes[i];
    i = static_cast<std::size_t>(values[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                                  : node.right);
  }
  return nodes[i].label;
}

Forest::Forest(FeatureSchema schema, std::vector<std::string> labels, ForestParams params, std::size_t training_rows,
               std::vector<Tree> trees)
    : schema_(std::move(schema)),
      labels_(std::move(labels)),
      params_(params),
      training_rows_(training_rows),
      trees_(std::move(trees)) {
  if (trees_.empty()) throw ValidationError("forest has no trees");
  if (!std::is_sorted(labels_.begin(), labels_.end())) throw ValidationError("forest labels must be sorted");
  for (const auto& tree : trees_) {
    const auto n_nodes = static_cast<int>(tree.nodes.size());
    if (n_nodes == 0) throw ValidationError("empty tree");
    for (int i = 0; i < n_nodes; ++i) {
      const auto& node = tree.nodes[static_cast<std::size_t>(i)];
      if (node.feature >= static_cast<int>(schema_.names.size())) throw ValidationError("tree feature out of range");
      if (node.feature >= 0 && (node.left <= i || node.right <= i || node.left >= n_nodes || node.right >= n_nodes)) {
        throw ValidationError("tree child index out of range");
      }
      if (node.label < 0 || node.label >= static_cast<int>(labels_.size())) {
        throw ValidationError("tree label out of range");
      }
    }
  }
}

Prediction Forest::predict(std::span<const double> values) const {
  if (values.size() != schema_.names.size()) {
    throw ValidationError("feature vector has " + std::to_string(values.size()) + " values, model expects " +
                          std::to_string(schema_.names.size()));
  }
  std::vector<double> votes(labels_.size(), 0.0);
  for (const auto& tree : trees_) votes[static_cast<std::size_t>(tree.predict(values))] += 1.0;
  const double total = static_cast<double>(trees_.size());
  for (auto& v : votes) v /= total;
  Prediction p;
  p.label = labels_[argmax_first(votes)];
  p.fractions = std::move(votes);
  return p;
}

Forest train_forest(const FeatureTable& table, const ForestParams& params) {
  const auto n = table.rows.size();
  const auto n_features = table.schema.names.size();
  if (n < 10) throw ValidationError("training needs at least 10 rows");
  if (n_features < 2) throw ValidationError("training needs at least 2 features");
  if (params.n_trees == 0) throw ValidationError("n_trees must be positive");
  if (params.min_samples_leaf == 0) throw ValidationError("min_samples_leaf must be positive");
  const auto m = params.features_per_split.value_or(
      static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_features)))));
  if (m < 1 || m >= n_features) {
    throw ValidationError("features per split must satisfy 1 <= m <= " + std::to_string(n_features - 1));
  }

  const auto labels = collect_labels(table);
  if (labels.size() < 2) throw ValidationError("training needs at least two distinct labels");
  std::map<std::string, int> label_index;
  for (std::size_t i = 0; i < labels.size(); ++i) label_index[labels[i]] = static_cast<int>(i);

  std::vector<std::vector<double>> x;
  std::vector<int> y;
  x.reserve(n);
  for (const auto& row : table.rows) {
    validate_row(table.schema, row);
    x.push_back(row.values);
    y.push_back(label_index.at(*row.label));
  }

  ForestParams effective = params;
  effective.features_per_split = m;
  std::vector<Tree> trees(params.n_trees);
  parallel_for(params.n_trees, params.threads, [&](std::size_t t) {
    Rng rng(mix_seed(params.seed, t));
    std::vector<std::uint32_t> bootstrap(n);
    for (auto& b : bootstrap) b = static_cast<std::uint32_t>(uniform_index(rng, n));
    std::sort(bootstrap.begin(), bootstrap.end());
    TreeBuilder builder(x, y, labels.size(), m, params.min_samples_leaf, rng);
    trees[t].nodes = builder.build(bootstrap);
    trees[t].bootstrap = std::move(bootstrap);
  });
  return Forest(table.schema, labels, effective, n, std::move(trees));
}

OobResult oob_error(const Forest& forest, const FeatureTable& table) {
  if (table.rows.size() != forest.training_rows()) {
    throw ValidationError("OOB needs the training rows (" + std::to_string(forest.training_rows()) + "), got " +
                          std::to_string(table.rows.size()));
  }
  const auto n = table.rows.size();
  std::vector<std::vector<double>> votes(n, std::vector<double>(forest.labels().size(), 0.0));
  std::vector<std::size_t> voters(n, 0);
  std::vector<char> in_bag(n);
  for (const auto& tree : forest.trees()) {
    std::fill(in_bag.begin(), in_bag.end(), 0);
    for (auto b : tree.bootstrap) in_bag[b] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_bag[i]) continue;
      votes[i][static_cast<std::size_t>(tree.predict(table.rows[i].values))] += 1.0;
      ++voters[i];
    }
  }
  OobResult result;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (voters[i] == 0) {
      ++result.skipped;
      continue;
    }
    ++result.evaluated;
    const auto& label = table.rows[i].label;
    if (!label || forest.labels()[argmax_first(votes[i])] != *label) ++wrong;
  }
  result.error = result.evaluated ? static_cast<double>(wrong) / static_cast<double>(result.evaluated) : 0.0;
  return result;
}

EvalReport evaluate(std::span<const Prediction> predictions, std::span<const std::string> truth,
                    std::span<const std::string> labels) {
  if (predictions.size() != truth.size()) throw ValidationError("predictions and truth differ in length");
  if (predictions.empty()) throw ValidationError("nothing to evaluate");
  const auto k = labels.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < k; ++i) index[labels[i]] = i;
  if (index.size() != k) throw ValidationError("duplicate label in label set");
  auto lookup = [&](const std::string& label) {
    const auto it = index.find(label);
    if (it == index.end()) throw ValidationError("label '" + label + "' not in label set");
    return it->second;
  };

  EvalReport r;
  r.labels.assign(labels.begin(), labels.end());
  r.instances = predictions.size();
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  const double n = static_cast<double>(r.instances);

  double abs_err = 0;
  double sq_err = 0;
  std::vector<std::size_t> actual(r.instances);
  for (std::size_t i = 0; i < r.instances; ++i) {
    const auto& p = predictions[i];
    if (p.fractions.size() != k) throw ValidationError("prediction distribution width differs from label set");
    actual[i] = lookup(truth[i]);
    const auto predicted = lookup(p.label);
    ++r.confusion[actual[i]][predicted];
    for (std::size_t c = 0; c < k; ++c) {
      const double target = c == actual[i] ? 1.0 : 0.0;
      const double d = p.fractions[c] - target;
      abs_err += std::fabs(d);
      sq_err += d * d;
    }
  }
  r.mae = abs_err / (n * static_cast<double>(k));
  r.rmse = std::sqrt(sq_err / (n * static_cast<double>(k)));

  std::vector<std::size_t> row_sum(k, 0), col_sum(k, 0);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      row_sum[a] += r.confusion[a][b];
      col_sum[b] += r.confusion[a][b];
    }
    r.correct += r.confusion[a][a];
  }
  const double p_o = static_cast<double>(r.correct) / n;
  double p_e = 0;
  for (std::size_t c = 0; c < k; ++c) p_e += (static_cast<double>(row_sum[c]) / n) * (static_cast<double>(col_sum[c]) / n);
  r.accuracy_pct = 100.0 * p_o;
  r.kappa = p_e >= 1.0 ? (p_o >= 1.0 ? 1.0 : 0.0) : (p_o - p_e) / (1.0 - p_e);

  double roc_weight = 0;
  r.weighted.label = "weighted";
  for (std::size_t c = 0; c < k; ++c) {
    LabelMetrics m;
    m.label = r.labels[c];
    m.support = row_sum[c];
    const double tp = static_cast<double>(r.confusion[c][c]);
    const double fn = static_cast<double>(row_sum[c]) - tp;
    const double fp = static_cast<double>(col_sum[c]) - tp;
    const double tn = n - tp - fn - fp;
    m.tp_rate = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    m.recall = m.tp_rate;
    m.fp_rate = fp + tn > 0 ? fp / (fp + tn) : 0.0;
    m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;

    // One-vs-rest AUC from midranks of the label's vote fraction.
    std::vector<std::size_t> order(r.instances);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return predictions[a].fractions[c] < predictions[b].fractions[c];
    });
    double positive_rank_sum = 0;
    std::size_t i = 0;
    while (i < order.size()) {
      std::size_t j = i + 1;
      while (j < order.size() && predictions[order[j]].fractions[c] == predictions[order[i]].fractions[c]) ++j;
      const double rank = 0.5 * static_cast<double>(i + 1 + j);
      for (std::size_t t = i; t < j; ++t) {
        if (actual[order[t]] == c) positive_rank_sum += rank;
      }
      i = j;
    }
    const double positives = static_cast<double>(row_sum[c]);
    const double negatives = n - positives;
    m.roc_area = positives > 0 && negatives > 0
                     ? (positive_rank_sum - positives * (positives + 1) / 2) / (positives * negatives)
                     : std::numeric_limits<double>::quiet_NaN();

    const double w = static_cast<double>(m.support);
    r.weighted.support += m.support;
    r.weighted.tp_rate += w * m.tp_rate;
    r.weighted.fp_rate += w * m.fp_rate;
    r.weighted.precision += w * m.precision;
    r.weighted.recall += w * m.recall;
    r.weighted.f1 += w * m.f1;
    if (std::isfinite(m.roc_area)) {
      r.weighted.roc_area += w * m.roc_area;
      roc_weight += w;
    }
    r.per_label.push_back(m);
  }
  for (double* field : {&r.weighted.tp_rate, &r.weighted.fp_rate, &r.weighted.precision, &r.weighted.recall,
                        &r.weighted.f1}) {
    *field /= n;
  }
  r.weighted.roc_area = roc_weight > 0 ? r.weighted.roc_area / roc_weight : std::numeric_limits<double>::quiet_NaN();
  return r;
}

CrossValidation cross_validate(const FeatureTable& table, std::size_t folds, const ForestParams& params,
                               std::uint64_t seed) {
  const auto n = table.rows.size();
  if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
  if (folds > n) throw ValidationError("more folds than rows");
  const auto labels = collect_labels(table);

  CrossValidation cv;
  Rng rng(seed);
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < n; ++i) by_label[*table.rows[i].label].push_back(i);
  for (const auto& [label, rows] : by_label) {
    if (rows.size() < folds) {
      cv.stratified = false;
      cv.warnings.push_back("label '" + label + "' has " + std::to_string(rows.size()) + " rows, fewer than " +
                            std::to_string(folds) + " folds; using unstratified folds");
    }
  }

  std::vector<std::size_t> sequence;
  if (cv.stratified) {
    for (auto& [label, rows] : by_label) {
      shuffle(rows, rng);
      sequence.insert(sequence.end(), rows.begin(), rows.end());
    }
  } else {
    sequence.resize(n);
    std::iota(sequence.begin(), sequence.end(), 0);
    shuffle(sequence, rng);
  }
  std::vector<std::size_t> fold_of(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold_of[sequence[pos]] = pos % folds;

  std::vector<Prediction> predictions(n);
  for (std::size_t f = 0; f < folds; ++f) {
    FeatureTable train{table.schema, {}};
    for (std::size_t i = 0; i < n; ++i) {
      if (fold_of[i] != f) train.rows.push_back(table.rows[i]);
    }
    ForestParams fold_params = params;
    fold_params.seed = mix_seed(params.seed, 0x1000 + f);
    const auto forest = train_forest(train, fold_params);
    for (std::size_t i = 0; i < n; ++i) {
      if (fold_of[i] != f) continue;
      auto p = forest.predict(table.rows[i].values);
      // Re-align to the full label set; a fold may lack a rare label.
      Prediction aligned;
      aligned.label = p.label;
      aligned.fractions.assign(labels.size(), 0.0);
      for (std::size_t c = 0; c < forest.labels().size(); ++c) {
        const auto pos = std::lower_bound(labels.begin(), labels.end(), forest.labels()[c]) - labels.begin();
        aligned.fractions[static_cast<std::size_t>(pos)] = p.fractions[c];
      }
      predictions[i] = std::move(aligned);
    }
  }
  std::vector<std::string> truth;
  truth.reserve(n);
  for (const auto& row : table.rows) truth.push_back(*row.label);
  cv.report = evaluate(predictions, truth, labels);
  return cv;
}

nlohmann::json to_json(const EvalReport& r) {
  auto metrics = [](const LabelMetrics& m) {
    return nlohmann::json{{"label", m.label},         {"support", m.support}, {"tp_rate", m.tp_rate},
                          {"fp_rate", m.fp_rate},     {"precision", m.precision}, {"recall", m.recall},
                          {"f1", m.f1},               {"roc_area", m.roc_area}};
  };
  nlohmann::json j;
  j["instances"] = r.instances;
  j["correct"] = r.correct;
  j["incorrect"] = r.instances - r.correct;
  j["accuracy_pct"] = r.accuracy_pct;
  j["kappa"] = r.kappa;
  j["mean_absolute_error"] = r.mae;
  j["root_mean_squared_error"] = r.rmse;
  j["labels"] = r.labels;
  j["confusion_matrix"] = r.confusion;
  j["per_label"] = nlohmann::json::array();
  for (const auto& m : r.per_label) j["per_label"].push_back(metrics(m));
  j["weighted_average"] = metrics(r.weighted);
  return j;
}

std::string format_summary(const EvalReport& r) {
  std::string out;
  const double n = static_cast<double>(r.instances);
  out += fmt::format("{:<40}{:>8}{:>12.4f} %\n", "Correctly Classified Instances", r.correct, r.accuracy_pct);
  out += fmt::format("{:<40}{:>8}{:>12.4f} %\n", "Incorrectly Classified Instances", r.instances - r.correct,
                     100.0 * static_cast<double>(r.instances - r.correct) / n);
  out += fmt::format("{:<40}{:>8.4f}\n", "Kappa statistic", r.kappa);
  out += fmt::format("{:<40}{:>8.4f}\n", "Mean absolute error", r.mae);
  out += fmt::format("{:<40}{:>8.4f}\n", "Root mean squared error", r.rmse);
  out += fmt::format("{:<40}{:>8}\n\n", "Total Number of Instances", r.instances);
  out += fmt::format("{:>10}{:>10}{:>10}{:>10}{:>10}{:>10}  {}\n", "TP Rate", "FP Rate", "Precision", "Recall",
                     "F-Measure", "ROC Area", "Class");
  auto line = [&](const LabelMetrics& m) {
    const auto roc = std::isfinite(m.roc_area) ? fmt::format("{:.3f}", m.roc_area) : std::string("?");
    out += fmt::format("{:>10.3f}{:>10.3f}{:>10.3f}{:>10.3f}{:>10.3f}{:>10}  {}\n", m.tp_rate, m.fp_rate,
                       m.precision, m.recall, m.f1, roc, m.label);
  };
  for (const auto& m : r.per_label) line(m);
  line(r.weighted);
  out += "\nConfusion matrix (rows = actual, columns = predicted)\n";
  for (std::size_t a = 0; a < r.labels.size(); ++a) {
    for (auto c : r.confusion[a]) out += fmt::format("{:>7}", c);
    out += "  | " + r.labels[a] + "\n";
  }
  return out;
}

void save_forest(const Forest& forest, std::ostream& out) {
  nlohmann::json j;
  j["format"] = kFormatName;
  j["version"] = kFormatVersion;
  j["schema"] = forest.schema().names;
  j["labels"] = forest.labels();
  j["training_rows"] = forest.training_rows();
  const auto& p = forest.params();
  j["params"] = {{"n_trees", p.n_trees},
                 {"features_per_split", p.features_per_split.value_or(0)},
                 {"seed", p.seed},
                 {"min_samples_leaf", p.min_samples_leaf}};
  j["trees"] = nlohmann::json::array();
  for (const auto& tree : forest.trees()) {
    nlohmann::json t;
    std::vector<int> feature, left, right, label;
    std::vector<double> threshold;
    for (const auto& node : tree.nodes) {
      feature.push_back(node.feature);
      threshold.push_back(node.threshold);
      left.push_back(node.left);
      right.push_back(node.right);
      label.push_back(node.label);
    }
    t["feature"] = feature;
    t["threshold"] = threshold;
    t["left"] = left;
    t["right"] = right;
    t["label"] = label;
    t["bootstrap"] = tree.bootstrap;
    j["trees"].push_back(std::move(t));
  }
  out << j.dump() << '\n';
}

Forest load_forest(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("format").get<std::string>() != kFormatName) throw ValidationError("not a forest model file");
    if (j.at("version").get<int>() != kFormatVersion) {
      throw ValidationError("unsupported forest model version " + std::to_string(j.at("version").get<int>()));
    }
    ForestParams params;
    const auto& p = j.at("params");
    params.n_trees = p.at("n_trees").get<std::size_t>();
    params.features_per_split = p.at("features_per_split").get<std::size_t>();
    params.seed = p.at("seed").get<std::uint64_t>();
    params.min_samples_leaf = p.at("min_samples_leaf").get<std::size_t>();
    std::vector<Tree> trees;
    for (const auto& t : j.at("trees")) {
      const auto feature = t.at("feature").get<std::vector<int>>();
      const auto threshold = t.at("threshold").get<std::vector<double>>();
      const auto left = t.at("left").get<std::vector<int>>();
      const auto right = t.at("right").get<std::vector<int>>();
      const auto label = t.at("label").get<std::vector<int>>();
      const auto count = feature.size();
      if (threshold.size() != count || left.size() != count || right.size() != count || label.size() != count) {
        throw ValidationError("tree arrays differ in length");
      }
      Tree tree;
      for (std::size_t i = 0; i < count; ++i) tree.nodes.push_back({feature[i], threshold[i], left[i], right[i], label[i]});
      tree.bootstrap = t.at("bootstrap").get<std::vector<std::uint32_t>>();
      trees.push_back(std::move(tree));
    }
    return Forest(FeatureSchema{j.at("schema").get<std::vector<std::string>>()},
                  j.at("labels").get<std::vector<std::string>>(), params, j.at("training_rows").get<std::size_t>(),
                  std::move(trees));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed forest model: ") + e.what());
  }
}

}  // namespace pmsys::model
