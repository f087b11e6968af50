#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace pmsys::model {

/// Ordered feature names. The default is the eight affect/trait/age features.
struct FeatureSchema {
  std::vector<std::string> names;

  static FeatureSchema defaults();
  std::optional<std::size_t> index_of(const std::string& name) const;
  bool operator==(const FeatureSchema&) const = default;
};

struct FeatureRow {
  std::vector<double> values;
  std::optional<std::string> label;
};

struct FeatureTable {
  FeatureSchema schema;
  std::vector<FeatureRow> rows;
};

/// Emotion and trait columns must lie in [0,1], "age" must be positive, all
/// values finite, and the width must match the schema.
void validate_row(const FeatureSchema& schema, const FeatureRow& row);

struct ForestParams {
  std::size_t n_trees = 100;
  std::optional<std::size_t> features_per_split;  // m; defaults to ceil(sqrt(M))
  std::uint64_t seed = 1;
  std::size_t min_samples_leaf = 1;
  std::size_t threads = 1;
};

/// Leaf iff feature < 0. Samples with value <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0;
  int left = -1;
  int right = -1;
  int label = -1;
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<std::uint32_t> bootstrap;  // training-row indices drawn with replacement, sorted

  int predict(std::span<const double> values) const;
};

struct Prediction {
  std::string label;
  std::vector<double> fractions;  // aligned with Forest::labels()
};

class Forest {
 public:
  Forest(FeatureSchema schema, std::vector<std::string> labels, ForestParams params, std::size_t training_rows,
         std::vector<Tree> trees);

  const FeatureSchema& schema() const noexcept { return schema_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const ForestParams& params() const noexcept { return params_; }
  const std::vector<Tree>& trees() const noexcept { return trees_; }
  std::size_t training_rows() const noexcept { return training_rows_; }

  /// Plurality vote; ties go to the lexicographically smallest label.
  /// Throws ValidationError if the width differs from the schema.
  Prediction predict(std::span<const double> values) const;

 private:
  FeatureSchema schema_;
  std::vector<std::string> labels_;  // sorted
  ForestParams params_;
  std::size_t training_rows_ = 0;
  std::vector<Tree> trees_;
};

/// Breiman forest: each tree sees a size-N bootstrap, samples m features
/// without replacement at every node (continuing past m only while no valid
/// split exists), splits on Gini, and grows unpruned to purity or min leaf.
/// Tree t uses seed mix_seed(params.seed, t), so thread count never changes results.
Forest train_forest(const FeatureTable& table, const ForestParams& params);

struct OobResult {
  double error = 0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // rows that were in every tree's bootstrap
};

/// Rows must be the training rows in training order.
OobResult oob_error(const Forest& forest, const FeatureTable& table);

struct LabelMetrics {
  std::string label;
  std::size_t support = 0;
  double tp_rate = 0;
  double fp_rate = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double roc_area = 0;  // NaN when the label has no positives or no negatives
};

struct EvalReport {
  std::vector<std::string> labels;
  std::size_t instances = 0;
  std::size_t correct = 0;
  double accuracy_pct = 0;
  double kappa = 0;
  double mae = 0;
  double rmse = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [actual][predicted]
  std::vector<LabelMetrics> per_label;
  LabelMetrics weighted;  // support-weighted averages
};

/// Metrics from predicted distributions and true labels. MAE and RMSE compare
/// each distribution with the one-hot truth, averaged over N*K entries.
EvalReport evaluate(std::span<const Prediction> predictions, std::span<const std::string> truth,
                    std::span<const std::string> labels);

struct CrossValidation {
  EvalReport report;
  bool stratified = true;
  std::vector<std::string> warnings;
};

/// k-fold CV with stratified folds (seeded); falls back to plain shuffled
/// folds with a warning when a label has fewer than k rows.
CrossValidation cross_validate(const FeatureTable& table, std::size_t folds, const ForestParams& params,
                               std::uint64_t seed);

nlohmann::json to_json(const EvalReport& report);

/// Fixed-width text summary in the style of common ML workbench output.
std::string format_summary(const EvalReport& report);

void save_forest(const Forest& forest, std::ostream& out);
Forest load_forest(std::istream& in);

}  // namespace pmsys::model
