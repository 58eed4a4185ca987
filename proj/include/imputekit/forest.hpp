#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imputekit/result.hpp"
#include "imputekit/rng.hpp"
#include "imputekit/table.hpp"

namespace imputekit {

struct ForestParams {
  std::size_t ntree = 100;
  /// Candidate predictors per split; 0 means floor(sqrt(predictors + 1)), the
  /// square root of the table's column count, kept within [1, predictors].
  std::size_t mtry = 0;
  /// 0 means 5 for regression and 1 for classification.
  std::size_t min_node_size = 0;
  std::size_t max_iter = 10;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  /// When false every tree trains on each row exactly once (no out-of-bag rows).
  bool bootstrap = true;
};

/// Resolved mtry for a given predictor count.
std::size_t default_mtry(std::size_t predictors);

/// Complete training data in raw encoding. A level count of 0 marks a
/// quantitative column (or a regression response).
struct TrainingData {
  std::vector<std::vector<double>> x;  // predictor columns
  std::vector<std::size_t> x_levels;
  std::vector<double> y;
  std::size_t y_levels = 0;

  std::size_t rows() const { return y.size(); }
  std::size_t predictors() const { return x.size(); }
  bool classification() const { return y_levels > 0; }
};

struct TreeNode {
  enum class Rule : std::uint8_t { Leaf, Threshold, LevelSet, SingleLevel };
  Rule rule = Rule::Leaf;
  std::uint32_t column = 0;
  /// Threshold: x <= threshold goes left. SingleLevel: the level going left.
  double threshold = 0.0;
  /// LevelSet: bit l set means level l goes left.
  std::uint64_t levels = 0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  /// Leaf: mean response or modal level.
  double value = 0.0;
  std::uint32_t count = 0;

  bool is_leaf() const { return rule == Rule::Leaf; }
  bool goes_left(double x) const;
};

/// Flat tree; nodes[0] is the root.
struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> row) const;
  std::size_t leaves() const;
};

/// Grows one tree on the rows listed in `sample` (repeats allowed).
Tree fit_tree(const TrainingData& data, std::span<const std::uint32_t> sample,
              const ForestParams& params, Rng& rng);
/// Grows one tree on every row once.
Tree fit_tree(const TrainingData& data, const ForestParams& params, Rng& rng);

struct Forest {
  std::vector<Tree> trees;
  /// in_bag[t][r]: times training row r was drawn for tree t.
  std::vector<std::vector<std::uint32_t>> in_bag;
  std::size_t classes = 0;  // 0 for regression

  bool out_of_bag(std::size_t tree, std::size_t row) const { return in_bag[tree][row] == 0; }
};

/// Tree t uses rng.child("tree/<t>"), so results do not depend on `threads`.
Forest fit_forest(const TrainingData& data, const ForestParams& params, const Rng& rng);

/// Mean (regression) or majority vote with ties to the lowest level. With
/// oob_row set, only trees that did not train on that row vote; empty when
/// there are none.
std::optional<double> predict_forest(const Forest& forest, std::span<const double> row,
                                     std::optional<std::size_t> oob_row = std::nullopt);

/// Out-of-bag predictions for the training rows: sums of squared errors
/// (regression) or misclassification counts over rows with a defined
/// out-of-bag prediction.
struct OobComponent {
  std::size_t evaluated = 0;
  double squared_error = 0.0;
  std::size_t misclassified = 0;
  /// Observed responses of the evaluated rows (regression).
  std::vector<double> truth;
};

OobComponent oob_error(const Forest& forest, const TrainingData& data);

struct StoppingDeltas {
  std::optional<double> quantitative;
  std::optional<double> categorical;
};

struct OobEstimate {
  std::optional<double> nrmse;
  std::optional<double> pfc;
  std::vector<std::string> notes;
};

struct MissForestResult {
  ImputationResult result;
  OobEstimate oob;
  std::size_t iterations = 0;
  std::vector<StoppingDeltas> deltas;
};

MissForestResult missforest_impute(const MixedTable& table, const ForestParams& params = {});

}  // namespace imputekit
