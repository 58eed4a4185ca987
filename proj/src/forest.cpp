#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "imputekit/forest.hpp"
#include "imputekit/parallel.hpp"

namespace imputekit {

bool TreeNode::goes_left(double x) const {
  switch (rule) {
    case Rule::Threshold:
      return x <= threshold;
    case Rule::LevelSet: {
      const auto level = static_cast<std::uint64_t>(x);
      return level < 64 && ((levels >> level) & 1u) != 0;
    }
    case Rule::SingleLevel:
      return x == threshold;
    case Rule::Leaf:
      break;
  }
  return false;
}

double Tree::predict(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& node = nodes[i];
    i = node.goes_left(row[node.column]) ? node.left : node.right;
  }
  return nodes[i].value;
}

std::size_t Tree::leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t default_mtry(std::size_t predictors) {
  const auto root = static_cast<std::size_t>(std::sqrt(static_cast<double>(predictors + 1)));
  return std::clamp<std::size_t>(root, 1, std::max<std::size_t>(predictors, 1));
}

namespace {

constexpr std::size_t kExhaustiveLevels = 10;

// Distinct sorted values of a quantitative predictor and each row's position among them.
struct ColumnRanks {
  std::vector<double> values;
  std::vector<std::uint32_t> rank;
};

std::vector<ColumnRanks> rank_columns(const TrainingData& data) {
  std::vector<ColumnRanks> out(data.predictors());
  for (std::size_t j = 0; j < data.predictors(); ++j) {
    if (data.x_levels[j] != 0) continue;
    const auto& x = data.x[j];
    auto& cr = out[j];
    cr.values = x;
    std::sort(cr.values.begin(), cr.values.end());
    cr.values.erase(std::unique(cr.values.begin(), cr.values.end()), cr.values.end());
    cr.rank.resize(x.size());
    for (std::size_t r = 0; r < x.size(); ++r) {
      cr.rank[r] = static_cast<std::uint32_t>(
          std::lower_bound(cr.values.begin(), cr.values.end(), x[r]) - cr.values.begin());
    }
  }
  return out;
}

struct Split {
  double gain = 0.0;
  TreeNode node;  // rule, column, threshold, levels
};

class TreeBuilder {
 public:
  TreeBuilder(const TrainingData& data, const std::vector<ColumnRanks>& ranks,
              const ForestParams& params, Rng& rng)
      : data_(data), rng_(rng), ranks_(ranks) {
    const std::size_t p = data.predictors();
    mtry_ = params.mtry == 0 ? default_mtry(p) : params.mtry;
    if (p > 0 && mtry_ > p) {
      throw Error(ErrorCode::InvalidArgument, "mtry " + std::to_string(mtry_) + " exceeds the " +
                                                  std::to_string(p) + " predictors");
    }
    mtry_ = std::min(mtry_, p);
    min_node_ = params.min_node_size != 0 ? params.min_node_size
                                          : (data.classification() ? 1 : 5);
    candidates_.resize(p);
    class_counts_.resize(data.y_levels);
  }

  Tree build(std::vector<std::uint32_t> sample) {
    sample_ = std::move(sample);
    tree_.nodes.clear();
    tree_.nodes.emplace_back();
    grow(0, 0, sample_.size());
    return std::move(tree_);
  }

 private:
  void grow(std::size_t node, std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    make_leaf(node, begin, end);
    if (n < 2 * min_node_ || pure(begin, end) || mtry_ == 0) return;

    std::iota(candidates_.begin(), candidates_.end(), std::size_t{0});
    for (std::size_t i = 0; i < mtry_; ++i) {
      std::swap(candidates_[i], candidates_[i + rng_.below(candidates_.size() - i)]);
    }
    std::sort(candidates_.begin(), candidates_.begin() + static_cast<long>(mtry_));

    prepare_node(begin, end);
    Split best;
    for (std::size_t k = 0; k < mtry_; ++k) {
      const std::size_t column = candidates_[k];
      Split split = data_.x_levels[column] == 0 ? best_threshold(column, begin, end)
                                                : best_level_split(column, begin, end);
      if (split.gain > best.gain && split.gain > tolerance_) best = split;
    }
    if (best.node.rule == TreeNode::Rule::Leaf) return;

    const auto& x = data_.x[best.node.column];
    const auto middle = std::stable_partition(
        sample_.begin() + static_cast<long>(begin), sample_.begin() + static_cast<long>(end),
        [&](std::uint32_t r) { return best.node.goes_left(x[r]); });
    const std::size_t split_at = static_cast<std::size_t>(middle - sample_.begin());
    if (split_at == begin || split_at == end) return;

    const auto left = static_cast<std::uint32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const auto right = static_cast<std::uint32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    auto& self = tree_.nodes[node];
    self.rule = best.node.rule;
    self.column = best.node.column;
    self.threshold = best.node.threshold;
    self.levels = best.node.levels;
    self.left = left;
    self.right = right;
    grow(left, begin, split_at);
    grow(right, split_at, end);
  }

  void make_leaf(std::size_t node, std::size_t begin, std::size_t end) {
    auto& leaf = tree_.nodes[node];
    leaf.count = static_cast<std::uint32_t>(end - begin);
    if (data_.classification()) {
      std::fill(class_counts_.begin(), class_counts_.end(), 0.0);
      for (std::size_t i = begin; i < end; ++i) class_counts_[cls(sample_[i])] += 1.0;
      leaf.value = static_cast<double>(std::max_element(class_counts_.begin(), class_counts_.end()) -
                                       class_counts_.begin());
    } else {
      double sum = 0.0;
      for (std::size_t i = begin; i < end; ++i) sum += data_.y[sample_[i]];
      leaf.value = sum / static_cast<double>(end - begin);
    }
  }

  bool pure(std::size_t begin, std::size_t end) const {
    const double first = data_.y[sample_[begin]];
    for (std::size_t i = begin + 1; i < end; ++i) {
      if (data_.y[sample_[i]] != first) return false;
    }
    return true;
  }

  std::size_t cls(std::uint32_t r) const { return static_cast<std::size_t>(data_.y[r]); }

  // Node totals shared by every candidate column.
  void prepare_node(std::size_t begin, std::size_t end) {
    const double n = static_cast<double>(end - begin);
    if (data_.classification()) {
      std::fill(class_counts_.begin(), class_counts_.end(), 0.0);
      for (std::size_t i = begin; i < end; ++i) class_counts_[cls(sample_[i])] += 1.0;
      double sq = 0.0;
      for (double c : class_counts_) sq += c * c;
      parent_score_ = sq / n;
      tolerance_ = 1e-12 * n;
    } else {
      double sum = 0.0;
      for (std::size_t i = begin; i < end; ++i) sum += data_.y[sample_[i]];
      node_mean_ = sum / n;
      double centered = 0.0, ss = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        const double v = data_.y[sample_[i]] - node_mean_;
        centered += v;
        ss += v * v;
      }
      parent_score_ = centered * centered / n;
      tolerance_ = 1e-12 * ss;
    }
  }

  Split best_threshold(std::size_t column, std::size_t begin, std::size_t end) {
    const auto& index = ranks_[column];
    const std::size_t n = end - begin;
    const std::size_t unique = index.values.size();
    const std::size_t classes = std::max<std::size_t>(data_.y_levels, 1);
    // Per distinct value present in the node: count and centered response sum or class counts.
    // The dense arrays stay zeroed between calls; `occupied_` marks the ranks touched here.
    if (dense_n_.size() < unique) {
      dense_n_.resize(unique, 0.0);
      dense_stats_.resize(unique * classes, 0.0);
    }
    occupied_.assign((unique + 63) / 64, 0);
    for (std::size_t i = begin; i < end; ++i) {
      const auto r = sample_[i];
      const auto rank = index.rank[r];
      dense_n_[rank] += 1.0;
      add_response(&dense_stats_[rank * classes], response(r));
      occupied_[rank / 64] |= std::uint64_t{1} << (rank % 64);
    }
    bucket_rank_.clear();
    bucket_n_.clear();
    bucket_stats_.clear();
    for (std::size_t w = 0; w < occupied_.size(); ++w) {
      for (std::uint64_t bits = occupied_[w]; bits != 0; bits &= bits - 1) {
        const auto rank = static_cast<std::uint32_t>(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
        bucket_rank_.push_back(rank);
        bucket_n_.push_back(dense_n_[rank]);
        dense_n_[rank] = 0.0;
        for (std::size_t k = 0; k < classes; ++k) {
          bucket_stats_.push_back(dense_stats_[rank * classes + k]);
          dense_stats_[rank * classes + k] = 0.0;
        }
      }
    }

    Split best;
    const double total_n = static_cast<double>(n);
    double nl = 0.0;
    if (data_.classification()) {
      left_counts_.assign(classes, 0.0);
      right_counts_ = class_counts_;
      double sq_left = 0.0, sq_right = 0.0;
      for (double c : right_counts_) sq_right += c * c;
      for (std::size_t b = 0; b + 1 < bucket_rank_.size(); ++b) {
        for (std::size_t k = 0; k < classes; ++k) {
          const double m = bucket_stats_[b * classes + k];
          if (m == 0.0) continue;
          sq_left += m * (2.0 * left_counts_[k] + m);
          sq_right -= m * (2.0 * right_counts_[k] - m);
          left_counts_[k] += m;
          right_counts_[k] -= m;
        }
        nl += bucket_n_[b];
        const double gain = sq_left / nl + sq_right / (total_n - nl) - parent_score_;
        if (gain > best.gain) {
          set_threshold(best, gain, column, index.values[bucket_rank_[b]],
                        index.values[bucket_rank_[b + 1]]);
        }
      }
    } else {
      double total = 0.0;
      for (std::size_t b = 0; b < bucket_rank_.size(); ++b) total += bucket_stats_[b];
      double left = 0.0;
      for (std::size_t b = 0; b + 1 < bucket_rank_.size(); ++b) {
        left += bucket_stats_[b];
        nl += bucket_n_[b];
        const double right = total - left;
        const double gain = left * left / nl + right * right / (total_n - nl) - parent_score_;
        if (gain > best.gain) {
          set_threshold(best, gain, column, index.values[bucket_rank_[b]],
                        index.values[bucket_rank_[b + 1]]);
        }
      }
    }
    return best;
  }

  // Centered response (regression) or class index (classification).
  double response(std::uint32_t r) const {
    return data_.classification() ? data_.y[r] : data_.y[r] - node_mean_;
  }

  void add_response(double* stats, double value) const {
    if (data_.classification()) {
      stats[static_cast<std::size_t>(value)] += 1.0;
    } else {
      stats[0] += value;
    }
  }

  static void set_threshold(Split& split, double gain, std::size_t column, double a, double b) {
    double mid = a + (b - a) / 2.0;
    if (!(mid < b)) mid = a;
    split.gain = gain;
    split.node.rule = TreeNode::Rule::Threshold;
    split.node.column = static_cast<std::uint32_t>(column);
    split.node.threshold = mid;
  }

  Split best_level_split(std::size_t column, std::size_t begin, std::size_t end) {
    const auto& x = data_.x[column];
    const std::size_t levels = data_.x_levels[column];
    const std::size_t classes = std::max<std::size_t>(data_.y_levels, 1);
    // Per level: count and either the centered response sum or class counts.
    level_n_.assign(levels, 0.0);
    level_stats_.assign(levels * classes, 0.0);
    for (std::size_t i = begin; i < end; ++i) {
      const auto r = sample_[i];
      const auto l = static_cast<std::size_t>(x[r]);
      level_n_[l] += 1.0;
      if (data_.classification()) {
        level_stats_[l * classes + cls(r)] += 1.0;
      } else {
        level_stats_[l * classes] += data_.y[r] - node_mean_;
      }
    }
    present_.clear();
    for (std::size_t l = 0; l < levels; ++l) {
      if (level_n_[l] > 0) present_.push_back(l);
    }
    Split best;
    if (present_.size() < 2) return best;
    const double total_n = static_cast<double>(end - begin);

    left_counts_.assign(classes, 0.0);
    right_counts_.assign(classes, 0.0);
    auto evaluate = [&](auto&& in_left) {
      std::fill(left_counts_.begin(), left_counts_.end(), 0.0);
      std::fill(right_counts_.begin(), right_counts_.end(), 0.0);
      double nl = 0.0, nr = 0.0;
      for (auto l : present_) {
        auto& side = in_left(l) ? left_counts_ : right_counts_;
        (in_left(l) ? nl : nr) += level_n_[l];
        for (std::size_t k = 0; k < classes; ++k) side[k] += level_stats_[l * classes + k];
      }
      double score = 0.0;
      if (data_.classification()) {
        double sl = 0.0, sr = 0.0;
        for (std::size_t k = 0; k < classes; ++k) {
          sl += left_counts_[k] * left_counts_[k];
          sr += right_counts_[k] * right_counts_[k];
        }
        score = sl / nl + sr / nr;
      } else {
        score = left_counts_[0] * left_counts_[0] / nl + right_counts_[0] * right_counts_[0] / nr;
      }
      (void)total_n;
      return score - parent_score_;
    };

    if (levels <= kExhaustiveLevels) {
      const std::size_t m = present_.size();
      // present_[0] always stays right; every other partition appears once.
      for (std::uint64_t s = 1; s < (std::uint64_t{1} << (m - 1)); ++s) {
        std::uint64_t mask = 0;
        for (std::size_t j = 1; j < m; ++j) {
          if ((s >> (j - 1)) & 1u) mask |= std::uint64_t{1} << present_[j];
        }
        const double gain = evaluate([&](std::size_t l) { return ((mask >> l) & 1u) != 0; });
        if (gain > best.gain) {
          best.gain = gain;
          best.node.rule = TreeNode::Rule::LevelSet;
          best.node.column = static_cast<std::uint32_t>(column);
          best.node.levels = mask;
        }
      }
    } else {
      for (auto level : present_) {
        const double gain = evaluate([&](std::size_t l) { return l == level; });
        if (gain > best.gain) {
          best.gain = gain;
          best.node.rule = TreeNode::Rule::SingleLevel;
          best.node.column = static_cast<std::uint32_t>(column);
          best.node.threshold = static_cast<double>(level);
        }
      }
    }
    return best;
  }

  const TrainingData& data_;
  Rng& rng_;
  std::size_t mtry_ = 1;
  std::size_t min_node_ = 1;
  Tree tree_;
  std::vector<std::uint32_t> sample_;
  std::vector<std::size_t> candidates_;
  const std::vector<ColumnRanks>& ranks_;
  std::vector<std::uint64_t> occupied_;
  std::vector<std::uint32_t> bucket_rank_;
  std::vector<double> bucket_n_, bucket_stats_, dense_n_, dense_stats_;
  std::vector<double> class_counts_, left_counts_, right_counts_;
  std::vector<double> level_n_, level_stats_;
  std::vector<std::size_t> present_;
  double parent_score_ = 0.0;
  double node_mean_ = 0.0;
  double tolerance_ = 0.0;
};

void check_training(const TrainingData& data) {
  if (data.rows() == 0) throw Error(ErrorCode::EmptyTraining, "no training rows");
  if (data.x.size() != data.x_levels.size()) {
    throw Error(ErrorCode::InvalidArgument, "predictor kinds do not match predictor columns");
  }
  for (const auto& col : data.x) {
    if (col.size() != data.rows()) {
      throw Error(ErrorCode::InvalidArgument, "predictor column length differs from response");
    }
  }
}

}  // namespace

Tree fit_tree(const TrainingData& data, std::span<const std::uint32_t> sample,
              const ForestParams& params, Rng& rng) {
  check_training(data);
  if (sample.empty()) throw Error(ErrorCode::EmptyTraining, "empty training sample");
  const auto ranks = rank_columns(data);
  TreeBuilder builder(data, ranks, params, rng);
  return builder.build({sample.begin(), sample.end()});
}

Tree fit_tree(const TrainingData& data, const ForestParams& params, Rng& rng) {
  std::vector<std::uint32_t> all(data.rows());
  std::iota(all.begin(), all.end(), 0u);
  return fit_tree(data, all, params, rng);
}

Forest fit_forest(const TrainingData& data, const ForestParams& params, const Rng& rng) {
  check_training(data);
  if (params.ntree < 1) throw Error(ErrorCode::InvalidArgument, "ntree must be at least 1");
  const std::size_t n = data.rows();
  Forest forest;
  forest.classes = data.y_levels;
  forest.trees.resize(params.ntree);
  forest.in_bag.assign(params.ntree, std::vector<std::uint32_t>(n, 0));
  const auto ranks = rank_columns(data);
  parallel_for(params.ntree, params.threads, [&](std::size_t t) {
    Rng tree_rng = rng.child("tree/" + std::to_string(t));
    std::vector<std::uint32_t> sample(n);
    auto& counts = forest.in_bag[t];
    for (std::size_t i = 0; i < n; ++i) {
      sample[i] = params.bootstrap ? static_cast<std::uint32_t>(tree_rng.below(n))
                                   : static_cast<std::uint32_t>(i);
      ++counts[sample[i]];
    }
    TreeBuilder builder(data, ranks, params, tree_rng);
    forest.trees[t] = builder.build(std::move(sample));
  });
  return forest;
}

std::optional<double> predict_forest(const Forest& forest, std::span<const double> row,
                                     std::optional<std::size_t> oob_row) {
  std::size_t used = 0;
  if (forest.classes > 0) {
    std::vector<std::size_t> votes(forest.classes, 0);
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
      if (oob_row && !forest.out_of_bag(t, *oob_row)) continue;
      ++votes[static_cast<std::size_t>(forest.trees[t].predict(row))];
      ++used;
    }
    if (used == 0) return std::nullopt;
    return static_cast<double>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    if (oob_row && !forest.out_of_bag(t, *oob_row)) continue;
    sum += forest.trees[t].predict(row);
    ++used;
  }
  if (used == 0) return std::nullopt;
  return sum / static_cast<double>(used);
}

OobComponent oob_error(const Forest& forest, const TrainingData& data) {
  OobComponent out;
  std::vector<double> row(data.predictors());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = data.x[j][r];
    const auto prediction = predict_forest(forest, row, r);
    if (!prediction) continue;
    ++out.evaluated;
    if (forest.classes > 0) {
      out.misclassified += *prediction != data.y[r];
    } else {
      const double e = *prediction - data.y[r];
      out.squared_error += e * e;
      out.truth.push_back(data.y[r]);
    }
  }
  return out;
}

}  // namespace imputekit
