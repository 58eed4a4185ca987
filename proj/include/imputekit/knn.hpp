#pragma once

#include <optional>
#include <span>
#include <vector>

#include "imputekit/result.hpp"
#include "imputekit/table.hpp"

namespace imputekit {

struct KnnParams {
  std::size_t k = 5;
};

/// Observed (min, max) per quantitative column; unused for categorical ones.
struct ColumnRanges {
  std::vector<double> min;
  std::vector<double> max;

  static ColumnRanges from_table(const MixedTable& table);
  double range(std::size_t c) const { return max[c] - min[c]; }
};

/// Gower similarity between rows `a` and `b` of `table`, skipping the
/// `exclude` column (pass table.cols() for none) and every column missing in
/// either row. Empty when no column is comparable.
std::optional<double> gower_similarity(const MixedTable& table, std::size_t a, std::size_t b,
                                       const ColumnRanges& ranges, std::size_t exclude);

/// Same, for raw-encoded rows against a schema.
std::optional<double> gower_similarity(std::span<const double> a, std::span<const double> b,
                                       const Schema& schema, const ColumnRanges& ranges,
                                       std::span<const std::size_t> exclude = {});

ImputationResult knn_impute(const MixedTable& table, const KnnParams& params = {});

}  // namespace imputekit
