#include "imputekit/knn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace imputekit {

ColumnRanges ColumnRanges::from_table(const MixedTable& table) {
  ColumnRanges ranges;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ranges.min.assign(table.cols(), nan);
  ranges.max.assign(table.cols(), nan);
  for (std::size_t c = 0; c < table.cols(); ++c) {
    if (!table.kind(c).is_quantitative()) continue;
    for (double v : table.column(c)) {
      if (std::isnan(v)) continue;
      if (std::isnan(ranges.min[c]) || v < ranges.min[c]) ranges.min[c] = v;
      if (std::isnan(ranges.max[c]) || v > ranges.max[c]) ranges.max[c] = v;
    }
  }
  return ranges;
}

namespace {

inline double contribution(bool quantitative, double x, double y, double range) {
  if (!quantitative) return x == y ? 1.0 : 0.0;
  if (range <= 0.0) return 1.0;
  return 1.0 - std::abs(x - y) / range;
}

}  // namespace

std::optional<double> gower_similarity(const MixedTable& table, std::size_t a, std::size_t b,
                                       const ColumnRanges& ranges, std::size_t exclude) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t c = 0; c < table.cols(); ++c) {
    if (c == exclude) continue;
    const double x = table.raw(a, c);
    const double y = table.raw(b, c);
    if (std::isnan(x) || std::isnan(y)) continue;
    sum += contribution(table.kind(c).is_quantitative(), x, y, ranges.range(c));
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

std::optional<double> gower_similarity(std::span<const double> a, std::span<const double> b,
                                       const Schema& schema, const ColumnRanges& ranges,
                                       std::span<const std::size_t> exclude) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (std::find(exclude.begin(), exclude.end(), c) != exclude.end()) continue;
    if (std::isnan(a[c]) || std::isnan(b[c])) continue;
    sum += contribution(schema[c].kind.is_quantitative(), a[c], b[c], ranges.range(c));
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

ImputationResult knn_impute(const MixedTable& table, const KnnParams& params) {
  if (params.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  for (std::size_t c = 0; c < table.cols(); ++c) {
    if (table.rows() > 0 && table.missing_count(c) == table.rows()) {
      throw Error(ErrorCode::NoDonor, "column '" + table.name(c) + "' has no observed value");
    }
  }

  const auto ranges = ColumnRanges::from_table(table);
  ImputationResult result{table, "knn", 0.0, {}};
  std::size_t imputed = 0;
  std::size_t short_pools = 0;
  std::size_t undefined_donors = 0;

  struct Candidate {
    int tier;  // 0: defined distance, 1: no comparable column
    double distance;
    std::size_t row;
    bool operator<(const Candidate& o) const {
      if (tier != o.tier) return tier < o.tier;
      if (distance != o.distance) return distance < o.distance;
      return row < o.row;
    }
  };
  std::vector<Candidate> candidates;

  for (std::size_t c = 0; c < table.cols(); ++c) {
    if (table.missing_count(c) == 0) continue;
    std::vector<std::size_t> donors;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      if (!table.is_missing(r, c)) donors.push_back(r);
    }
    const bool quantitative = table.kind(c).is_quantitative();
    const std::size_t take = std::min(params.k, donors.size());
    if (take < params.k) ++short_pools;

    for (std::size_t r = 0; r < table.rows(); ++r) {
      if (!table.is_missing(r, c)) continue;
      candidates.clear();
      for (auto d : donors) {
        auto sim = gower_similarity(table, r, d, ranges, c);
        if (sim) {
          candidates.push_back({0, 1.0 - *sim, d});
        } else {
          candidates.push_back({1, 0.0, d});
        }
      }
      std::partial_sort(candidates.begin(), candidates.begin() + static_cast<long>(take),
                        candidates.end());

      double value = 0.0;
      if (quantitative) {
        double sum = 0.0;
        for (std::size_t i = 0; i < take; ++i) sum += table.raw(candidates[i].row, c);
        value = sum / static_cast<double>(take);
      } else {
        std::vector<std::size_t> votes(table.kind(c).level_count(), 0);
        for (std::size_t i = 0; i < take; ++i) {
          ++votes[static_cast<std::size_t>(table.raw(candidates[i].row, c))];
        }
        value = static_cast<double>(std::max_element(votes.begin(), votes.end()) - votes.begin());
      }
      for (std::size_t i = 0; i < take; ++i) undefined_donors += candidates[i].tier;
      if (quantitative) {
        result.table.set(r, c, value);
      } else {
        result.table.set(r, c, Level{static_cast<std::uint32_t>(value)});
      }
      ++imputed;
    }
  }

  result.diagnostics["k"] = params.k;
  result.diagnostics["cells_imputed"] = imputed;
  result.diagnostics["columns_with_fewer_than_k_donors"] = short_pools;
  result.diagnostics["donors_without_comparable_column"] = undefined_donors;
  return result;
}

}  // namespace imputekit
