#include "imputekit/ampute.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "imputekit/rng.hpp"

namespace imputekit {

std::size_t amputation_target(const MixedTable& table, double fraction) {
  return static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(table.rows() * table.cols())));
}

Amputation ampute_mcar(const MixedTable& complete, const AmputationSpec& spec) {
  if (!(spec.fraction > 0.0 && spec.fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "fraction must lie in (0, 1)");
  }
  if (spec.min_observed_per_column < 1) {
    throw Error(ErrorCode::InvalidArgument, "min_observed_per_column must be at least 1");
  }
  if (complete.has_missing()) {
    throw Error(ErrorCode::IncompleteInput, "amputation needs a complete table");
  }
  const std::size_t n = complete.rows();
  const std::size_t p = complete.cols();
  const std::size_t cells = n * p;
  const std::size_t target = amputation_target(complete, spec.fraction);
  if (target < 1) {
    throw Error(ErrorCode::InvalidArgument, "fraction too small: no cell would be removed");
  }
  const std::size_t floor_cells = spec.min_observed_per_column * p;
  if (floor_cells > cells || target > cells - floor_cells) {
    throw Error(ErrorCode::FractionTooLarge,
                "cannot remove " + std::to_string(target) + " of " + std::to_string(cells) +
                    " cells while keeping " + std::to_string(spec.min_observed_per_column) +
                    " observed per column");
  }

  Rng rng(spec.seed);
  std::vector<std::size_t> positions(cells);
  std::vector<std::size_t> removed_per_column(p);
  const std::size_t max_removed = n - spec.min_observed_per_column;
  for (std::size_t attempt = 1; attempt <= spec.max_retries + 1; ++attempt) {
    // Partial Fisher-Yates: the first `target` slots are a uniform sample.
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    for (std::size_t i = 0; i < target; ++i) {
      const std::size_t j = i + rng.below(cells - i);
      std::swap(positions[i], positions[j]);
    }
    std::fill(removed_per_column.begin(), removed_per_column.end(), 0);
    bool feasible = true;
    for (std::size_t i = 0; i < target; ++i) {
      if (++removed_per_column[positions[i] % p] > max_removed) {
        feasible = false;
        break;
      }
    }
    if (!feasible) continue;

    Amputation out{complete, {}, attempt};
    std::vector<MaskEntry> entries;
    entries.reserve(target);
    for (std::size_t i = 0; i < target; ++i) {
      const std::size_t row = positions[i] / p;
      const std::size_t col = positions[i] % p;
      out.table.set(row, col, Missing{});
      entries.push_back({row, col, Provenance::Amputed});
    }
    out.mask = MissingMask(out.table, std::move(entries));
    return out;
  }
  throw Error(ErrorCode::RetriesExhausted,
              "no draw satisfied the per-column floor after " + std::to_string(spec.max_retries) +
                  " retries");
}

}  // namespace imputekit
