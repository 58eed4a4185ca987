#pragma once

#include <cstdint>
#include <utility>

#include "imputekit/table.hpp"

namespace imputekit {

struct AmputationSpec {
  double fraction = 0.1;
  std::uint64_t seed = 0;
  std::size_t min_observed_per_column = 2;
  std::size_t max_retries = 100;
};

struct Amputation {
  MixedTable table;
  MissingMask mask;
  std::size_t attempts = 1;
};

/// Number of cells ampute_mcar removes: round(fraction * rows * cols).
std::size_t amputation_target(const MixedTable& table, double fraction);

/// Removes exactly amputation_target() cells, drawn uniformly without
/// replacement over all positions of a complete table. Draws that leave a
/// column with fewer than `min_observed_per_column` observed cells are
/// rejected as a whole and redrawn from the same stream.
Amputation ampute_mcar(const MixedTable& complete, const AmputationSpec& spec);

}  // namespace imputekit
