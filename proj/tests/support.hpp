#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "imputekit/rng.hpp"
#include "imputekit/table.hpp"

namespace test {

using imputekit::Column;
using imputekit::ColumnKind;
using imputekit::MixedTable;
using imputekit::Schema;

inline constexpr double NA = std::numeric_limits<double>::quiet_NaN();

inline Column quant(std::string name) { return {std::move(name)}; }

inline Column cat(std::string name, std::vector<std::string> levels, bool ordered = false) {
  return {std::move(name), ColumnKind::categorical(std::move(levels), ordered)};
}

inline MixedTable table(std::vector<Column> columns, std::vector<std::vector<double>> data) {
  return MixedTable(Schema(std::move(columns)), std::move(data));
}

// Random complete table: column c is categorical with 2 + c % 3 levels when
// c % 2 == 1, quantitative otherwise.
inline MixedTable random_table(imputekit::Rng& rng, std::size_t rows, std::size_t cols,
                               bool with_categorical = true) {
  std::vector<Column> columns;
  std::vector<std::vector<double>> data(cols, std::vector<double>(rows));
  for (std::size_t c = 0; c < cols; ++c) {
    const bool categorical = with_categorical && c % 2 == 1;
    if (categorical) {
      std::vector<std::string> levels;
      const std::size_t n = 2 + c % 3;
      for (std::size_t l = 0; l < n; ++l) levels.push_back("L" + std::to_string(l));
      columns.push_back(cat("c" + std::to_string(c), levels));
      for (auto& v : data[c]) v = static_cast<double>(rng.below(n));
    } else {
      columns.push_back(quant("c" + std::to_string(c)));
      for (auto& v : data[c]) v = std::round(rng.normal() * 100.0) / 10.0;
    }
  }
  return table(std::move(columns), std::move(data));
}

}  // namespace test
