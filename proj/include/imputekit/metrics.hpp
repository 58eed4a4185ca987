#pragma once

#include <optional>
#include <span>
#include <vector>

#include "imputekit/table.hpp"

namespace imputekit {

/// Scores of an imputed table against the complete one, over the Amputed
/// entries of the mask only.
struct ErrorScores {
  std::optional<double> nrmse;
  std::optional<double> pfc;
  std::size_t quantitative_cells = 0;
  std::size_t categorical_cells = 0;
  /// The complete values at the scored quantitative cells are constant while
  /// the imputations differ from them, so nrmse is undefined.
  bool variance_zero = false;
};

ErrorScores score(const MixedTable& complete, const MixedTable& imputed, const MissingMask& mask);

/// sqrt(mean squared difference / population variance of the true values).
std::optional<double> nrmse(const MixedTable& complete, const MixedTable& imputed,
                            const MissingMask& mask);
std::optional<double> pfc(const MixedTable& complete, const MixedTable& imputed,
                          const MissingMask& mask);

/// Population-form Pearson correlation. Throws ConstantInput.
double pearson(std::span<const double> x, std::span<const double> y);

/// Replaces each level by the mean of `quant` over the rows sharing it.
std::vector<double> encode_categorical_against(std::span<const double> qual,
                                               std::span<const double> quant);

struct PairCorrelation {
  std::size_t first = 0;
  std::size_t second = 0;
  double rho = 0.0;
};

/// Correlation of every column pair with a quantitative member, in (first,
/// second) order; the categorical side of a mixed pair is encoded against the
/// quantitative one. Throws IncompleteInput or ConstantColumn.
std::vector<PairCorrelation> pair_correlations(const MixedTable& table);

enum class SkewVariant { AsWritten, Standardized };
const char* to_string(SkewVariant v) noexcept;

struct StructuralIndices {
  double rho_abs = 0.0;
  double sd_abs = 0.0;
  double skew_abs = 0.0;
  std::size_t p = 0;
  std::size_t pairs = 0;
  SkewVariant skew_variant = SkewVariant::Standardized;
};

/// Moment summaries of |rho| over column pairs; pairs of two categorical
/// columns are skipped. skew_abs is the third central moment divided by
/// sd_abs (AsWritten) or sd_abs^3 (Standardized), and 0 when sd_abs is 0.
StructuralIndices structural_indices(const MixedTable& table,
                                     SkewVariant variant = SkewVariant::Standardized);

enum class Strength { Weak, Moderate, Strong };
const char* to_string(Strength s) noexcept;
Strength strength_label(double rho);

/// (x - reference) / reference. Throws ZeroReference.
double relative_gap(double x, double reference);

struct BoxplotStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  double mean = 0, sd = 0;
  double whisker_low = 0, whisker_high = 0;
  std::size_t n = 0;
};

/// Linear-interpolation quantile of sorted data (h = (n - 1) q).
double quantile_sorted(std::span<const double> sorted, double q);

/// sd uses divisor n - 1 and is 0 for a single sample. Throws InvalidArgument
/// on empty input.
BoxplotStats boxplot_stats(std::span<const double> samples);

}  // namespace imputekit
