#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "imputekit/result.hpp"
#include "imputekit/rng.hpp"
#include "imputekit/table.hpp"

namespace imputekit {

struct MiceParams {
  std::size_t m = 5;
  std::size_t maxit = 5;
  std::size_t pmm_donors = 5;
  double ridge = 1e-5;
  bool drop_collinear = false;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Predictors for `target`: intercept, standardized quantitative columns and
/// one-hot categorical columns (first level dropped). Design columns without
/// variance are left out; with drop_collinear, so are columns whose absolute
/// correlation with an earlier kept column exceeds 0.999. `table` must be
/// complete.
Eigen::MatrixXd build_design(const MixedTable& table, std::size_t target, bool drop_collinear);

/// Predictive mean matching. Returns one value per row of x_missing, each
/// copied from an observed row.
std::vector<double> pmm_impute_column(const Eigen::MatrixXd& x_observed,
                                      const Eigen::VectorXd& y_observed,
                                      const Eigen::MatrixXd& x_missing, std::size_t donors,
                                      double ridge, Rng& rng);

struct CategoricalDraws {
  std::vector<std::uint32_t> levels;
  /// "logistic", "polytomous", "proportional_odds" or "constant".
  std::string model;
  /// A degenerate fit was replaced by its fallback.
  bool fallback = false;
};

/// Softmax model over the observed levels (reference = lowest observed
/// level); two observed levels use the logistic model directly.
CategoricalDraws polytomous_impute_column(const Eigen::MatrixXd& x_observed,
                                          std::span<const std::uint32_t> y_observed,
                                          const Eigen::MatrixXd& x_missing, double ridge,
                                          Rng& rng);

/// Cumulative-logit model; falls back to polytomous when the fit does not
/// converge. Two observed levels use the logistic model directly.
CategoricalDraws proportional_odds_impute_column(const Eigen::MatrixXd& x_observed,
                                                 std::span<const std::uint32_t> y_observed,
                                                 const Eigen::MatrixXd& x_missing, double ridge,
                                                 Rng& rng);

struct MiceResult {
  std::vector<ImputationResult> chains;
  ImputationResult pooled;
};

MiceResult mice_impute(const MixedTable& table, const MiceParams& params = {});

/// Combines completed chains of `incomplete`: per missing cell the mean of the
/// chain values (quantitative) or their mode (categorical; ties go to the tied
/// level that appears in the earliest chain).
MixedTable pool(const MixedTable& incomplete, std::span<const MixedTable> chains);

}  // namespace imputekit
