#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace imputekit {

// Regression models behind the chained-equations imputer. Every design
// matrix passed here has the intercept (a column of ones) in column 0; the
// ridge penalty never applies to it.

/// Minimizes ||y - X b||^2 + ridge * ||b[1:]||^2. With ridge == 0 a
/// rank-deficient X raises SingularSystem.
Eigen::VectorXd fit_linear_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 double ridge);

struct FitControl {
  std::size_t max_iterations = 25;
  double gradient_tolerance = 1e-8;
};

/// Binary logistic regression fitted by penalized IRLS. When only one class
/// is present, or the fit produces non-finite values, the model falls back to
/// a smoothed constant probability (n1 + 0.5) / (n + 1).
struct LogisticModel {
  Eigen::VectorXd coefficients;
  bool fallback = false;
  double constant_probability = 0.5;
  bool converged = false;
  std::size_t iterations = 0;

  /// P(y = 1 | x).
  double probability(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

LogisticModel fit_logistic(const Eigen::MatrixXd& x, std::span<const int> y, double ridge,
                           const FitControl& control = {});

/// Multinomial (softmax) regression with class 0 as reference, fitted by
/// penalized Newton steps. coefficients is d x (classes - 1).
struct MultinomialModel {
  Eigen::MatrixXd coefficients;
  std::size_t classes = 0;
  bool fallback = false;
  Eigen::VectorXd constant_probabilities;
  bool converged = false;
  std::size_t iterations = 0;

  Eigen::VectorXd probabilities(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

/// y holds class indices in [0, classes).
MultinomialModel fit_multinomial(const Eigen::MatrixXd& x, std::span<const int> y,
                                 std::size_t classes, double ridge,
                                 const FitControl& control = {});

/// Cumulative-logit model P(y <= k | x) = logistic(thresholds[k] - x[1:] . slopes)
/// with strictly increasing thresholds. Column 0 of the design is ignored
/// (the thresholds play the intercept's role).
struct ProportionalOddsModel {
  Eigen::VectorXd thresholds;  // classes - 1 entries
  Eigen::VectorXd slopes;      // d - 1 entries
  std::size_t classes = 0;
  bool converged = false;
  std::size_t iterations = 0;

  Eigen::VectorXd probabilities(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

ProportionalOddsModel fit_proportional_odds(const Eigen::MatrixXd& x, std::span<const int> y,
                                            std::size_t classes, double ridge,
                                            const FitControl& control = {});

/// Smoothed class frequencies (n_k + 0.5) / (n + classes / 2).
Eigen::VectorXd smoothed_frequencies(std::span<const int> y, std::size_t classes);

}  // namespace imputekit
