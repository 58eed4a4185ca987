#include <doctest.h>

#include <cmath>
#include <vector>

#include "imputekit/error.hpp"
#include "imputekit/linear_models.hpp"

using namespace imputekit;

namespace {

Eigen::MatrixXd with_intercept(const std::vector<std::vector<double>>& columns) {
  const auto n = static_cast<Eigen::Index>(columns.front().size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(columns.size()) + 1);
  x.col(0).setOnes();
  for (std::size_t j = 0; j < columns.size(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i) x(i, static_cast<Eigen::Index>(j) + 1) = columns[j][i];
  }
  return x;
}

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Penalized logistic fit by plain gradient descent on the mean loss.
Eigen::VectorXd logistic_gradient_descent(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                          double ridge, int steps, double rate) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(x.cols());
  for (int s = 0; s < steps; ++s) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      g -= x.row(i).transpose() * (y[static_cast<std::size_t>(i)] - sigmoid(x.row(i).dot(b)));
    }
    for (Eigen::Index j = 1; j < x.cols(); ++j) g(j) += ridge * b(j);
    b -= rate * g;
  }
  return b;
}

}  // namespace

TEST_CASE("ridge regression") {
  SUBCASE("exact line") {
    const auto x = with_intercept({{1, 2, 3, 4, 5}});
    Eigen::VectorXd y(5);
    y << 2, 4, 6, 8, 10;
    const auto b = fit_linear_ridge(x, y, 0.0);
    CHECK(std::abs(b(0)) < 1e-9);
    CHECK(std::abs(b(1) - 2.0) < 1e-9);
  }
  SUBCASE("constant response") {
    const auto x = with_intercept({{1, 2, 3, 4}, {0, 5, 1, 2}});
    Eigen::VectorXd y = Eigen::VectorXd::Constant(4, 3.5);
    const auto b = fit_linear_ridge(x, y, 1e-5);
    CHECK(std::abs(b(0) - 3.5) < 1e-9);
    CHECK(std::abs(b(1)) < 1e-9);
    CHECK(std::abs(b(2)) < 1e-9);
  }
  SUBCASE("duplicated predictor matches the normal-equations oracle") {
    const std::vector<double> c{0.5, 1.7, 2.2, 3.9, 4.1, 6.0};
    const auto x = with_intercept({c, c, {1, 0, 1, 1, 0, 0}});
    Eigen::VectorXd y(6);
    y << 1.0, 2.5, 2.9, 5.2, 5.0, 7.7;
    const double ridge = 1e-5;
    const auto b = fit_linear_ridge(x, y, ridge);
    CHECK(b.allFinite());
    Eigen::MatrixXd a = x.transpose() * x;
    for (Eigen::Index j = 1; j < a.rows(); ++j) a(j, j) += ridge;
    const Eigen::VectorXd oracle = a.fullPivLu().solve(x.transpose() * y);
    CHECK(((x * b) - (x * oracle)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(b(1) - b(2)) < 1e-6);
  }
  SUBCASE("rank deficiency without ridge") {
    const std::vector<double> c{1, 2, 3, 4};
    const auto x = with_intercept({c, c});
    Eigen::VectorXd y(4);
    y << 1, 2, 3, 5;
    try {
      fit_linear_ridge(x, y, 0.0);
      FAIL("expected SingularSystem");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SingularSystem);
    }
  }
}

TEST_CASE("logistic regression") {
  SUBCASE("balanced response independent of x") {
    const auto x = with_intercept({{-1, 1, -1, 1, -2, 2, -2, 2}});
    const std::vector<int> y{0, 0, 1, 1, 0, 0, 1, 1};
    const auto m = fit_logistic(x, y, 1e-5);
    CHECK_FALSE(m.fallback);
    CHECK(m.converged);
    CHECK(m.coefficients.cwiseAbs().maxCoeff() < 1e-4);
  }
  SUBCASE("agrees with gradient descent on overlapping data") {
    const auto x = with_intercept({{-2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5, 2, 2.5}});
    const std::vector<int> y{0, 0, 1, 0, 0, 1, 0, 1, 1, 1};
    const auto m = fit_logistic(x, y, 1e-5);
    const auto oracle = logistic_gradient_descent(x, y, 1e-5, 200000, 0.05);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      CHECK(std::abs(m.probability(x.row(i)) - sigmoid(x.row(i).dot(oracle))) < 1e-4);
    }
  }
  SUBCASE("separable data stays finite and classifies the training rows") {
    const auto x = with_intercept({{-2, -1, -0.5, 0.5, 1, 2}});
    const std::vector<int> y{0, 0, 0, 1, 1, 1};
    const auto m = fit_logistic(x, y, 1e-5);
    CHECK(m.coefficients.allFinite());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      CHECK((m.probability(x.row(i)) > 0.5) == (x(i, 1) > 0));
    }
  }
  SUBCASE("one class falls back to a smoothed constant") {
    const auto x = with_intercept({{1, 2, 3, 4}});
    const std::vector<int> zeros{0, 0, 0, 0};
    const auto m = fit_logistic(x, zeros, 1e-5);
    CHECK(m.fallback);
    CHECK(m.probability(x.row(0)) == doctest::Approx(0.5 / 5.0));
    const std::vector<int> ones{1, 1, 1, 1};
    CHECK(fit_logistic(x, ones, 1e-5).probability(x.row(2)) == doctest::Approx(4.5 / 5.0));
  }
}

TEST_CASE("multinomial regression") {
  const auto x = with_intercept({{-2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5, 2, 2.5, 3, -3}});
  SUBCASE("two classes reduce to the logistic model") {
    const std::vector<int> y{0, 0, 1, 0, 0, 1, 0, 1, 1, 1, 1, 0};
    const auto logistic = fit_logistic(x, y, 1e-5);
    const auto softmax = fit_multinomial(x, y, 2, 1e-5);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const auto p = softmax.probabilities(x.row(i));
      CHECK(std::abs(p(1) - logistic.probability(x.row(i))) < 1e-8);
      CHECK(std::abs(p.sum() - 1.0) < 1e-12);
    }
  }
  SUBCASE("gradient vanishes at the fit") {
    const std::vector<int> y{0, 0, 1, 2, 0, 1, 2, 1, 2, 2, 1, 0};
    const double ridge = 1e-3;
    const auto m = fit_multinomial(x, y, 3, ridge);
    CHECK(m.converged);
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(x.cols(), 2);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const auto p = m.probabilities(x.row(i));
      for (int k = 1; k < 3; ++k) {
        const double indicator = y[static_cast<std::size_t>(i)] == k ? 1.0 : 0.0;
        grad.col(k - 1) += x.row(i).transpose() * (indicator - p(k));
      }
    }
    for (Eigen::Index j = 1; j < x.cols(); ++j) grad.row(j) -= ridge * m.coefficients.row(j);
    CHECK(grad.cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("proportional odds") {
  const auto x = with_intercept({{-2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5, 2, 2.5, 3, -3}});
  SUBCASE("two levels reduce to the logistic model") {
    const std::vector<int> y{0, 0, 1, 0, 0, 1, 0, 1, 1, 1, 1, 0};
    const auto logistic = fit_logistic(x, y, 1e-5);
    const auto po = fit_proportional_odds(x, y, 2, 1e-5);
    CHECK(po.converged);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      CHECK(std::abs(po.probabilities(x.row(i))(1) - logistic.probability(x.row(i))) < 1e-6);
    }
  }
  SUBCASE("thresholds increase and probabilities are a distribution") {
    const std::vector<int> y{0, 0, 0, 1, 1, 1, 2, 1, 2, 3, 3, 0};
    const auto po = fit_proportional_odds(x, y, 4, 1e-5);
    CHECK(po.converged);
    REQUIRE(po.thresholds.size() == 3);
    for (Eigen::Index k = 1; k < po.thresholds.size(); ++k) {
      CHECK(po.thresholds(k) > po.thresholds(k - 1));
    }
    CHECK(po.slopes(0) > 0.0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const auto p = po.probabilities(x.row(i));
      CHECK(std::abs(p.sum() - 1.0) < 1e-12);
      CHECK(p.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("smoothed frequencies") {
  const std::vector<int> y{0, 0, 1};
  const auto f = smoothed_frequencies(y, 3);
  CHECK(f(0) == doctest::Approx(2.5 / 4.5));
  CHECK(f(2) == doctest::Approx(0.5 / 4.5));
}
