#include "imputekit/linear_models.hpp"

#include <cmath>
#include <vector>

#include "imputekit/error.hpp"

namespace imputekit {

namespace {

double log1p_exp(double eta) { return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double sigmoid(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

// Converged when the gradient is small or the objective stopped moving at
// machine precision (large-scale predictors keep the raw gradient norm from
// ever reaching an absolute 1e-8).
bool has_converged(double gradient_norm, double previous, double current, const FitControl& c) {
  if (gradient_norm < c.gradient_tolerance) return true;
  return std::abs(current - previous) <= 1e-12 * (std::abs(current) + 1e-12);
}

}  // namespace

Eigen::VectorXd fit_linear_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 double ridge) {
  const auto n = x.rows();
  const auto d = x.cols();
  if (n != y.size() || n < 2 || d < 1) {
    throw Error(ErrorCode::InvalidArgument, "fit_linear_ridge needs matching X and y with >= 2 rows");
  }
  if (ridge < 0) throw Error(ErrorCode::InvalidArgument, "ridge must be nonnegative");
  if (ridge == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < d) throw Error(ErrorCode::SingularSystem, "design matrix is rank deficient");
    return qr.solve(y);
  }
  // Augmented least squares [X; sqrt(ridge) * P] b = [y; 0], P = diag(0, 1, ..., 1).
  Eigen::MatrixXd augmented = Eigen::MatrixXd::Zero(n + d - 1, d);
  augmented.topRows(n) = x;
  const double s = std::sqrt(ridge);
  for (Eigen::Index j = 1; j < d; ++j) augmented(n + j - 1, j) = s;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + d - 1);
  rhs.head(n) = y;
  return augmented.colPivHouseholderQr().solve(rhs);
}

Eigen::VectorXd smoothed_frequencies(std::span<const int> y, std::size_t classes) {
  Eigen::VectorXd freq = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(classes), 0.5);
  for (int v : y) freq[v] += 1.0;
  return freq / (static_cast<double>(y.size()) + 0.5 * static_cast<double>(classes));
}

// --- logistic ----------------------------------------------------------------

double LogisticModel::probability(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (fallback) return constant_probability;
  return sigmoid(x.dot(coefficients));
}

LogisticModel fit_logistic(const Eigen::MatrixXd& x, std::span<const int> y, double ridge,
                           const FitControl& control) {
  const auto n = x.rows();
  const auto d = x.cols();
  if (static_cast<std::size_t>(n) != y.size() || n == 0) {
    throw Error(ErrorCode::InvalidArgument, "fit_logistic needs matching X and y");
  }
  LogisticModel model;
  std::size_t n1 = 0;
  for (int v : y) n1 += (v == 1);
  model.constant_probability = (static_cast<double>(n1) + 0.5) / (static_cast<double>(n) + 1.0);
  if (n1 == 0 || n1 == static_cast<std::size_t>(n)) {
    model.fallback = true;
    return model;
  }

  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv[i] = y[static_cast<std::size_t>(i)];
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(d, ridge);
  penalty[0] = 0.0;

  auto objective = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = x * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) ll += yv[i] * eta[i] - log1p_exp(eta[i]);
    return ll - 0.5 * (penalty.array() * beta.array().square()).sum();
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  double current = objective(beta);
  for (std::size_t it = 1; it <= control.max_iterations; ++it) {
    model.iterations = it;
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd p(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p[i] = sigmoid(eta[i]);
      w[i] = std::max(p[i] * (1.0 - p[i]), 1e-10);
    }
    const Eigen::VectorXd gradient = x.transpose() * (yv - p) - penalty.cwiseProduct(beta);
    if (gradient.norm() < control.gradient_tolerance) {
      model.converged = true;
      break;
    }
    Eigen::MatrixXd information = x.transpose() * w.asDiagonal() * x;
    information.diagonal() += penalty;
    const Eigen::VectorXd step = information.ldlt().solve(gradient);
    if (!step.allFinite()) break;

    double scale = 1.0;
    Eigen::VectorXd candidate = beta + step;
    double next = objective(candidate);
    for (int halving = 0; halving < 30 && !(next >= current); ++halving) {
      scale *= 0.5;
      candidate = beta + scale * step;
      next = objective(candidate);
    }
    if (!(next >= current)) {
      // No ascent possible along the Newton direction: at the optimum to precision.
      model.converged = true;
      break;
    }
    beta = candidate;
    const double previous = current;
    current = next;
    if (has_converged(gradient.norm(), previous, current, control)) {
      model.converged = true;
      break;
    }
  }
  if (!all_finite(beta)) {
    model.fallback = true;
    return model;
  }
  model.coefficients = beta;
  return model;
}

// --- multinomial ---------------------------------------------------------------

Eigen::VectorXd MultinomialModel::probabilities(
    const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (fallback) return constant_probabilities;
  const auto k = static_cast<Eigen::Index>(classes);
  Eigen::VectorXd eta(k);
  eta[0] = 0.0;
  eta.tail(k - 1) = (x * coefficients).transpose();
  const double top = eta.maxCoeff();
  Eigen::VectorXd p = (eta.array() - top).exp();
  return p / p.sum();
}

MultinomialModel fit_multinomial(const Eigen::MatrixXd& x, std::span<const int> y,
                                 std::size_t classes, double ridge, const FitControl& control) {
  const auto n = x.rows();
  const auto d = x.cols();
  if (static_cast<std::size_t>(n) != y.size() || n == 0 || classes < 1) {
    throw Error(ErrorCode::InvalidArgument, "fit_multinomial needs matching X and y");
  }
  MultinomialModel model;
  model.classes = classes;
  model.constant_probabilities = smoothed_frequencies(y, classes);
  std::vector<std::size_t> counts(classes, 0);
  for (int v : y) ++counts[static_cast<std::size_t>(v)];
  std::size_t present = 0;
  for (auto c : counts) present += (c > 0);
  if (present < 2) {
    model.fallback = true;
    return model;
  }

  const Eigen::Index km1 = static_cast<Eigen::Index>(classes) - 1;
  const Eigen::Index dim = km1 * d;
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(dim, ridge);
  for (Eigen::Index k = 0; k < km1; ++k) penalty[k * d] = 0.0;

  auto probabilities_for = [&](const Eigen::VectorXd& theta) {
    const Eigen::Map<const Eigen::MatrixXd> b(theta.data(), d, km1);
    Eigen::MatrixXd eta(n, km1 + 1);
    eta.col(0).setZero();
    eta.rightCols(km1) = x * b;
    Eigen::MatrixXd p(n, km1 + 1);
    Eigen::VectorXd log_norm(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double top = eta.row(i).maxCoeff();
      const Eigen::RowVectorXd e = (eta.row(i).array() - top).exp();
      const double s = e.sum();
      p.row(i) = e / s;
      log_norm[i] = top + std::log(s);
    }
    return std::make_tuple(eta, p, log_norm);
  };
  auto objective = [&](const Eigen::VectorXd& theta) {
    auto [eta, p, log_norm] = probabilities_for(theta);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) ll += eta(i, y[static_cast<std::size_t>(i)]) - log_norm[i];
    return ll - 0.5 * (penalty.array() * theta.array().square()).sum();
  };

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  double current = objective(theta);
  for (std::size_t it = 1; it <= control.max_iterations; ++it) {
    model.iterations = it;
    auto [eta, p, log_norm] = probabilities_for(theta);
    Eigen::VectorXd gradient(dim);
    for (Eigen::Index k = 0; k < km1; ++k) {
      Eigen::VectorXd residual(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        residual[i] = (y[static_cast<std::size_t>(i)] == k + 1 ? 1.0 : 0.0) - p(i, k + 1);
      }
      gradient.segment(k * d, d) = x.transpose() * residual;
    }
    gradient -= penalty.cwiseProduct(theta);
    if (gradient.norm() < control.gradient_tolerance) {
      model.converged = true;
      break;
    }
    Eigen::MatrixXd information(dim, dim);
    for (Eigen::Index k = 0; k < km1; ++k) {
      for (Eigen::Index l = k; l < km1; ++l) {
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          w[i] = p(i, k + 1) * ((k == l ? 1.0 : 0.0) - p(i, l + 1));
        }
        const Eigen::MatrixXd block = x.transpose() * w.asDiagonal() * x;
        information.block(k * d, l * d, d, d) = block;
        if (l != k) information.block(l * d, k * d, d, d) = block.transpose();
      }
    }
    information.diagonal() += penalty;
    information.diagonal().array() += 1e-10;
    const Eigen::VectorXd step = information.ldlt().solve(gradient);
    if (!step.allFinite()) break;

    double scale = 1.0;
    Eigen::VectorXd candidate = theta + step;
    double next = objective(candidate);
    for (int halving = 0; halving < 30 && !(next >= current); ++halving) {
      scale *= 0.5;
      candidate = theta + scale * step;
      next = objective(candidate);
    }
    if (!(next >= current)) {
      model.converged = true;
      break;
    }
    theta = candidate;
    const double previous = current;
    current = next;
    if (has_converged(gradient.norm(), previous, current, control)) {
      model.converged = true;
      break;
    }
  }
  if (!theta.allFinite()) {
    model.fallback = true;
    return model;
  }
  model.coefficients = Eigen::Map<const Eigen::MatrixXd>(theta.data(), d, km1);
  return model;
}

// --- proportional odds ---------------------------------------------------------

Eigen::VectorXd ProportionalOddsModel::probabilities(
    const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  const auto k = static_cast<Eigen::Index>(classes);
  const double eta = x.tail(x.size() - 1).dot(slopes);
  Eigen::VectorXd p(k);
  double lower = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double upper = j + 1 < k ? sigmoid(thresholds[j] - eta) : 1.0;
    p[j] = std::max(upper - lower, 0.0);
    lower = upper;
  }
  return p / p.sum();
}

ProportionalOddsModel fit_proportional_odds(const Eigen::MatrixXd& x, std::span<const int> y,
                                            std::size_t classes, double ridge,
                                            const FitControl& control) {
  const auto n = x.rows();
  const auto q = x.cols() - 1;
  if (static_cast<std::size_t>(n) != y.size() || n == 0 || classes < 2 || q < 0) {
    throw Error(ErrorCode::InvalidArgument, "fit_proportional_odds needs matching X and y");
  }
  const Eigen::Index m = static_cast<Eigen::Index>(classes) - 1;  // thresholds
  const Eigen::Index dim = m + q;
  const Eigen::MatrixXd z = x.rightCols(q);

  ProportionalOddsModel model;
  model.classes = classes;

  // Start from the marginal cumulative logits with zero slopes.
  const Eigen::VectorXd freq = smoothed_frequencies(y, classes);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(dim);
  double cumulative = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    cumulative += freq[j];
    phi[j] = std::log(cumulative / (1.0 - cumulative));
  }

  auto feasible = [&](const Eigen::VectorXd& v) {
    for (Eigen::Index j = 1; j < m; ++j) {
      if (!(v[j] > v[j - 1])) return false;
    }
    return v.allFinite();
  };
  // F at the lower/upper cut of observation i.
  auto cut = [&](const Eigen::VectorXd& v, Eigen::Index j, double eta, double infinite_value) {
    if (j < 0 || j >= m) return infinite_value;
    return sigmoid(v[j] - eta);
  };
  auto objective = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd eta = z * v.tail(q);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index yi = y[static_cast<std::size_t>(i)];
      const double upper = cut(v, yi, eta[i], 1.0);
      const double lower = cut(v, yi - 1, eta[i], 0.0);
      ll += std::log(std::max(upper - lower, 1e-300));
    }
    return ll - 0.5 * ridge * v.tail(q).squaredNorm();
  };

  double current = objective(phi);
  for (std::size_t it = 1; it <= control.max_iterations; ++it) {
    model.iterations = it;
    const Eigen::VectorXd eta = z * phi.tail(q);
    Eigen::VectorXd gradient = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd ja(dim), jb(dim);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index yi = y[static_cast<std::size_t>(i)];
      const bool has_upper = yi < m;
      const bool has_lower = yi > 0;
      const double fa = has_upper ? sigmoid(phi[yi] - eta[i]) : 1.0;
      const double fb = has_lower ? sigmoid(phi[yi - 1] - eta[i]) : 0.0;
      const double prob = std::max(fa - fb, 1e-300);
      const double da = has_upper ? fa * (1.0 - fa) : 0.0;  // density at upper cut
      const double db = has_lower ? fb * (1.0 - fb) : 0.0;
      const double dda = has_upper ? da * (1.0 - 2.0 * fa) : 0.0;
      const double ddb = has_lower ? db * (1.0 - 2.0 * fb) : 0.0;
      const double ga = da / prob;
      const double gb = -db / prob;
      const double gaa = dda / prob - ga * ga;
      const double gbb = -ddb / prob - gb * gb;
      const double gab = da * db / (prob * prob);

      ja.setZero();
      jb.setZero();
      if (has_upper) ja[yi] = 1.0;
      if (has_lower) jb[yi - 1] = 1.0;
      ja.tail(q) = -z.row(i).transpose();
      jb.tail(q) = -z.row(i).transpose();
      if (!has_upper) ja.setZero();
      if (!has_lower) jb.setZero();

      gradient += ga * ja + gb * jb;
      hessian.noalias() += gaa * ja * ja.transpose() + gbb * jb * jb.transpose() +
                           gab * (ja * jb.transpose() + jb * ja.transpose());
    }
    gradient.tail(q) -= ridge * phi.tail(q);
    hessian.bottomRightCorner(q, q).diagonal().array() -= ridge;
    if (!gradient.allFinite() || !hessian.allFinite()) break;
    if (gradient.norm() < control.gradient_tolerance) {
      model.converged = true;
      break;
    }
    Eigen::MatrixXd information = -hessian;
    information.diagonal().array() += 1e-10;
    const Eigen::VectorXd step = information.ldlt().solve(gradient);
    if (!step.allFinite()) break;

    double scale = 1.0;
    Eigen::VectorXd candidate = phi + step;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      if (feasible(candidate)) {
        const double next = objective(candidate);
        if (next >= current) {
          const double previous = current;
          current = next;
          phi = candidate;
          accepted = true;
          if (has_converged(gradient.norm(), previous, current, control)) model.converged = true;
          break;
        }
      }
      scale *= 0.5;
      candidate = phi + scale * step;
    }
    if (!accepted || model.converged) {
      model.converged = model.converged || (!accepted && feasible(phi));
      break;
    }
  }
  model.thresholds = phi.head(m);
  model.slopes = phi.tail(q);
  if (!feasible(phi)) model.converged = false;
  return model;
}

}  // namespace imputekit
