#include "imputekit/chained.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "imputekit/linear_models.hpp"
#include "imputekit/parallel.hpp"

namespace imputekit {

namespace {

using Index = Eigen::Index;

std::vector<Index> rows_where(const MixedTable& table, std::size_t c, bool missing) {
  std::vector<Index> rows;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    if (table.is_missing(r, c) == missing) rows.push_back(static_cast<Index>(r));
  }
  return rows;
}

void set_raw(MixedTable& table, std::size_t r, std::size_t c, double value) {
  if (table.kind(c).is_quantitative()) {
    table.set(r, c, value);
  } else {
    table.set(r, c, Level{static_cast<std::uint32_t>(value)});
  }
}

std::uint32_t draw_class(const Eigen::VectorXd& probabilities, Rng& rng) {
  const double u = rng.uniform() * probabilities.sum();
  double cumulative = 0.0;
  for (Index k = 0; k < probabilities.size(); ++k) {
    cumulative += probabilities[k];
    if (u < cumulative) return static_cast<std::uint32_t>(k);
  }
  // Rounding can leave u at the very top; take the last class with mass.
  for (Index k = probabilities.size() - 1; k > 0; --k) {
    if (probabilities[k] > 0) return static_cast<std::uint32_t>(k);
  }
  return 0;
}

// Observed levels in ascending order, and y re-coded to positions in that list.
struct Compressed {
  std::vector<std::uint32_t> levels;
  std::vector<int> codes;
};

Compressed compress(std::span<const std::uint32_t> y) {
  Compressed out;
  out.levels.assign(y.begin(), y.end());
  std::sort(out.levels.begin(), out.levels.end());
  out.levels.erase(std::unique(out.levels.begin(), out.levels.end()), out.levels.end());
  out.codes.reserve(y.size());
  for (auto v : y) {
    out.codes.push_back(static_cast<int>(
        std::lower_bound(out.levels.begin(), out.levels.end(), v) - out.levels.begin()));
  }
  return out;
}

CategoricalDraws constant_draws(std::uint32_t level, Index count) {
  return {std::vector<std::uint32_t>(static_cast<std::size_t>(count), level), "constant", true};
}

CategoricalDraws logistic_draws(const Eigen::MatrixXd& x_observed, const Compressed& y,
                                const Eigen::MatrixXd& x_missing, double ridge, Rng& rng) {
  const auto model = fit_logistic(x_observed, y.codes, ridge);
  CategoricalDraws out{{}, "logistic", model.fallback};
  out.levels.reserve(static_cast<std::size_t>(x_missing.rows()));
  for (Index i = 0; i < x_missing.rows(); ++i) {
    const double p = model.probability(x_missing.row(i));
    out.levels.push_back(y.levels[rng.uniform() < p ? 1 : 0]);
  }
  return out;
}

CategoricalDraws multinomial_draws(const Eigen::MatrixXd& x_observed, const Compressed& y,
                                   const Eigen::MatrixXd& x_missing, double ridge, Rng& rng) {
  const auto model = fit_multinomial(x_observed, y.codes, y.levels.size(), ridge);
  CategoricalDraws out{{}, "polytomous", model.fallback};
  out.levels.reserve(static_cast<std::size_t>(x_missing.rows()));
  for (Index i = 0; i < x_missing.rows(); ++i) {
    out.levels.push_back(y.levels[draw_class(model.probabilities(x_missing.row(i)), rng)]);
  }
  return out;
}

}  // namespace

Eigen::MatrixXd build_design(const MixedTable& table, std::size_t target, bool drop_collinear) {
  const std::size_t n = table.rows();
  if (table.has_missing()) {
    throw Error(ErrorCode::InvalidArgument, "build_design needs a complete table");
  }
  std::vector<Eigen::VectorXd> kept;       // design columns
  std::vector<Eigen::VectorXd> kept_z;     // their standardized versions
  auto consider = [&](Eigen::VectorXd v) {
    const double mean = v.mean();
    const double sd = std::sqrt((v.array() - mean).square().mean());
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) return;
    Eigen::VectorXd z = (v.array() - mean) / sd;
    if (drop_collinear) {
      for (const auto& other : kept_z) {
        if (std::abs(z.dot(other)) / static_cast<double>(n) > 0.999) return;
      }
    }
    kept.push_back(std::move(v));
    kept_z.push_back(std::move(z));
  };

  for (std::size_t c = 0; c < table.cols(); ++c) {
    if (c == target) continue;
    const auto col = table.column(c);
    if (table.kind(c).is_quantitative()) {
      consider(Eigen::Map<const Eigen::VectorXd>(col.data(), static_cast<Index>(n)));
    } else {
      for (std::size_t level = 1; level < table.kind(c).level_count(); ++level) {
        Eigen::VectorXd indicator(static_cast<Index>(n));
        for (std::size_t r = 0; r < n; ++r) indicator[static_cast<Index>(r)] = col[r] == level;
        consider(std::move(indicator));
      }
    }
  }

  Eigen::MatrixXd design(static_cast<Index>(n), static_cast<Index>(kept.size() + 1));
  design.col(0).setOnes();
  for (std::size_t j = 0; j < kept.size(); ++j) {
    const bool binary = (kept[j].array() == 0.0 || kept[j].array() == 1.0).all();
    design.col(static_cast<Index>(j + 1)) = binary ? kept[j] : kept_z[j];
  }
  return design;
}

std::vector<double> pmm_impute_column(const Eigen::MatrixXd& x_observed,
                                      const Eigen::VectorXd& y_observed,
                                      const Eigen::MatrixXd& x_missing, std::size_t donors,
                                      double ridge, Rng& rng) {
  const auto n_obs = static_cast<std::size_t>(y_observed.size());
  if (donors < 1) throw Error(ErrorCode::InvalidArgument, "pmm_donors must be at least 1");
  if (n_obs < donors || n_obs < 2) {
    throw Error(ErrorCode::TooFewDonors, std::to_string(n_obs) + " observed values for " +
                                             std::to_string(donors) + " donors");
  }
  const Eigen::VectorXd beta = fit_linear_ridge(x_observed, y_observed, ridge);
  const Eigen::VectorXd fitted = x_observed * beta;
  const Eigen::VectorXd predicted = x_missing * beta;

  std::vector<std::size_t> order(n_obs);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(predicted.size()));
  for (Index i = 0; i < predicted.size(); ++i) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    const double target = predicted[i];
    auto closer = [&](std::size_t a, std::size_t b) {
      const double da = std::abs(fitted[static_cast<Index>(a)] - target);
      const double db = std::abs(fitted[static_cast<Index>(b)] - target);
      if (da != db) return da < db;
      return a < b;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(donors), order.end(),
                      closer);
    out.push_back(y_observed[static_cast<Index>(order[rng.below(donors)])]);
  }
  return out;
}

CategoricalDraws polytomous_impute_column(const Eigen::MatrixXd& x_observed,
                                          std::span<const std::uint32_t> y_observed,
                                          const Eigen::MatrixXd& x_missing, double ridge,
                                          Rng& rng) {
  if (y_observed.empty()) throw Error(ErrorCode::TooFewDonors, "no observed level");
  const auto y = compress(y_observed);
  if (y.levels.size() == 1) return constant_draws(y.levels[0], x_missing.rows());
  if (y.levels.size() == 2) return logistic_draws(x_observed, y, x_missing, ridge, rng);
  return multinomial_draws(x_observed, y, x_missing, ridge, rng);
}

CategoricalDraws proportional_odds_impute_column(const Eigen::MatrixXd& x_observed,
                                                 std::span<const std::uint32_t> y_observed,
                                                 const Eigen::MatrixXd& x_missing, double ridge,
                                                 Rng& rng) {
  if (y_observed.empty()) throw Error(ErrorCode::TooFewDonors, "no observed level");
  const auto y = compress(y_observed);
  if (y.levels.size() == 1) return constant_draws(y.levels[0], x_missing.rows());
  if (y.levels.size() == 2) return logistic_draws(x_observed, y, x_missing, ridge, rng);
  const auto model = fit_proportional_odds(x_observed, y.codes, y.levels.size(), ridge);
  if (!model.converged) {
    auto draws = multinomial_draws(x_observed, y, x_missing, ridge, rng);
    draws.fallback = true;
    return draws;
  }
  CategoricalDraws out{{}, "proportional_odds", false};
  out.levels.reserve(static_cast<std::size_t>(x_missing.rows()));
  for (Index i = 0; i < x_missing.rows(); ++i) {
    out.levels.push_back(y.levels[draw_class(model.probabilities(x_missing.row(i)), rng)]);
  }
  return out;
}

MixedTable pool(const MixedTable& incomplete, std::span<const MixedTable> chains) {
  if (chains.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to pool");
  for (const auto& chain : chains) {
    if (!(chain.schema() == incomplete.schema()) || chain.rows() != incomplete.rows()) {
      throw Error(ErrorCode::SchemaMismatch, "pooled tables differ in schema or shape");
    }
  }
  MixedTable out = incomplete;
  const double m = static_cast<double>(chains.size());
  for (std::size_t c = 0; c < incomplete.cols(); ++c) {
    const bool quantitative = incomplete.kind(c).is_quantitative();
    std::vector<std::size_t> votes(incomplete.kind(c).level_count());
    for (std::size_t r = 0; r < incomplete.rows(); ++r) {
      if (!incomplete.is_missing(r, c)) continue;
      for (const auto& chain : chains) {
        if (chain.is_missing(r, c)) {
          throw Error(ErrorCode::SchemaMismatch, "pooled table has a missing cell");
        }
      }
      if (quantitative) {
        double sum = 0.0;
        for (const auto& chain : chains) sum += chain.raw(r, c);
        out.set(r, c, sum / m);
      } else {
        std::fill(votes.begin(), votes.end(), 0);
        for (const auto& chain : chains) ++votes[static_cast<std::size_t>(chain.raw(r, c))];
        const auto top = *std::max_element(votes.begin(), votes.end());
        for (const auto& chain : chains) {
          const auto level = static_cast<std::size_t>(chain.raw(r, c));
          if (votes[level] == top) {
            out.set(r, c, Level{static_cast<std::uint32_t>(level)});
            break;
          }
        }
      }
    }
  }
  return out;
}

MiceResult mice_impute(const MixedTable& table, const MiceParams& params) {
  if (params.m < 1 || params.maxit < 1 || params.pmm_donors < 1 || !(params.ridge >= 0)) {
    throw Error(ErrorCode::InvalidArgument, "mice needs m, maxit, pmm_donors >= 1 and ridge >= 0");
  }
  const std::size_t n = table.rows();
  std::vector<std::size_t> targets;
  std::vector<std::vector<Index>> observed(table.cols()), missing(table.cols());
  for (std::size_t c = 0; c < table.cols(); ++c) {
    const std::size_t miss = table.missing_count(c);
    if (miss == 0) continue;
    if (miss == n) {
      throw Error(ErrorCode::AllMissingColumn, "column '" + table.name(c) + "' has no observed value");
    }
    const std::size_t needed =
        table.kind(c).is_quantitative() ? std::max<std::size_t>(2, params.pmm_donors) : 2;
    if (n - miss < needed) {
      throw Error(ErrorCode::TooFewDonors, "column '" + table.name(c) + "' has " +
                                               std::to_string(n - miss) +
                                               " observed values, needs " + std::to_string(needed));
    }
    targets.push_back(c);
    observed[c] = rows_where(table, c, false);
    missing[c] = rows_where(table, c, true);
  }

  std::vector<ImputationResult> chains(params.m);
  const Rng root(params.seed);
  parallel_for(params.m, params.threads, [&](std::size_t ci) {
    Rng rng = root.child(seed_label({"mice", "chain", std::to_string(ci)}));
    MixedTable current = table;
    for (auto c : targets) {
      const auto col = table.column(c);
      for (auto r : missing[c]) {
        const auto donor = observed[c][rng.below(observed[c].size())];
        set_raw(current, static_cast<std::size_t>(r), c, col[static_cast<std::size_t>(donor)]);
      }
    }

    nlohmann::ordered_json deltas = nlohmann::ordered_json::array();
    nlohmann::ordered_json fallbacks = nlohmann::ordered_json::array();
    for (std::size_t sweep = 1; sweep <= params.maxit && !targets.empty(); ++sweep) {
      const MixedTable before = current;
      for (auto c : targets) {
        try {
          const Eigen::MatrixXd design = build_design(current, c, params.drop_collinear);
          const Eigen::MatrixXd x_obs = design(observed[c], Eigen::all);
          const Eigen::MatrixXd x_mis = design(missing[c], Eigen::all);
          const auto col = table.column(c);
          if (table.kind(c).is_quantitative()) {
            Eigen::VectorXd y(static_cast<Index>(observed[c].size()));
            for (std::size_t i = 0; i < observed[c].size(); ++i) {
              y[static_cast<Index>(i)] = col[static_cast<std::size_t>(observed[c][i])];
            }
            const auto values = pmm_impute_column(x_obs, y, x_mis, params.pmm_donors,
                                                  params.ridge, rng);
            for (std::size_t i = 0; i < values.size(); ++i) {
              current.set(static_cast<std::size_t>(missing[c][i]), c, values[i]);
            }
          } else {
            std::vector<std::uint32_t> y;
            y.reserve(observed[c].size());
            for (auto r : observed[c]) y.push_back(static_cast<std::uint32_t>(col[static_cast<std::size_t>(r)]));
            const auto draws =
                table.kind(c).ordered()
                    ? proportional_odds_impute_column(x_obs, y, x_mis, params.ridge, rng)
                    : polytomous_impute_column(x_obs, y, x_mis, params.ridge, rng);
            if (draws.fallback) {
              fallbacks.push_back(
                  {{"sweep", sweep}, {"column", table.name(c)}, {"model", draws.model}});
            }
            for (std::size_t i = 0; i < draws.levels.size(); ++i) {
              current.set(static_cast<std::size_t>(missing[c][i]), c, Level{draws.levels[i]});
            }
          }
        } catch (const Error& e) {
          throw e.with_context("chain " + std::to_string(ci + 1) + ", sweep " +
                               std::to_string(sweep) + ", column '" + table.name(c) + "'");
        }
      }

      double squared_change = 0.0, squared_new = 0.0;
      std::size_t changed = 0, categorical_cells = 0;
      bool any_quantitative = false;
      for (auto c : targets) {
        const bool quantitative = table.kind(c).is_quantitative();
        any_quantitative = any_quantitative || quantitative;
        for (auto r : missing[c]) {
          const double now = current.raw(static_cast<std::size_t>(r), c);
          const double old = before.raw(static_cast<std::size_t>(r), c);
          if (quantitative) {
            squared_change += (now - old) * (now - old);
            squared_new += now * now;
          } else {
            ++categorical_cells;
            changed += now != old;
          }
        }
      }
      nlohmann::ordered_json entry{{"sweep", sweep}};
      entry["quantitative"] = any_quantitative && squared_new > 0
                                  ? nlohmann::ordered_json(squared_change / squared_new)
                                  : nlohmann::ordered_json(nullptr);
      entry["categorical"] =
          categorical_cells > 0
              ? nlohmann::ordered_json(static_cast<double>(changed) /
                                       static_cast<double>(categorical_cells))
              : nlohmann::ordered_json(nullptr);
      deltas.push_back(std::move(entry));
    }

    auto& result = chains[ci];
    result.table = std::move(current);
    result.method = "mice";
    result.diagnostics["chain"] = ci + 1;
    result.diagnostics["sweep_deltas"] = std::move(deltas);
    result.diagnostics["fallbacks"] = std::move(fallbacks);
  });

  MiceResult out;
  std::vector<MixedTable> tables;
  tables.reserve(chains.size());
  for (const auto& chain : chains) tables.push_back(chain.table);
  out.pooled.table = pool(table, tables);
  out.pooled.method = "mice";
  auto& d = out.pooled.diagnostics;
  d["m"] = params.m;
  d["maxit"] = params.maxit;
  d["pmm_donors"] = params.pmm_donors;
  d["ridge"] = params.ridge;
  d["drop_collinear"] = params.drop_collinear;
  d["cells_imputed"] = table.missing_count();
  d["chains"] = nlohmann::ordered_json::array();
  for (const auto& chain : chains) d["chains"].push_back(chain.diagnostics);
  out.chains = std::move(chains);
  return out;
}

}  // namespace imputekit
