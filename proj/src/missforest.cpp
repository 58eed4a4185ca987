#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "imputekit/forest.hpp"

namespace imputekit {

namespace {

using Json = nlohmann::ordered_json;

// Per-column out-of-bag result of one iteration.
struct ColumnOob {
  std::size_t column = 0;
  OobComponent component;
};

struct Pooled {
  OobEstimate estimate;
  Json columns = Json::array();
};

double population_variance(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size());
}

Pooled pool_oob(const MixedTable& table, const std::vector<ColumnOob>& parts) {
  Pooled out;
  std::vector<double> truth;
  double squared_error = 0.0;
  std::size_t classified = 0, misclassified = 0;
  for (const auto& part : parts) {
    const auto& comp = part.component;
    Json entry{{"column", table.name(part.column)}, {"evaluated", comp.evaluated}};
    if (table.kind(part.column).is_quantitative()) {
      truth.insert(truth.end(), comp.truth.begin(), comp.truth.end());
      squared_error += comp.squared_error;
      const double var = comp.evaluated > 0 ? population_variance(comp.truth) : 0.0;
      if (comp.evaluated > 0 && var > 0) {
        entry["nrmse"] = std::sqrt(comp.squared_error / static_cast<double>(comp.evaluated) / var);
      } else {
        entry["nrmse"] = nullptr;
        if (comp.evaluated > 0) entry["note"] = "VarianceZero";
      }
    } else {
      classified += comp.evaluated;
      misclassified += comp.misclassified;
      entry["pfc"] = comp.evaluated > 0 ? Json(static_cast<double>(comp.misclassified) /
                                               static_cast<double>(comp.evaluated))
                                         : Json(nullptr);
    }
    out.columns.push_back(std::move(entry));
  }
  if (!truth.empty()) {
    const double var = population_variance(truth);
    if (var > 0) {
      out.estimate.nrmse = std::sqrt(squared_error / static_cast<double>(truth.size()) / var);
    } else {
      out.estimate.notes.push_back("VarianceZero");
    }
  }
  if (classified > 0) {
    out.estimate.pfc = static_cast<double>(misclassified) / static_cast<double>(classified);
  }
  return out;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

MissForestResult missforest_impute(const MixedTable& table, const ForestParams& params) {
  const std::size_t n = table.rows();
  const std::size_t p = table.cols();
  if (params.ntree < 1 || params.max_iter < 1) {
    throw Error(ErrorCode::InvalidArgument, "ntree and max_iter must be at least 1");
  }
  if (params.mtry != 0 && params.mtry > p - 1) {
    throw Error(ErrorCode::InvalidArgument, "mtry must lie in [1, " + std::to_string(p - 1) + "]");
  }
  std::vector<std::vector<std::size_t>> observed(p), missing(p);
  for (std::size_t c = 0; c < p; ++c) {
    for (std::size_t r = 0; r < n; ++r) (table.is_missing(r, c) ? missing : observed)[c].push_back(r);
    if (n > 0 && observed[c].empty()) {
      throw Error(ErrorCode::AllMissingColumn, "column '" + table.name(c) + "' has no observed value");
    }
  }

  // Start from column means and modes.
  MixedTable initial = table;
  bool quantitative_missing = false, categorical_missing = false;
  for (std::size_t c = 0; c < p; ++c) {
    if (missing[c].empty()) continue;
    const auto col = table.column(c);
    if (table.kind(c).is_quantitative()) {
      quantitative_missing = true;
      double sum = 0.0;
      for (auto r : observed[c]) sum += col[r];
      const double mean = sum / static_cast<double>(observed[c].size());
      for (auto r : missing[c]) initial.set(r, c, mean);
    } else {
      categorical_missing = true;
      std::vector<std::size_t> counts(table.kind(c).level_count(), 0);
      for (auto r : observed[c]) ++counts[static_cast<std::size_t>(col[r])];
      const auto mode = static_cast<std::uint32_t>(std::max_element(counts.begin(), counts.end()) -
                                                   counts.begin());
      for (auto r : missing[c]) initial.set(r, c, Level{mode});
    }
  }

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return missing[a].size() < missing[b].size();
  });
  std::vector<std::size_t> targets;
  for (auto c : order) {
    if (!missing[c].empty()) targets.push_back(c);
  }

  const Rng root(params.seed);
  // Refits every column in `columns` against `work`, overwriting its missing cells.
  auto sweep = [&](MixedTable& work, std::size_t iteration, const std::vector<std::size_t>& columns) {
    std::vector<ColumnOob> parts;
    for (auto c : columns) {
      TrainingData data;
      std::vector<std::size_t> predictors;
      for (std::size_t j = 0; j < p; ++j) {
        if (j == c) continue;
        predictors.push_back(j);
        const auto col = work.column(j);
        std::vector<double> values;
        values.reserve(observed[c].size());
        for (auto r : observed[c]) values.push_back(col[r]);
        data.x.push_back(std::move(values));
        data.x_levels.push_back(work.kind(j).level_count());
      }
      for (auto r : observed[c]) data.y.push_back(work.raw(r, c));
      data.y_levels = work.kind(c).level_count();

      const Forest forest = fit_forest(
          data, params,
          root.child(seed_label({"missforest", std::to_string(iteration), std::to_string(c)})));
      parts.push_back({c, oob_error(forest, data)});

      std::vector<double> row(predictors.size());
      for (auto r : missing[c]) {
        for (std::size_t j = 0; j < predictors.size(); ++j) row[j] = work.raw(r, predictors[j]);
        const double value = *predict_forest(forest, row);
        if (work.kind(c).is_quantitative()) {
          work.set(r, c, value);
        } else {
          work.set(r, c, Level{static_cast<std::uint32_t>(value)});
        }
      }
    }
    return pool_oob(work, parts);
  };

  MissForestResult out;
  Json delta_log = Json::array();
  std::string stopped_by;
  Pooled accepted_oob;
  std::size_t returned_iteration = 0;
  MixedTable accepted = initial;

  if (targets.empty()) {
    MixedTable work = initial;
    accepted_oob = sweep(work, 0, order);
    stopped_by = "complete";
  } else {
    StoppingDeltas old{std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::infinity()};
    for (std::size_t iteration = 1;; ++iteration) {
      MixedTable next = accepted;
      Pooled oob = sweep(next, iteration, targets);
      out.iterations = iteration;

      StoppingDeltas deltas;
      double change = 0.0, scale = 0.0;
      std::size_t changed = 0, cells = 0;
      for (auto c : targets) {
        for (auto r : missing[c]) {
          const double now = next.raw(r, c), before = accepted.raw(r, c);
          if (table.kind(c).is_quantitative()) {
            change += (now - before) * (now - before);
            scale += now * now;
          } else {
            ++cells;
            changed += now != before;
          }
        }
      }
      if (quantitative_missing) {
        deltas.quantitative =
            scale > 0 ? change / scale : (change > 0 ? std::numeric_limits<double>::infinity() : 0.0);
      }
      if (categorical_missing) {
        deltas.categorical = static_cast<double>(changed) / static_cast<double>(cells);
      }
      out.deltas.push_back(deltas);
      delta_log.push_back({{"iteration", iteration},
                           {"quantitative", optional_json(deltas.quantitative)},
                           {"categorical", optional_json(deltas.categorical)}});

      const bool decreased = iteration == 1 ||
                             (deltas.quantitative && *deltas.quantitative < *old.quantitative) ||
                             (deltas.categorical && *deltas.categorical < *old.categorical);
      if (!decreased) {
        stopped_by = "increase";
        break;
      }
      accepted = std::move(next);
      accepted_oob = std::move(oob);
      returned_iteration = iteration;
      old = deltas;
      if (iteration == params.max_iter) {
        stopped_by = "max_iter";
        break;
      }
    }
  }

  out.oob = accepted_oob.estimate;
  out.result.table = std::move(accepted);
  out.result.method = "missforest";
  auto& d = out.result.diagnostics;
  d["ntree"] = params.ntree;
  d["mtry"] = params.mtry == 0 ? default_mtry(p > 0 ? p - 1 : 0) : params.mtry;
  d["max_iter"] = params.max_iter;
  d["iterations"] = out.iterations;
  d["returned_iteration"] = returned_iteration;
  d["stopped_by"] = stopped_by;
  d["deltas"] = std::move(delta_log);
  d["cells_imputed"] = table.missing_count();
  d["oob"] = {{"nrmse", optional_json(out.oob.nrmse)},
              {"pfc", optional_json(out.oob.pfc)},
              {"notes", out.oob.notes},
              {"columns", accepted_oob.columns}};
  return out;
}

}  // namespace imputekit
