#include <algorithm>
#include <chrono>
#include <numeric>

#include "imputekit/bench.hpp"

namespace imputekit {

Json missingness_profile(const MixedTable& table) {
  const auto miss = column_missingness(table);
  std::vector<std::size_t> order(table.cols());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return miss.per_column[a] < miss.per_column[b];
  });
  std::vector<std::string> names;
  for (auto c : order) names.push_back(table.name(c));
  const auto cumulative = cumulative_missingness(table, names);
  Json columns = Json::array();
  for (std::size_t i = 0; i < order.size(); ++i) {
    columns.push_back({{"column", names[i]},
                       {"missing_fraction", miss.per_column[order[i]]},
                       {"cumulative_missing_fraction", cumulative[i]}});
  }
  return {{"rows", table.rows()},
          {"cols", table.cols()},
          {"missing_fraction", miss.overall},
          {"columns", columns}};
}

PipelineParams pipeline_params_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "pipeline parameters must be a JSON object");
  static const char* const known[] = {"seed",           "key",          "threshold", "repetitions",
                                      "keep_repetition", "include_timing", "forest"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw Error(ErrorCode::InvalidArgument, "unknown pipeline parameter '" + key + "'");
    }
  }
  if (!j.contains("seed")) throw Error(ErrorCode::InvalidArgument, "pipeline parameters need a seed");
  PipelineParams p;
  try {
    const auto seed = j.at("seed").get<std::uint64_t>();
    p.forest = forest_params_from_json(j.value("forest", Json::object()), seed);
    if (j.contains("key") && !j.at("key").is_null()) p.key = j.at("key").get<std::string>();
    p.threshold = j.value("threshold", p.threshold);
    p.repetitions = j.value("repetitions", p.repetitions);
    if (j.contains("keep_repetition") && !j.at("keep_repetition").is_null()) {
      p.keep_repetition = j.at("keep_repetition").get<std::size_t>();
    }
    p.include_timing = j.value("include_timing", p.include_timing);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("pipeline parameters: ") + e.what());
  }
  if (!(p.threshold >= 0.0 && p.threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "threshold must lie in [0, 1]");
  }
  return p;
}

PipelineResult run_pipeline(const MixedTable& input, const PipelineParams& params) {
  if (params.repetitions < 1) throw Error(ErrorCode::InvalidArgument, "repetitions must be at least 1");
  if (params.keep_repetition && *params.keep_repetition >= params.repetitions) {
    throw Error(ErrorCode::InvalidArgument, "kept repetition must be below the repetition count");
  }
  PipelineResult out;
  Json& report = out.report;
  report["input"] = missingness_profile(input);

  MixedTable table = input;
  if (params.key) {
    const MixedTable grouped = group_mean_aggregate(input, *params.key);
    const auto key = grouped.schema().require(*params.key);
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < grouped.cols(); ++c) {
      if (c != key) keep.push_back(c);
    }
    table = grouped.select_columns(keep);
    report["key"] = *params.key;
    report["aggregated"] = missingness_profile(table);
  } else {
    report["key"] = nullptr;
  }

  const DropResult dropped = drop_sparse_columns(table, params.threshold);
  report["threshold"] = params.threshold;
  report["dropped"] = dropped.dropped;
  Json retained = Json::array();
  for (std::size_t c = 0; c < dropped.table.cols(); ++c) retained.push_back(dropped.table.name(c));
  report["retained"] = retained;
  report["pretreated"] = missingness_profile(dropped.table);

  const std::size_t keep =
      params.keep_repetition.value_or(Rng(params.forest.seed).child("pipeline/keep").below(params.repetitions));
  Json repetitions = Json::array();
  std::vector<double> nrmse, pfc, seconds;
  for (std::size_t r = 0; r < params.repetitions; ++r) {
    ForestParams forest = params.forest;
    forest.seed = Rng::derive(params.forest.seed, seed_label({"pipeline", "repetition", std::to_string(r)}));
    const auto start = std::chrono::steady_clock::now();
    MissForestResult result = missforest_impute(dropped.table, forest);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (result.oob.nrmse) nrmse.push_back(*result.oob.nrmse);
    if (result.oob.pfc) pfc.push_back(*result.oob.pfc);
    seconds.push_back(elapsed);
    Json entry{{"repetition", r},
               {"oob_nrmse", result.oob.nrmse ? Json(*result.oob.nrmse) : Json(nullptr)},
               {"oob_pfc", result.oob.pfc ? Json(*result.oob.pfc) : Json(nullptr)},
               {"iterations", result.iterations}};
    entry["time_s"] = params.include_timing ? Json(elapsed) : Json(nullptr);
    repetitions.push_back(std::move(entry));
    if (r == keep) out.imputed = std::move(result.result.table);
  }
  auto box = [](const std::vector<double>& v) {
    return v.empty() ? Json(nullptr) : boxplot_json(boxplot_stats(v));
  };
  report["repetitions"] = params.repetitions;
  report["kept_repetition"] = keep;
  report["oob_nrmse"] = box(nrmse);
  report["oob_pfc"] = box(pfc);
  report["time_s"] = params.include_timing ? box(seconds) : Json(nullptr);
  report["runs"] = std::move(repetitions);
  return out;
}

}  // namespace imputekit
