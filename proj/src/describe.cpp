#include <cmath>

#include "imputekit/bench.hpp"

namespace imputekit {

namespace {

Json indices_json(const StructuralIndices& s) {
  return {{"rho_abs", s.rho_abs}, {"sd_abs", s.sd_abs}, {"skew_abs", s.skew_abs},
          {"p", s.p},             {"pairs", s.pairs}};
}

}  // namespace

Json describe_table(const MixedTable& table) {
  Json out{{"rows", table.rows()},
           {"cols", table.cols()},
           {"type", to_string(dataset_type(table.schema()))}};
  Json columns = Json::array();
  for (std::size_t c = 0; c < table.cols(); ++c) {
    Json col{{"name", table.name(c)},
             {"kind", table.kind(c).is_quantitative() ? "quantitative" : "categorical"}};
    if (table.kind(c).is_categorical()) col["levels"] = table.kind(c).level_count();
    col["missing"] = table.missing_count(c);
    columns.push_back(std::move(col));
  }
  out["columns"] = std::move(columns);
  out["missingness"] = missingness_profile(table);

  std::vector<std::size_t> complete_rows;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    bool complete = true;
    for (std::size_t c = 0; c < table.cols() && complete; ++c) complete = !table.is_missing(r, c);
    if (complete) complete_rows.push_back(r);
  }
  const MixedTable complete = table.select_rows(complete_rows);
  Json indices{{"rows_used", complete.rows()}};
  try {
    const auto standardized = structural_indices(complete, SkewVariant::Standardized);
    const auto as_written = structural_indices(complete, SkewVariant::AsWritten);
    indices["standardized"] = indices_json(standardized);
    indices["as_written"] = indices_json(as_written);
    indices["default_variant"] = to_string(SkewVariant::Standardized);
    indices["strength"] = to_string(strength_label(standardized.rho_abs));
    Json pairs = Json::array();
    for (const auto& pair : pair_correlations(complete)) {
      pairs.push_back({{"first", table.name(pair.first)},
                       {"second", table.name(pair.second)},
                       {"rho", pair.rho},
                       {"strength", to_string(strength_label(pair.rho))}});
    }
    indices["pairs"] = std::move(pairs);
  } catch (const Error& e) {
    indices["error"] = std::string(to_string(e.code())) + ": " + e.what();
  }
  out["structural_indices"] = std::move(indices);
  return out;
}

}  // namespace imputekit
