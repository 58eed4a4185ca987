#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>

#include "imputekit/bench.hpp"

#ifndef IMPUTEKIT_DEFAULT_DATA_DIR
#define IMPUTEKIT_DEFAULT_DATA_DIR "data"
#endif

namespace imputekit {

const char* to_string(DatasetType t) noexcept {
  switch (t) {
    case DatasetType::Qualitative:
      return "qualitative";
    case DatasetType::Quantitative:
      return "quantitative";
    case DatasetType::Mixed:
      break;
  }
  return "mixed";
}

DatasetType dataset_type(const Schema& schema) {
  std::size_t quantitative = 0;
  for (const auto& c : schema.columns()) quantitative += c.kind.is_quantitative();
  if (quantitative == 0) return DatasetType::Qualitative;
  if (quantitative == schema.size()) return DatasetType::Quantitative;
  return DatasetType::Mixed;
}

const std::vector<DatasetInfo>& dataset_registry() {
  static const std::vector<DatasetInfo> registry{
      {"lanza", 100, 3, "bundled HSAUR version has 198 rows", "lanza"},
      {"hayes", 132, 5, "", "hayes"},
      {"tictactoe", 958, 10, "", "tictactoe"},
      {"rock", 48, 4, "", "rock"},
      {"concrete", 103, 10, "", "concrete"},
      {"wine", 122, 12, "first 122 rows of the 1599-row red wine file", "wine"},
      {"parkinson", 195, 22, "", "parkinson"},
      {"iris", 150, 5, "", "iris"},
      {"contraception", 313, 10, "systematic 313-row subsample of the 1473-row file",
       "contraception"},
      {"musk", 476, 167, "", "musk"},
      {"wwtp-fixture", 789, 11, "synthetic stand-in with the published missingness", ""},
  };
  return registry;
}

const DatasetInfo& dataset_info(const std::string& name) {
  for (const auto& info : dataset_registry()) {
    if (info.name == name) return info;
  }
  throw Error(ErrorCode::UnknownDataset, "unknown dataset '" + name + "'");
}

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("IMPUTEKIT_DATA_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return IMPUTEKIT_DEFAULT_DATA_DIR;
}

MixedTable load_builtin(const std::string& name) {
  const auto& info = dataset_info(name);
  if (info.file.empty()) return make_wwtp_fixture();
  const auto dir = data_dir();
  const auto csv = dir / (info.file + ".csv");
  const auto schema = dir / (info.file + ".schema.json");
  if (!std::filesystem::exists(csv) || !std::filesystem::exists(schema)) {
    throw Error(ErrorCode::DatasetUnavailable,
                "dataset '" + name + "' is not bundled; place " + info.file + ".csv and " +
                    info.file + ".schema.json in " + dir.string() +
                    " (tools/fetch_external_datasets.py converts the UCI files)");
  }
  return load_csv(csv, Schema::load(schema));
}

namespace {

// Plants that never report each parameter over the year, in parameter order.
constexpr std::size_t kSilentPlants[] = {0, 0, 1, 1, 2, 8, 37, 188, 763, 776, 783};
const char* const kParameters[] = {"TRT", "COD",   "BOD5",  "SS",    "NH4", "pH",
                                   "log.FC", "Ptot", "Q.MSR", "CaCO3", "Ntk"};

}  // namespace

MixedTable make_wwtp_daily(std::size_t plants, std::size_t days, std::uint64_t seed) {
  if (plants < 2 || days < 1) throw Error(ErrorCode::InvalidArgument, "need >= 2 plants and >= 1 day");
  std::vector<std::string> plant_names;
  for (std::size_t i = 0; i < plants; ++i) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "P%04zu", i + 1);
    plant_names.emplace_back(buffer);
  }
  std::vector<std::string> treatments;
  for (int t = 1; t <= 9; ++t) treatments.push_back("T" + std::to_string(t));
  std::vector<Column> columns{{"plant", ColumnKind::categorical(plant_names)},
                              {"TRT", ColumnKind::categorical(treatments)}};
  for (std::size_t c = 1; c < std::size(kParameters); ++c) columns.push_back({kParameters[c]});
  Schema schema(std::move(columns));

  const Rng root(seed);
  Rng plant_rng = root.child("plants");
  const double treatment_weight[] = {0.30, 0.20, 0.12, 0.10, 0.08, 0.07, 0.06, 0.04, 0.03};
  const double treatment_effect[] = {-0.6, -0.3, 0.0, 0.2, 0.4, 0.5, 0.7, 0.9, 1.2};
  std::vector<std::size_t> treatment(plants);
  std::vector<double> size(plants);
  for (std::size_t i = 0; i < plants; ++i) {
    double u = plant_rng.uniform();
    std::size_t t = 0;
    while (t + 1 < 9 && u >= treatment_weight[t]) u -= treatment_weight[t++];
    treatment[i] = t;
    size[i] = plant_rng.normal();
  }

  // silent[c][i]: plant i never reports parameter c.
  const std::size_t scale_plants = std::min<std::size_t>(plants, 789);
  std::vector<std::vector<bool>> silent(std::size(kParameters), std::vector<bool>(plants, false));
  for (std::size_t c = 0; c < std::size(kParameters); ++c) {
    const std::size_t count = kSilentPlants[c] * scale_plants / 789;
    Rng rng = root.child(std::string("silent/") + kParameters[c]);
    std::vector<std::size_t> order(plants);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = 0; k < count; ++k) {
      std::swap(order[k], order[k + rng.below(plants - k)]);
      silent[c][order[k]] = true;
    }
  }

  const std::size_t n = plants * days;
  std::vector<std::vector<double>> data(schema.size(), std::vector<double>(n));
  Rng day_rng = root.child("days");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < plants; ++i) {
    const double z = size[i];
    const double e = treatment_effect[treatment[i]];
    const std::size_t anchor_day = day_rng.below(days);  // always reported
    for (std::size_t d = 0; d < days; ++d) {
      const std::size_t r = i * days + d;
      const double cod_log = std::log(40.0) + 0.4 * z + 0.3 * e + 0.25 * day_rng.normal();
      const double nh4_log = std::log(5.0) + 0.6 * z - 0.3 * e + 0.4 * day_rng.normal();
      double values[11];
      values[0] = static_cast<double>(treatment[i]);
      values[1] = std::exp(cod_log);
      values[2] = std::exp(cod_log - 1.1 + 0.2 * day_rng.normal());
      values[3] = std::exp(std::log(12.0) + 0.6 * (cod_log - std::log(40.0)) + 0.3 * day_rng.normal());
      values[4] = std::exp(nh4_log);
      values[5] = 7.2 + 0.15 * z - 0.1 * e + 0.15 * day_rng.normal();
      values[6] = 4.0 + 0.5 * e + 0.3 * z + 0.4 * day_rng.normal();
      values[7] = std::exp(0.3 * z + 0.2 * e + 0.3 * day_rng.normal());
      values[8] = std::exp(std::log(2000.0) + 1.0 * z + 0.2 * day_rng.normal());
      values[9] = std::exp(std::log(100.0) + 0.3 * day_rng.normal());
      values[10] = std::exp(nh4_log + std::log(1.5) + 0.2 * day_rng.normal());
      data[0][r] = static_cast<double>(i);
      for (std::size_t c = 0; c < 11; ++c) {
        const bool gap = silent[c][i] || (c > 0 && d != anchor_day && day_rng.uniform() < 0.25);
        data[c + 1][r] = gap ? nan : values[c];
      }
    }
  }
  return MixedTable(std::move(schema), std::move(data));
}

MixedTable make_wwtp_fixture(std::uint64_t seed) {
  const MixedTable annual = group_mean_aggregate(make_wwtp_daily(789, 12, seed), "plant");
  std::vector<std::size_t> keep(annual.cols() - 1);
  std::iota(keep.begin(), keep.end(), std::size_t{1});
  return annual.select_columns(keep);
}

}  // namespace imputekit
