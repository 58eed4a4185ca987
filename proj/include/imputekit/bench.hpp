#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "imputekit/forest.hpp"
#include "imputekit/metrics.hpp"
#include "imputekit/result.hpp"
#include "imputekit/table.hpp"

namespace imputekit {

using Json = nlohmann::ordered_json;

// --- dataset registry ----------------------------------------------------------

enum class DatasetType { Qualitative, Quantitative, Mixed };
const char* to_string(DatasetType t) noexcept;
DatasetType dataset_type(const Schema& schema);

struct DatasetInfo {
  std::string name;
  /// Published shape of the dataset.
  std::size_t published_rows = 0;
  std::size_t published_cols = 0;
  /// Non-empty when the bundled version's shape differs from the published one.
  std::string shape_note;
  /// File stem under data_dir(); empty for generated datasets.
  std::string file;
};

const std::vector<DatasetInfo>& dataset_registry();
const DatasetInfo& dataset_info(const std::string& name);

/// IMPUTEKIT_DATA_DIR when set, else the directory configured at build time.
std::filesystem::path data_dir();

/// Throws UnknownDataset, or DatasetUnavailable when its files are absent.
MixedTable load_builtin(const std::string& name);

/// Daily records of `plants` treatment plants over `days` days: a categorical
/// "plant" key followed by the 11 operational parameters, with per-parameter
/// sets of plants that never report it.
MixedTable make_wwtp_daily(std::size_t plants = 789, std::size_t days = 12,
                           std::uint64_t seed = 2013);
/// Annual per-plant means of make_wwtp_daily without the key (789 x 11).
MixedTable make_wwtp_fixture(std::uint64_t seed = 2013);

/// Missingness profile, structural indices under both skew variants and
/// per-pair correlation strengths. Indices use the complete rows only.
Json describe_table(const MixedTable& table);

// --- methods ---------------------------------------------------------------------

/// Runs "knn", "mice" or "missforest" with parameters from a JSON object
/// (unknown keys are rejected) and the given seed. seconds covers the call.
ImputationResult impute(const MixedTable& table, const std::string& method, const Json& params,
                        std::uint64_t seed);

/// Parameter objects with every default filled in.
Json method_defaults(const std::string& method);
ForestParams forest_params_from_json(const Json& params, std::uint64_t seed);

// --- experiments -------------------------------------------------------------------

struct MethodSpec {
  std::string name;
  Json params = Json::object();
};

struct DatasetSpec {
  std::string name;
  /// Empty for builtin datasets.
  std::string csv;
  std::string schema;
};

struct BenchConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<double> fractions{0.02, 0.05, 0.10, 0.20};
  std::vector<MethodSpec> methods{{"knn", Json::object()}, {"mice", Json::object()},
                                  {"missforest", Json::object()}};
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string reference = "missforest";
  /// Wall-clock times vary between runs; without them a report is a pure
  /// function of the configuration.
  bool include_timing = true;

  static BenchConfig from_json(const Json& j);
  Json to_json() const;
};

struct TrialRecord {
  std::string dataset;
  std::string method;
  double fraction = 0.0;
  std::size_t trial = 0;
  ErrorScores scores;
  double seconds = 0.0;
  Json diagnostics = Json::object();
  /// Set when the trial failed; the trial is then excluded from aggregates.
  std::optional<std::string> error;
};

std::uint64_t amputation_seed(std::uint64_t master, const std::string& dataset, double fraction,
                              std::size_t trial);
std::uint64_t method_seed(std::uint64_t master, const std::string& dataset,
                          const std::string& method, double fraction, std::size_t trial);

TrialRecord run_trial(const std::string& dataset, const MixedTable& complete,
                      const MethodSpec& method, double fraction, std::size_t trial,
                      std::uint64_t master_seed);

struct BenchReport {
  BenchConfig config;
  std::vector<TrialRecord> trials;  // factorial order: dataset, method, fraction, trial
  Json summary;                     // aggregates computed from `trials`

  Json to_json(bool include_raw) const;
  /// Long format: dataset,method,fraction,statistic,nrmse,pfc,time_s.
  std::string to_csv() const;
  std::string trials_csv() const;
};

/// Recomputes the aggregate section from trial records.
Json summarize(const BenchConfig& config, const std::vector<std::pair<std::string, MixedTable>>& data,
               const std::vector<TrialRecord>& trials);

BenchReport run_experiment(const BenchConfig& config);

Json boxplot_json(const BoxplotStats& b);
extern const std::vector<std::string> kBoxplotStatistics;

// --- case study ----------------------------------------------------------------------

struct PipelineParams {
  /// Rows are first averaged per level of this column, which is then dropped.
  std::optional<std::string> key;
  double threshold = 0.90;
  ForestParams forest;
  std::size_t repetitions = 100;
  /// Repetition whose imputed table is returned; by default drawn from the seed.
  std::optional<std::size_t> keep_repetition;
  bool include_timing = true;
};

struct PipelineResult {
  Json report;
  MixedTable imputed;
};

/// Reads {"seed" (required), "key", "threshold", "repetitions",
/// "keep_repetition", "include_timing", "forest": {missforest parameters}}.
PipelineParams pipeline_params_from_json(const Json& j);

PipelineResult run_pipeline(const MixedTable& input, const PipelineParams& params);

/// Per-column missingness ordered from most to least complete, with the
/// cumulative missing fraction of the leading columns.
Json missingness_profile(const MixedTable& table);

}  // namespace imputekit
