#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "imputekit/ampute.hpp"
#include "imputekit/bench.hpp"
#include "imputekit/parallel.hpp"

namespace imputekit {

const std::vector<std::string> kBoxplotStatistics{"min",  "q1", "median",      "q3",           "max",
                                                  "mean", "sd", "whisker_low", "whisker_high", "n"};

namespace {

void require_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, what + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) ==
        allowed.end()) {
      throw Error(ErrorCode::InvalidArgument, "unknown " + what + " field '" + key + "'");
    }
  }
}

Json number_or_null(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

// Competition ranking: 1 + number of strictly smaller values.
std::vector<std::size_t> competition_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> ranks(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    ranks[i] = 1 + static_cast<std::size_t>(std::count_if(
                       values.begin(), values.end(), [&](double v) { return v < values[i]; }));
  }
  return ranks;
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string csv_number(const Json& v) {
  if (v.is_null()) return "NA";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  return format_number(v.get<double>());
}

}  // namespace

Json boxplot_json(const BoxplotStats& b) {
  return Json{{"min", b.min},   {"q1", b.q1},
              {"median", b.median}, {"q3", b.q3},
              {"max", b.max},   {"mean", b.mean},
              {"sd", b.sd},     {"whisker_low", b.whisker_low},
              {"whisker_high", b.whisker_high}, {"n", b.n}};
}

// --- configuration -----------------------------------------------------------------

BenchConfig BenchConfig::from_json(const Json& j) {
  require_keys(j, {"datasets", "fractions", "methods", "trials", "seed", "threads", "reference",
                   "include_timing"},
               "bench config");
  BenchConfig c;
  try {
    if (!j.contains("datasets") || !j.at("datasets").is_array() || j.at("datasets").empty()) {
      throw Error(ErrorCode::InvalidArgument, "bench config needs a non-empty 'datasets' array");
    }
    for (const auto& d : j.at("datasets")) {
      if (d.is_string()) {
        const auto name = d.get<std::string>();
        dataset_info(name);
        c.datasets.push_back({name, "", ""});
      } else {
        require_keys(d, {"name", "csv", "schema"}, "dataset");
        DatasetSpec spec{d.at("name").get<std::string>(), d.value("csv", ""), d.value("schema", "")};
        if (spec.csv.empty() != spec.schema.empty()) {
          throw Error(ErrorCode::InvalidArgument,
                      "dataset '" + spec.name + "' needs both 'csv' and 'schema' or neither");
        }
        if (spec.csv.empty()) dataset_info(spec.name);
        c.datasets.push_back(std::move(spec));
      }
    }
    if (j.contains("fractions")) c.fractions = j.at("fractions").get<std::vector<double>>();
    if (c.fractions.empty()) throw Error(ErrorCode::InvalidArgument, "no fractions given");
    for (double f : c.fractions) {
      if (!(f > 0.0 && f <= 0.5)) {
        throw Error(ErrorCode::InvalidArgument, "fraction " + format_number(f) + " outside (0, 0.5]");
      }
    }
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) {
        MethodSpec spec;
        if (m.is_string()) {
          spec.name = m.get<std::string>();
        } else {
          require_keys(m, {"name", "params"}, "method");
          spec.name = m.at("name").get<std::string>();
          spec.params = m.value("params", Json::object());
        }
        const Json defaults = method_defaults(spec.name);
        if (!spec.params.is_object()) {
          throw Error(ErrorCode::InvalidArgument, spec.name + " params must be an object");
        }
        for (const auto& [key, value] : spec.params.items()) {
          if (!defaults.contains(key)) {
            throw Error(ErrorCode::InvalidArgument,
                        "unknown " + spec.name + " parameter '" + key + "'");
          }
        }
        c.methods.push_back(std::move(spec));
      }
      if (c.methods.empty()) throw Error(ErrorCode::InvalidArgument, "no methods given");
    }
    if (j.contains("trials")) c.trials = j.at("trials").get<std::size_t>();
    if (c.trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be at least 1");
    if (!j.contains("seed")) throw Error(ErrorCode::InvalidArgument, "bench config needs a 'seed'");
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) c.threads = j.at("threads").get<unsigned>();
    if (j.contains("reference")) c.reference = j.at("reference").get<std::string>();
    if (j.contains("include_timing")) c.include_timing = j.at("include_timing").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bench config: ") + e.what());
  }
  return c;
}

Json BenchConfig::to_json() const {
  Json j;
  j["datasets"] = Json::array();
  for (const auto& d : datasets) {
    if (d.csv.empty()) {
      j["datasets"].push_back(d.name);
    } else {
      j["datasets"].push_back({{"name", d.name}, {"csv", d.csv}, {"schema", d.schema}});
    }
  }
  j["fractions"] = fractions;
  j["methods"] = Json::array();
  for (const auto& m : methods) j["methods"].push_back({{"name", m.name}, {"params", m.params}});
  j["trials"] = trials;
  j["seed"] = seed;
  j["reference"] = reference;
  j["include_timing"] = include_timing;
  return j;
}

// --- trials ----------------------------------------------------------------------

std::uint64_t amputation_seed(std::uint64_t master, const std::string& dataset, double fraction,
                              std::size_t trial) {
  return Rng::derive(master, seed_label({"ampute", dataset, format_number(fraction),
                                         std::to_string(trial)}));
}

std::uint64_t method_seed(std::uint64_t master, const std::string& dataset,
                          const std::string& method, double fraction, std::size_t trial) {
  return Rng::derive(master, seed_label({"impute", dataset, method, format_number(fraction),
                                         std::to_string(trial)}));
}

TrialRecord run_trial(const std::string& dataset, const MixedTable& complete,
                      const MethodSpec& method, double fraction, std::size_t trial,
                      std::uint64_t master_seed) {
  TrialRecord record;
  record.dataset = dataset;
  record.method = method.name;
  record.fraction = fraction;
  record.trial = trial;
  try {
    AmputationSpec spec;
    spec.fraction = fraction;
    spec.seed = amputation_seed(master_seed, dataset, fraction, trial);
    const Amputation amputed = ampute_mcar(complete, spec);
    const ImputationResult result =
        impute(amputed.table, method.name, method.params,
               method_seed(master_seed, dataset, method.name, fraction, trial));
    record.seconds = result.seconds;
    record.diagnostics = result.diagnostics;
    record.scores = score(complete, result.table, amputed.mask);
  } catch (const Error& e) {
    record.error = std::string(to_string(e.code())) + ": " + e.what();
  }
  return record;
}

// --- aggregation -------------------------------------------------------------------

Json summarize(const BenchConfig& config,
               const std::vector<std::pair<std::string, MixedTable>>& data,
               const std::vector<TrialRecord>& trials) {
  Json out;
  const bool timing = config.include_timing;

  struct Cell {
    std::vector<double> nrmse, pfc, time;
    std::size_t total = 0, failed = 0, variance_zero = 0;
  };
  // Keyed by (dataset index, method index, fraction index).
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, Cell> cells;
  auto index_of = [](const auto& list, const auto& pred) {
    return static_cast<std::size_t>(std::find_if(list.begin(), list.end(), pred) - list.begin());
  };
  for (const auto& t : trials) {
    const auto d = index_of(data, [&](const auto& p) { return p.first == t.dataset; });
    const auto m = index_of(config.methods, [&](const auto& s) { return s.name == t.method; });
    const auto f = index_of(config.fractions, [&](double v) { return v == t.fraction; });
    auto& cell = cells[{d, m, f}];
    ++cell.total;
    if (t.error) {
      ++cell.failed;
      continue;
    }
    if (t.scores.nrmse) cell.nrmse.push_back(*t.scores.nrmse);
    if (t.scores.pfc) cell.pfc.push_back(*t.scores.pfc);
    cell.variance_zero += t.scores.variance_zero;
    cell.time.push_back(t.seconds);
  }
  auto cell_at = [&](std::size_t d, std::size_t m, std::size_t f) -> const Cell* {
    auto it = cells.find({d, m, f});
    return it == cells.end() ? nullptr : &it->second;
  };
  auto box = [](const std::vector<double>& v) {
    return v.empty() ? Json(nullptr) : boxplot_json(boxplot_stats(v));
  };

  out["datasets"] = Json::array();
  std::vector<DatasetType> types;
  std::vector<std::optional<StructuralIndices>> indices, indices_as_written;
  for (const auto& [name, table] : data) {
    types.push_back(dataset_type(table.schema()));
    Json entry{{"name", name}, {"rows", table.rows()}, {"cols", table.cols()},
               {"type", to_string(types.back())}};
    try {
      const auto& info = dataset_info(name);
      entry["published_rows"] = info.published_rows;
      entry["published_cols"] = info.published_cols;
      entry["shape_note"] = info.shape_note;
    } catch (const Error&) {
    }
    try {
      indices.push_back(structural_indices(table, SkewVariant::Standardized));
      indices_as_written.push_back(structural_indices(table, SkewVariant::AsWritten));
    } catch (const Error&) {
      indices.emplace_back();
      indices_as_written.emplace_back();
    }
    out["datasets"].push_back(std::move(entry));
  }

  out["cells"] = Json::array();
  for (std::size_t d = 0; d < data.size(); ++d) {
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      for (std::size_t f = 0; f < config.fractions.size(); ++f) {
        const Cell* cell = cell_at(d, m, f);
        if (cell == nullptr) continue;
        out["cells"].push_back({{"dataset", data[d].first},
                                {"method", config.methods[m].name},
                                {"fraction", config.fractions[f]},
                                {"trials", cell->total},
                                {"failed", cell->failed},
                                {"variance_zero", cell->variance_zero},
                                {"nrmse", box(cell->nrmse)},
                                {"pfc", box(cell->pfc)},
                                {"time_s", timing ? box(cell->time) : Json(nullptr)}});
      }
    }
  }

  auto cell_mean_time = [&](std::size_t d, std::size_t m, std::size_t f) -> std::optional<double> {
    const Cell* c = cell_at(d, m, f);
    if (!timing || c == nullptr) return std::nullopt;
    return mean_of(c->time);
  };

  // table4: mean time per method and fraction, averaged over datasets.
  out["table4"] = Json::array();
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    for (std::size_t f = 0; f < config.fractions.size(); ++f) {
      std::vector<double> per_dataset;
      for (std::size_t d = 0; d < data.size(); ++d) {
        if (auto t = cell_mean_time(d, m, f)) per_dataset.push_back(*t);
      }
      out["table4"].push_back({{"method", config.methods[m].name},
                               {"fraction", config.fractions[f]},
                               {"mean_time_s", number_or_null(mean_of(per_dataset))}});
    }
  }

  // table5: mean time over fractions with ranks per dataset and per type group.
  auto ranks_json = [&](const std::vector<std::optional<double>>& times) {
    std::vector<double> known;
    for (const auto& t : times) {
      if (t) known.push_back(*t);
    }
    const bool complete = known.size() == times.size();
    const auto ranks = complete ? competition_ranks(known) : std::vector<std::size_t>{};
    return std::make_pair(complete, ranks);
  };
  out["table5"] = {{"datasets", Json::array()}, {"groups", Json::array()}};
  std::vector<std::vector<std::optional<double>>> dataset_times(data.size());
  for (std::size_t d = 0; d < data.size(); ++d) {
    std::vector<std::vector<double>> fraction_ranks(config.methods.size());
    for (std::size_t f = 0; f < config.fractions.size(); ++f) {
      std::vector<std::optional<double>> times;
      for (std::size_t m = 0; m < config.methods.size(); ++m) times.push_back(cell_mean_time(d, m, f));
      const auto [complete, ranks] = ranks_json(times);
      if (complete) {
        for (std::size_t m = 0; m < ranks.size(); ++m) {
          fraction_ranks[m].push_back(static_cast<double>(ranks[m]));
        }
      }
    }
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      std::vector<double> per_fraction;
      for (std::size_t f = 0; f < config.fractions.size(); ++f) {
        if (auto t = cell_mean_time(d, m, f)) per_fraction.push_back(*t);
      }
      dataset_times[d].push_back(mean_of(per_fraction));
    }
    const auto [complete, ranks] = ranks_json(dataset_times[d]);
    Json methods = Json::array();
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      methods.push_back({{"method", config.methods[m].name},
                         {"mean_time_s", number_or_null(dataset_times[d][m])},
                         {"rank", complete ? Json(ranks[m]) : Json(nullptr)},
                         {"mean_rank", number_or_null(mean_of(fraction_ranks[m]))}});
    }
    out["table5"]["datasets"].push_back(
        {{"dataset", data[d].first}, {"type", to_string(types[d])}, {"methods", methods}});
  }
  for (auto type : {DatasetType::Qualitative, DatasetType::Quantitative, DatasetType::Mixed}) {
    std::vector<std::optional<double>> times;
    bool any = false;
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      std::vector<double> per_dataset;
      for (std::size_t d = 0; d < data.size(); ++d) {
        if (types[d] != type) continue;
        any = true;
        if (dataset_times[d][m]) per_dataset.push_back(*dataset_times[d][m]);
      }
      times.push_back(mean_of(per_dataset));
    }
    if (!any) continue;
    const auto [complete, ranks] = ranks_json(times);
    Json methods = Json::array();
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      methods.push_back({{"method", config.methods[m].name},
                         {"mean_time_s", number_or_null(times[m])},
                         {"rank", complete ? Json(ranks[m]) : Json(nullptr)}});
    }
    out["table5"]["groups"].push_back({{"type", to_string(type)}, {"methods", methods}});
  }

  const auto reference = index_of(config.methods, [&](const auto& s) { return s.name == config.reference; });
  const bool has_reference = reference < config.methods.size();

  // table6: structural indices with mean NRMSE and gaps against the reference.
  out["table6"] = Json::array();
  for (std::size_t d = 0; d < data.size(); ++d) {
    if (!indices[d]) continue;
    Json mean_nrmse = Json::object();
    std::vector<std::optional<double>> means;
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      std::vector<double> all;
      for (std::size_t f = 0; f < config.fractions.size(); ++f) {
        if (const Cell* c = cell_at(d, m, f)) all.insert(all.end(), c->nrmse.begin(), c->nrmse.end());
      }
      means.push_back(mean_of(all));
      mean_nrmse[config.methods[m].name] = number_or_null(means.back());
    }
    Json gaps = Json::object();
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      if (!has_reference || m == reference) continue;
      const bool defined = means[m] && means[reference] && *means[reference] != 0.0;
      gaps[config.methods[m].name] =
          defined ? Json(relative_gap(*means[m], *means[reference])) : Json(nullptr);
    }
    out["table6"].push_back({{"dataset", data[d].first},
                             {"type", to_string(types[d])},
                             {"rows", data[d].second.rows()},
                             {"cols", data[d].second.cols()},
                             {"rho_abs", indices[d]->rho_abs},
                             {"sd_abs", indices[d]->sd_abs},
                             {"skew_abs", indices[d]->skew_abs},
                             {"skew_abs_as_written", indices_as_written[d]->skew_abs},
                             {"mean_nrmse", mean_nrmse},
                             {"reference", has_reference ? Json(config.reference) : Json(nullptr)},
                             {"gap_vs_reference", gaps}});
  }

  // figure5: mean relative gap against the reference per type group, metric and fraction.
  out["figure5"] = Json::array();
  if (has_reference) {
    for (const char* group : {"non_mixed", "mixed"}) {
      for (const char* metric : {"pfc", "nrmse"}) {
        for (std::size_t f = 0; f < config.fractions.size(); ++f) {
          for (std::size_t m = 0; m < config.methods.size(); ++m) {
            if (m == reference) continue;
            std::vector<double> gaps;
            for (std::size_t d = 0; d < data.size(); ++d) {
              const bool mixed = types[d] == DatasetType::Mixed;
              if (mixed != (std::string(group) == "mixed")) continue;
              const Cell* a = cell_at(d, m, f);
              const Cell* r = cell_at(d, reference, f);
              if (a == nullptr || r == nullptr) continue;
              const bool pfc = std::string(metric) == "pfc";
              const auto x = mean_of(pfc ? a->pfc : a->nrmse);
              const auto x_ref = mean_of(pfc ? r->pfc : r->nrmse);
              if (x && x_ref && *x_ref != 0.0) gaps.push_back(relative_gap(*x, *x_ref));
            }
            out["figure5"].push_back({{"group", group},
                                      {"metric", metric},
                                      {"fraction", config.fractions[f]},
                                      {"method", config.methods[m].name},
                                      {"reference", config.reference},
                                      {"gap", number_or_null(mean_of(gaps))},
                                      {"datasets", gaps.size()}});
          }
        }
      }
    }
  }

  out["failures"] = Json::array();
  for (const auto& t : trials) {
    if (!t.error) continue;
    out["failures"].push_back({{"dataset", t.dataset},
                               {"method", t.method},
                               {"fraction", t.fraction},
                               {"trial", t.trial},
                               {"error", *t.error}});
  }
  return out;
}

BenchReport run_experiment(const BenchConfig& config) {
  std::vector<std::pair<std::string, MixedTable>> data;
  for (const auto& d : config.datasets) {
    MixedTable table = d.csv.empty() ? load_builtin(d.name) : load_csv(d.csv, Schema::load(d.schema));
    if (table.has_missing()) {
      throw Error(ErrorCode::IncompleteInput,
                  "dataset '" + d.name + "' has missing cells; benchmarks start from complete data");
    }
    data.emplace_back(d.name, std::move(table));
  }

  struct Job {
    std::size_t dataset, method, fraction, trial;
  };
  std::vector<Job> jobs;
  for (std::size_t d = 0; d < data.size(); ++d) {
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      for (std::size_t f = 0; f < config.fractions.size(); ++f) {
        for (std::size_t t = 0; t < config.trials; ++t) jobs.push_back({d, m, f, t});
      }
    }
  }
  BenchReport report;
  report.config = config;
  report.trials.resize(jobs.size());
  parallel_for(jobs.size(), config.threads, [&](std::size_t i) {
    const auto& job = jobs[i];
    report.trials[i] = run_trial(data[job.dataset].first, data[job.dataset].second,
                                 config.methods[job.method], config.fractions[job.fraction],
                                 job.trial, config.seed);
  });
  report.summary = summarize(config, data, report.trials);
  return report;
}

// --- output --------------------------------------------------------------------------

Json BenchReport::to_json(bool include_raw) const {
  Json j;
  j["config"] = config.to_json();
  for (const auto& [key, value] : summary.items()) j[key] = value;
  if (include_raw) {
    j["trials"] = Json::array();
    for (const auto& t : trials) {
      Json r{{"dataset", t.dataset},
             {"method", t.method},
             {"fraction", t.fraction},
             {"trial", t.trial},
             {"nrmse", number_or_null(t.scores.nrmse)},
             {"pfc", number_or_null(t.scores.pfc)},
             {"quantitative_cells", t.scores.quantitative_cells},
             {"categorical_cells", t.scores.categorical_cells},
             {"variance_zero", t.scores.variance_zero},
             {"time_s", config.include_timing && !t.error ? Json(t.seconds) : Json(nullptr)},
             {"error", t.error ? Json(*t.error) : Json(nullptr)},
             {"diagnostics", t.diagnostics}};
      j["trials"].push_back(std::move(r));
    }
  }
  return j;
}

std::string BenchReport::to_csv() const {
  std::ostringstream out;
  out << "dataset,method,fraction,statistic,nrmse,pfc,time_s\n";
  if (!summary.contains("cells")) return out.str();
  for (const auto& cell : summary.at("cells")) {
    for (const auto& stat : kBoxplotStatistics) {
      write_csv_field(out, cell.at("dataset").get<std::string>());
      out << ',';
      write_csv_field(out, cell.at("method").get<std::string>());
      out << ',' << format_number(cell.at("fraction").get<double>()) << ',' << stat;
      for (const char* metric : {"nrmse", "pfc", "time_s"}) {
        const auto& b = cell.at(metric);
        out << ',' << (b.is_null() ? std::string("NA") : csv_number(b.at(stat)));
      }
      out << '\n';
    }
  }
  return out.str();
}

std::string BenchReport::trials_csv() const {
  std::ostringstream out;
  out << "dataset,method,fraction,trial,nrmse,pfc,quantitative_cells,categorical_cells,time_s,error\n";
  for (const auto& t : trials) {
    write_csv_field(out, t.dataset);
    out << ',';
    write_csv_field(out, t.method);
    out << ',' << format_number(t.fraction) << ',' << t.trial << ','
        << (t.scores.nrmse ? format_number(*t.scores.nrmse) : "NA") << ','
        << (t.scores.pfc ? format_number(*t.scores.pfc) : "NA") << ','
        << t.scores.quantitative_cells << ',' << t.scores.categorical_cells << ','
        << (config.include_timing && !t.error ? format_number(t.seconds) : "NA") << ',';
    write_csv_field(out, t.error ? *t.error : "");
    out << '\n';
  }
  return out.str();
}

}  // namespace imputekit
