// imputekit command-line front end over the C interface.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "imputekit/imputekit.h"

namespace {

using Json = nlohmann::ordered_json;

// Carries the status of a failed step out of a subcommand.
struct Failure {
  int status;
};

void check(ik_status status) {
  if (status == IK_OK) return;
  std::cerr << "error";
  if (*ik_last_error_kind() != '\0') std::cerr << " [" << ik_last_error_kind() << "]";
  std::cerr << ": " << ik_last_error() << "\n";
  throw Failure{status};
}

[[noreturn]] void usage_error(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  throw Failure{IK_E_INVALID_ARGUMENT};
}

std::string take(char* s) {
  std::string out(s ? s : "");
  ik_free_string(s);
  return out;
}

struct Table {
  ik_table* handle = nullptr;
  Table() = default;
  Table(const Table&) = delete;
  Table& operator=(const Table&) = delete;
  ~Table() { ik_table_free(handle); }
};

struct Mask {
  ik_mask* handle = nullptr;
  Mask() = default;
  Mask(const Mask&) = delete;
  Mask& operator=(const Mask&) = delete;
  ~Mask() { ik_mask_free(handle); }
};

struct Report {
  ik_report* handle = nullptr;
  Report() = default;
  Report(const Report&) = delete;
  Report& operator=(const Report&) = delete;
  ~Report() { ik_report_free(handle); }
};

std::string table_csv(const Table& t) {
  char* out = nullptr;
  check(ik_table_to_csv(t.handle, &out));
  return take(out);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot open " << path << " for writing\n";
    throw Failure{IK_E_RUNTIME};
  }
  out << text;
  out.close();
  if (!out) {
    std::cerr << "error: failed writing " << path << "\n";
    throw Failure{IK_E_RUNTIME};
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << path << "\n";
    throw Failure{IK_E_RUNTIME};
  }
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Json parse_object(const std::string& text, const std::string& what) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    usage_error(what + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) usage_error(what + " must be a JSON object");
  return j;
}

struct Source {
  std::string input, schema, builtin;

  void add(CLI::App* cmd) {
    cmd->add_option("--input,-i", input, "CSV file to read (header row required)");
    cmd->add_option("--schema", schema, "Schema JSON describing the input columns");
    cmd->add_option("--builtin", builtin,
                    "Registered dataset to use instead of --input/--schema "
                    "(lanza, hayes, tictactoe, rock, concrete, wine, parkinson, iris, "
                    "contraception, musk, wwtp-fixture)");
  }

  void load(Table& t) const {
    if (!builtin.empty()) {
      if (!input.empty() || !schema.empty()) usage_error("--builtin excludes --input and --schema");
      check(ik_table_load_builtin(builtin.c_str(), &t.handle));
      return;
    }
    if (input.empty() || schema.empty()) usage_error("need --input and --schema, or --builtin");
    check(ik_table_load_csv(input.c_str(), schema.c_str(), &t.handle));
  }
};

CLI::Option* add_format(CLI::App* cmd, std::string& format, std::vector<std::string> allowed,
                        const std::string& help) {
  format = allowed.front();
  return cmd->add_option("--format", format, help)
      ->check(CLI::IsMember(std::move(allowed)))
      ->capture_default_str();
}

// When a JSON summary goes to standard output, data files need explicit paths.
void require_path(const std::string& format, const std::string& path, const char* flag) {
  if (format == "json" && (path.empty() || path == "-")) {
    usage_error(std::string("--format json prints a summary; give ") + flag + " a file path");
  }
}

// --- ampute -------------------------------------------------------------------

struct AmputeArgs {
  Source source;
  double fraction = 0.1;
  std::uint64_t seed = 0;
  std::string output, mask, format;
};

void run_ampute(const AmputeArgs& a) {
  require_path(a.format, a.output, "--output");
  Table complete, amputed;
  Mask mask;
  a.source.load(complete);
  check(ik_ampute_mcar(complete.handle, a.fraction, a.seed, &amputed.handle, &mask.handle));
  write_text(a.output, table_csv(amputed));
  if (!a.mask.empty()) {
    char* text = nullptr;
    check(ik_mask_to_csv(mask.handle, &text));
    write_text(a.mask, take(text));
  }
  if (a.format == "json") {
    Json summary{{"rows", ik_table_rows(amputed.handle)},
                 {"cols", ik_table_cols(amputed.handle)},
                 {"fraction", a.fraction},
                 {"seed", a.seed},
                 {"amputed", ik_mask_size(mask.handle)},
                 {"output", a.output},
                 {"mask", a.mask.empty() ? Json(nullptr) : Json(a.mask)}};
    std::cout << summary.dump(1) << "\n";
  }
}

// --- impute -------------------------------------------------------------------

struct ImputeArgs {
  Source source;
  std::string method = "missforest";
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string params;
  std::optional<std::size_t> k, m, maxit, pmm_donors, ntree, max_iter;
  std::optional<double> ridge;
  std::optional<std::string> mtry, min_node_size;
  bool drop_collinear = false, no_bootstrap = false;
  std::string output, diagnostics, format;
};

// "auto" or a count.
Json auto_or_count(const std::string& flag, const std::string& value) {
  if (value == "auto") return "auto";
  try {
    std::size_t used = 0;
    const auto n = std::stoull(value, &used);
    if (used == value.size()) return n;
  } catch (const std::exception&) {
  }
  usage_error(flag + " must be 'auto' or a non-negative integer");
}

void add_forest_flags(CLI::App* cmd, ImputeArgs& a) {
  cmd->add_option("--ntree", a.ntree, "missforest: trees per forest (default 100)");
  cmd->add_option("--mtry", a.mtry, "missforest: predictors tried per split, or auto");
  cmd->add_option("--min-node-size", a.min_node_size,
                  "missforest: minimum leaf size, or auto (5 regression, 1 classification)");
  cmd->add_option("--max-iter", a.max_iter, "missforest: maximum iterations (default 10)");
  cmd->add_flag("--no-bootstrap", a.no_bootstrap, "missforest: grow trees on all rows");
}

Json forest_json(const ImputeArgs& a) {
  Json p = Json::object();
  if (a.ntree) p["ntree"] = *a.ntree;
  if (a.mtry) p["mtry"] = auto_or_count("--mtry", *a.mtry);
  if (a.min_node_size) p["min_node_size"] = auto_or_count("--min-node-size", *a.min_node_size);
  if (a.max_iter) p["max_iter"] = *a.max_iter;
  if (a.no_bootstrap) p["bootstrap"] = false;
  return p;
}

// Method parameters: --params first, individual flags override it.
Json impute_params(const ImputeArgs& a) {
  Json p = a.params.empty() ? Json::object() : parse_object(a.params, "--params");
  if (a.k) p["k"] = *a.k;
  if (a.m) p["m"] = *a.m;
  if (a.maxit) p["maxit"] = *a.maxit;
  if (a.pmm_donors) p["pmm_donors"] = *a.pmm_donors;
  if (a.ridge) p["ridge"] = *a.ridge;
  if (a.drop_collinear) p["drop_collinear"] = true;
  p.update(forest_json(a));
  if (a.threads != 0 && a.method != "knn") p["threads"] = a.threads;
  return p;
}

void run_impute(const ImputeArgs& a) {
  if (!a.seed && a.method != "knn") usage_error("--seed is required for method " + a.method);
  require_path(a.format, a.output, "--output");
  const std::string params = impute_params(a).dump();
  Table input, imputed;
  a.source.load(input);
  char* diagnostics = nullptr;
  check(ik_impute(input.handle, a.method.c_str(), params.c_str(), a.seed.value_or(0),
                  &imputed.handle, &diagnostics));
  const std::string diag = take(diagnostics);
  write_text(a.output, table_csv(imputed));
  if (!a.diagnostics.empty() || a.format == "json") {
    const std::string pretty = Json::parse(diag).dump(1) + "\n";
    if (!a.diagnostics.empty()) write_text(a.diagnostics, pretty);
    if (a.format == "json") std::cout << pretty;
  }
}

// --- describe -----------------------------------------------------------------

struct DescribeArgs {
  Source source;
  std::string output, format;
};

std::string describe_text(const Json& d) {
  std::ostringstream s;
  s << "rows " << d["rows"].get<std::size_t>() << ", columns " << d["cols"].get<std::size_t>()
    << ", type " << d["type"].get<std::string>() << "\n";
  s << "missing fraction " << d["missingness"]["missing_fraction"].get<double>() << "\n";
  for (const auto& c : d["missingness"]["columns"]) {
    s << "  " << c["column"].get<std::string>() << "  " << c["missing_fraction"].get<double>()
      << "  cumulative " << c["cumulative_missing_fraction"].get<double>() << "\n";
  }
  const auto& si = d["structural_indices"];
  if (si.contains("error")) {
    s << "structural indices unavailable: " << si["error"].get<std::string>() << "\n";
  } else {
    for (const char* variant : {"standardized", "as_written"}) {
      const auto& v = si[variant];
      s << "indices (" << variant << ") rho_abs " << v["rho_abs"].get<double>() << ", sd_abs "
        << v["sd_abs"].get<double>() << ", skew_abs " << v["skew_abs"].get<double>() << "\n";
    }
    s << "correlation strength " << si["strength"].get<std::string>() << " over "
      << si["rows_used"].get<std::size_t>() << " complete rows\n";
  }
  return s.str();
}

void run_describe(const DescribeArgs& a) {
  Table input;
  a.source.load(input);
  char* out = nullptr;
  check(ik_describe(input.handle, &out));
  const Json d = Json::parse(take(out));
  write_text(a.output, a.format == "text" ? describe_text(d) : d.dump(1) + "\n");
}

// --- bench --------------------------------------------------------------------

struct BenchArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  unsigned threads = 0;
  bool include_raw = false, no_timing = false;
  std::string output, raw, csv, format;
};

void run_bench(const BenchArgs& a) {
  Json config = parse_object(read_text(a.config), a.config);
  if (a.seed) config["seed"] = *a.seed;
  if (a.trials) config["trials"] = *a.trials;
  if (a.no_timing) config["include_timing"] = false;
  const std::string text = config.dump();
  Report report;
  check(ik_bench_run(text.c_str(), a.threads, &report.handle));
  char* out = nullptr;
  if (a.format == "csv") {
    check(ik_report_to_csv(report.handle, &out));
  } else {
    check(ik_report_to_json(report.handle, a.include_raw ? 1 : 0, &out));
  }
  write_text(a.output, take(out));
  if (!a.raw.empty()) {
    check(ik_report_trials_csv(report.handle, &out));
    write_text(a.raw, take(out));
  }
  if (!a.csv.empty()) {
    check(ik_report_to_csv(report.handle, &out));
    write_text(a.csv, take(out));
  }
}

// --- pipeline -----------------------------------------------------------------

struct PipelineArgs {
  Source source;
  ImputeArgs forest;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> key;
  double threshold = 0.90;
  std::size_t repetitions = 100;
  std::optional<std::size_t> keep;
  bool no_timing = false;
  std::string output, report, format;
};

void run_pipeline(const PipelineArgs& a) {
  if (!a.seed) usage_error("--seed is required");
  Json params{{"seed", *a.seed},
              {"threshold", a.threshold},
              {"repetitions", a.repetitions},
              {"include_timing", !a.no_timing}};
  if (a.key) params["key"] = *a.key;
  if (a.keep) params["keep_repetition"] = *a.keep;
  Json forest = forest_json(a.forest);
  if (a.forest.threads != 0) forest["threads"] = a.forest.threads;
  params["forest"] = forest;
  const std::string text = params.dump();

  Table input, imputed;
  a.source.load(input);
  char* report = nullptr;
  check(ik_pipeline_run(input.handle, text.c_str(), &report, &imputed.handle));
  const std::string report_text = take(report);
  if (!a.output.empty()) write_text(a.output, table_csv(imputed));
  if (!a.report.empty()) write_text(a.report, report_text);
  if (a.format == "json") {
    std::cout << report_text;
  } else {
    const Json r = Json::parse(report_text);
    std::cout << "dropped " << r["dropped"].dump() << "\n"
              << "retained " << r["retained"].dump() << "\n"
              << "missing fraction after pretreatment "
              << r["pretreated"]["missing_fraction"].get<double>() << "\n";
    if (!r["oob_nrmse"].is_null()) {
      std::cout << "OOB NRMSE median " << r["oob_nrmse"]["median"].get<double>() << " over "
                << r["repetitions"].get<std::size_t>() << " repetitions\n";
    }
    if (!r["oob_pfc"].is_null()) {
      std::cout << "OOB PFC median " << r["oob_pfc"]["median"].get<double>() << "\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Missing-value imputation for mixed-type tables (KNN, MICE, missForest) and "
               "the benchmark harness around them.",
               "imputekit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ik_version()));

  AmputeArgs ampute;
  auto* amp = app.add_subcommand("ampute", "Remove a fraction of cells completely at random");
  ampute.source.add(amp);
  amp->add_option("--fraction", ampute.fraction, "Fraction of all cells to remove, in (0, 1)")
      ->capture_default_str();
  amp->add_option("--seed", ampute.seed, "Random seed")->required();
  amp->add_option("--output,-o", ampute.output, "Amputed CSV (default: standard output)");
  amp->add_option("--mask", ampute.mask, "Write the row,col,provenance mask CSV here");
  add_format(amp, ampute.format, {"csv", "json"}, "csv: table on standard output; json: summary");

  ImputeArgs impute;
  auto* imp = app.add_subcommand("impute", "Fill the missing cells of a table");
  impute.source.add(imp);
  imp->add_option("--method", impute.method, "knn, mice or missforest")
      ->check(CLI::IsMember({"knn", "mice", "missforest"}))
      ->capture_default_str();
  imp->add_option("--seed", impute.seed, "Random seed (required for mice and missforest)");
  imp->add_option("--threads", impute.threads, "Worker threads for mice chains or forest trees");
  imp->add_option("--params", impute.params, "Method parameters as a JSON object");
  imp->add_option("--k", impute.k, "knn: neighbours (default 5)");
  imp->add_option("--m", impute.m, "mice: chains (default 5)");
  imp->add_option("--maxit", impute.maxit, "mice: sweeps per chain (default 5)");
  imp->add_option("--pmm-donors", impute.pmm_donors, "mice: donor pool size (default 5)");
  imp->add_option("--ridge", impute.ridge, "mice: ridge penalty (default 1e-5)");
  imp->add_flag("--drop-collinear", impute.drop_collinear, "mice: drop near-collinear predictors");
  add_forest_flags(imp, impute);
  imp->add_option("--output,-o", impute.output, "Imputed CSV (default: standard output)");
  imp->add_option("--diagnostics", impute.diagnostics, "Write method diagnostics JSON here");
  add_format(imp, impute.format, {"csv", "json"}, "csv: table on standard output; json: diagnostics");

  DescribeArgs describe;
  auto* des = app.add_subcommand(
      "describe", "Missingness profile, structural indices and correlation strengths");
  describe.source.add(des);
  des->add_option("--output,-o", describe.output, "Write here (default: standard output)");
  add_format(des, describe.format, {"json", "text"}, "json or text");

  BenchArgs bench;
  auto* ben = app.add_subcommand("bench", "Run the amputation/imputation/scoring experiment");
  ben->add_option("--config", bench.config, "Experiment configuration JSON")->required();
  ben->add_option("--seed", bench.seed, "Override the configuration's master seed");
  ben->add_option("--trials", bench.trials, "Override the configuration's trial count");
  ben->add_option("--threads", bench.threads, "Worker threads (default: from the configuration)");
  ben->add_option("--output,-o", bench.output, "Report file (default: standard output)");
  ben->add_option("--raw", bench.raw, "Write one CSV row per trial here");
  ben->add_option("--csv", bench.csv, "Write the long-format summary CSV here");
  ben->add_flag("--include-raw", bench.include_raw, "Embed the trial records in the JSON report");
  ben->add_flag("--no-timing", bench.no_timing, "Leave wall-clock times out of the report");
  add_format(ben, bench.format, {"json", "csv"}, "json report or long-format csv");

  PipelineArgs pipeline;
  auto* pip = app.add_subcommand(
      "pipeline", "Aggregate, drop sparse columns, then repeat missforest with OOB estimates");
  pipeline.source.add(pip);
  pip->add_option("--seed", pipeline.seed, "Random seed")->required();
  pip->add_option("--key", pipeline.key, "Average rows per level of this column, then drop it");
  pip->add_option("--threshold", pipeline.threshold, "Drop columns missing more than this fraction")
      ->capture_default_str();
  pip->add_option("--repetitions", pipeline.repetitions, "missforest repetitions")
      ->capture_default_str();
  pip->add_option("--keep", pipeline.keep, "Repetition whose table is written (default: seeded)");
  pip->add_option("--threads", pipeline.forest.threads, "Worker threads for forest trees");
  add_forest_flags(pip, pipeline.forest);
  pip->add_option("--output,-o", pipeline.output, "Write the kept imputed table here");
  pip->add_option("--report", pipeline.report, "Write the JSON report here");
  pip->add_flag("--no-timing", pipeline.no_timing, "Leave wall-clock times out of the report");
  add_format(pip, pipeline.format, {"text", "json"}, "text summary or the json report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*amp) run_ampute(ampute);
    if (*imp) run_impute(impute);
    if (*des) run_describe(describe);
    if (*ben) run_bench(bench);
    if (*pip) run_pipeline(pipeline);
  } catch (const Failure& f) {
    return f.status;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
