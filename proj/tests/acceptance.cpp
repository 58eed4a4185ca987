// Acceptance run: one PASS/FAIL line per criterion, INFO lines for checks
// that are reported but do not gate. Exit status is non-zero when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "imputekit/ampute.hpp"
#include "imputekit/bench.hpp"
#include "imputekit/chained.hpp"
#include "imputekit/error.hpp"
#include "imputekit/forest.hpp"
#include "imputekit/knn.hpp"
#include "imputekit/metrics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace imputekit;

namespace {

// Tolerances and budgets.
constexpr double kIndexTol = 0.02;         // rho_abs, sd_abs
constexpr double kSkewTol = 0.03;          // skew_abs
constexpr double kIndicesSeconds = 1.0;
constexpr std::size_t kDropped = 3, kRetained = 8;
constexpr double kRetainedMissing = 0.0375, kRetainedMissingTol = 0.001;
constexpr double kPipelineSeconds = 5.0;
constexpr double kPfcAllowance = 0.02;
constexpr std::size_t kTrials = 100;
constexpr double kIrisSeconds = 600.0;
constexpr double kRockSeconds = 300.0;
constexpr double kOobTol = 0.05;
constexpr int kOobSeeds = 20;
constexpr double kOobSeconds = 120.0;
constexpr int kFuzzTables = 1000;
constexpr double kFuzzTol = 1e-9;
constexpr double kChi2Quantile = 3.090232306;  // standard normal, upper 0.001
constexpr unsigned kManyWorkers = 8;
constexpr std::uint64_t kSeed = 20240611;

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  failures += !o.pass;
  std::printf("%s %d %s: %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(),
              seconds_since(start));
  std::fflush(stdout);
}

void info(const std::string& line) {
  std::printf("INFO   %s\n", line.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

bool within(double value, double target, double tol) { return std::abs(value - target) <= tol + 1e-12; }

// --- 1 ----------------------------------------------------------------------------

struct PublishedIndices {
  double rho, sd, skew;
};

std::string indices_text(const StructuralIndices& s) {
  return fmt("%.4f/%.4f/%.4f", s.rho_abs, s.sd_abs, s.skew_abs);
}

std::optional<SkewVariant> matching_variant(const MixedTable& t, const PublishedIndices& published, std::string& text) {
  std::optional<SkewVariant> match;
  for (auto v : {SkewVariant::Standardized, SkewVariant::AsWritten}) {
    const auto s = structural_indices(t, v);
    text += std::string(text.empty() ? "" : ", ") + to_string(v) + " " + indices_text(s);
    if (!match && within(s.rho_abs, published.rho, kIndexTol) && within(s.sd_abs, published.sd, kIndexTol) &&
        within(s.skew_abs, published.skew, kSkewTol)) {
      match = v;
    }
  }
  return match;
}

Outcome criterion_indices() {
  const auto start = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = true;
  const StructuralIndices default_variant = structural_indices(load_builtin("rock"));
  for (const auto& [name, published] : {std::pair<std::string, PublishedIndices>{"rock", {0.52, 0.22, -0.07}},
                                    std::pair<std::string, PublishedIndices>{"concrete", {0.25, 0.17, 1.52}}}) {
    detail += detail.empty() ? "" : "; ";
    try {
      std::string text;
      const auto match = matching_variant(load_builtin(name), published, text);
      const bool is_default = match && *match == default_variant.skew_variant;
      detail += name + " " + text + (match ? std::string(" matches ") + to_string(*match) : " no match");
      if (match && !is_default) detail += " (not the default)";
      pass = pass && is_default;
    } catch (const Error& e) {
      detail += name + " " + to_string(e.code()) + ": " + e.what();
      pass = false;
    }
  }
  const double elapsed = seconds_since(start);
  if (elapsed >= kIndicesSeconds) {
    detail += fmt("; took %.2fs", elapsed);
    pass = false;
  }
  for (const char* name : {"wine", "parkinson"}) {
    try {
      info(std::string("1 ") + name + " indices " + indices_text(structural_indices(load_builtin(name))));
    } catch (const Error& e) {
      info(std::string("1 ") + name + " " + to_string(e.code()));
    }
  }
  return {pass, detail};
}

// --- 2 ----------------------------------------------------------------------------

Outcome criterion_pipeline() {
  PipelineParams p;
  p.threshold = 0.90;
  p.repetitions = 1;
  p.forest.seed = kSeed;
  const auto start = std::chrono::steady_clock::now();
  const auto result = run_pipeline(load_builtin("wwtp-fixture"), p);
  const double elapsed = seconds_since(start);
  const auto& r = result.report;
  const double missing = r.at("pretreated").at("missing_fraction").get<double>();
  const bool pass = r.at("dropped").size() == kDropped && r.at("retained").size() == kRetained &&
                    within(missing, kRetainedMissing, kRetainedMissingTol) && !result.imputed.has_missing() &&
                    elapsed < kPipelineSeconds;
  return {pass, "dropped " + r.at("dropped").dump() + fmt(", retained %zu, missingness %.4f%%, %.2fs",
                                                         r.at("retained").size(), 100 * missing, elapsed)};
}

// --- 3, 4 -------------------------------------------------------------------------

struct CellMeans {
  std::optional<double> nrmse, pfc;
};

CellMeans cell_means(const BenchReport& r, const std::string& method, double fraction) {
  for (const auto& c : r.summary.at("cells")) {
    if (c.at("method") != method || c.at("fraction").get<double>() != fraction) continue;
    CellMeans m;
    if (!c.at("nrmse").is_null()) m.nrmse = c.at("nrmse").at("mean").get<double>();
    if (!c.at("pfc").is_null()) m.pfc = c.at("pfc").at("mean").get<double>();
    return m;
  }
  throw Error(ErrorCode::InvalidArgument, "no cell for " + method);
}

BenchConfig directional_config(const std::string& dataset, std::vector<double> fractions,
                               std::vector<std::string> methods) {
  BenchConfig c;
  c.datasets = {{dataset, "", ""}};
  c.fractions = std::move(fractions);
  c.methods.clear();
  for (auto& m : methods) c.methods.push_back({m, Json::object()});
  c.trials = kTrials;
  c.seed = kSeed;
  c.threads = std::max(1u, std::thread::hardware_concurrency());
  c.include_timing = false;
  return c;
}

Outcome criterion_iris() {
  const auto start = std::chrono::steady_clock::now();
  const auto config = directional_config("iris", {0.05, 0.10}, {"knn", "missforest"});
  const auto r = run_experiment(config);
  bool pass = r.summary.at("failures").empty();
  std::string detail;
  for (double f : config.fractions) {
    const auto mf = cell_means(r, "missforest", f), knn = cell_means(r, "knn", f);
    pass = pass && *mf.nrmse < *knn.nrmse && *mf.pfc <= *knn.pfc + kPfcAllowance;
    detail += fmt("%sfraction %.2f NRMSE mf %.4f vs knn %.4f, PFC mf %.4f vs knn %.4f",
                  detail.empty() ? "" : "; ", f, *mf.nrmse, *knn.nrmse, *mf.pfc, *knn.pfc);
  }
  const double elapsed = seconds_since(start);
  return {pass && elapsed < kIrisSeconds, detail};
}

Outcome criterion_rock() {
  const auto start = std::chrono::steady_clock::now();
  const auto r = run_experiment(directional_config("rock", {0.10}, {"mice", "missforest"}));
  const auto mf = cell_means(r, "missforest", 0.10), mice = cell_means(r, "mice", 0.10);
  const double elapsed = seconds_since(start);
  const bool pass = r.summary.at("failures").empty() && *mf.nrmse < *mice.nrmse && elapsed < kRockSeconds;
  return {pass, fmt("NRMSE mf %.4f vs mice %.4f, decrease %.1f%%", *mf.nrmse, *mice.nrmse,
                    100 * (1 - *mf.nrmse / *mice.nrmse))};
}

// --- 5 ----------------------------------------------------------------------------

// Friedman-style regression: y = 10 sin(pi x1 x2) + 20 (x3 - 1/2)^2 + 10 x4 + 5 x5 + noise,
// with a fifth of the responses removed.
Outcome criterion_oob() {
  const auto start = std::chrono::steady_clock::now();
  constexpr std::size_t rows = 200, held_out = 40;
  double sum_abs = 0.0, sum_signed = 0.0;
  for (int s = 0; s < kOobSeeds; ++s) {
    Rng rng(Rng::derive(kSeed, "oob/" + std::to_string(s)));
    std::vector<std::vector<double>> data(6, std::vector<double>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
      for (int c = 0; c < 5; ++c) data[c][r] = rng.uniform();
      const auto& x = data;
      data[5][r] = 10 * std::sin(M_PI * x[0][r] * x[1][r]) + 20 * std::pow(x[2][r] - 0.5, 2) +
                   10 * x[3][r] + 5 * x[4][r] + rng.normal();
    }
    std::vector<Column> columns;
    for (int c = 0; c < 5; ++c) columns.push_back(test::quant("x" + std::to_string(c + 1)));
    columns.push_back(test::quant("y"));
    const auto complete = test::table(columns, data);
    auto incomplete = complete;
    std::vector<std::size_t> order(rows);
    for (std::size_t i = 0; i < rows; ++i) order[i] = i;
    for (std::size_t i = 0; i < held_out; ++i) std::swap(order[i], order[i + rng.below(rows - i)]);
    std::vector<MaskEntry> entries;
    for (std::size_t i = 0; i < held_out; ++i) {
      incomplete.set(order[i], 5, Missing{});
      entries.push_back({order[i], 5, Provenance::Amputed});
    }
    const MissingMask mask(incomplete, entries);
    ForestParams params;
    params.seed = rng.next_u64();
    const auto result = missforest_impute(incomplete, params);
    const double truth = *nrmse(complete, result.result.table, mask);
    const double oob = *result.oob.nrmse;
    sum_abs += std::abs(oob - truth);
    sum_signed += oob - truth;
  }
  const double mean_abs = sum_abs / kOobSeeds, mean_signed = sum_signed / kOobSeeds;
  const double elapsed = seconds_since(start);
  return {mean_abs <= kOobTol && elapsed < kOobSeconds,
          fmt("mean |OOB - held-out| %.4f (mean signed %.4f) over %d seeds", mean_abs, mean_signed, kOobSeeds)};
}

// --- 6 ----------------------------------------------------------------------------

Outcome criterion_fuzz() {
  Rng rng(kSeed);
  std::size_t mismatches = 0, index_tables = 0, skew_compared = 0;
  auto check = [&](bool ok) { mismatches += !ok; };
  for (int i = 0; i < kFuzzTables; ++i) {
    const auto f = oracle::fuzz_case(rng);
    const auto s = score(f.complete, f.imputed, f.mask);
    const auto n = oracle::nrmse(f.complete, f.imputed, f.mask);
    check(s.nrmse.has_value() == n.value.has_value() && s.variance_zero == n.variance_zero);
    if (s.nrmse && n.value) check(oracle::close(*s.nrmse, *n.value, kFuzzTol));
    const auto p = oracle::pfc(f.complete, f.imputed, f.mask);
    check(s.pfc.has_value() == p.has_value());
    if (s.pfc && p) check(oracle::close(*s.pfc, *p, kFuzzTol));

    for (std::size_t a = 0; a + 1 < f.complete.cols(); ++a) {
      const auto x = f.complete.column(a), y = f.complete.column(a + 1);
      const std::vector<double> xv(x.begin(), x.end()), yv(y.begin(), y.end());
      const auto expected = oracle::pearson(xv, yv);
      try {
        const double r = pearson(x, y);
        check(expected && oracle::close(r, *expected, kFuzzTol));
      } catch (const Error&) {
        check(!expected);
      }
    }

    const auto expected = oracle::structural_indices(f.complete);
    try {
      const auto st = structural_indices(f.complete, SkewVariant::Standardized);
      const auto aw = structural_indices(f.complete, SkewVariant::AsWritten);
      check(expected.has_value());
      if (expected) {
        ++index_tables;
        check(oracle::close(st.rho_abs, expected->rho_abs, kFuzzTol));
        check(oracle::close(st.sd_abs, expected->sd_abs, kFuzzTol));
        // The standardized skew divides by sd^3, which amplifies rounding
        // when the |rho| values nearly coincide; compare it only when sd is
        // well away from zero.
        if (expected->sd_abs > 1e-3) {
          ++skew_compared;
          check(oracle::close(st.skew_abs, expected->skew_standardized, kFuzzTol));
          check(oracle::close(aw.skew_abs, expected->skew_as_written, kFuzzTol));
        }
      }
    } catch (const Error&) {
      check(!expected);
    }

    const double a = 0.1 + rng.uniform(), b = 0.1 + rng.uniform();
    check(oracle::close(relative_gap(a, b), oracle::relative_gap(a, b), kFuzzTol));

    std::vector<double> samples;
    for (std::size_t r = 0; r < f.complete.rows(); ++r) {
      for (std::size_t c = 0; c < f.complete.cols(); ++c) samples.push_back(f.complete.raw(r, c));
    }
    const auto got = boxplot_stats(samples);
    const auto want = oracle::boxplot(samples);
    for (auto member : {&BoxplotStats::min, &BoxplotStats::q1, &BoxplotStats::median, &BoxplotStats::q3,
                        &BoxplotStats::max, &BoxplotStats::mean, &BoxplotStats::sd, &BoxplotStats::whisker_low,
                        &BoxplotStats::whisker_high}) {
      check(oracle::close(got.*member, want.*member, kFuzzTol));
    }
  }
  return {mismatches == 0, fmt("%zu mismatches over %d tables (indices on %zu, skew on %zu)", mismatches,
                               kFuzzTables, index_tables, skew_compared)};
}

// --- 7 ----------------------------------------------------------------------------

double chi2_critical(double df) {
  const double a = 2.0 / (9.0 * df);
  return df * std::pow(1.0 - a + kChi2Quantile * std::sqrt(a), 3.0);
}

std::string amputation_invariants() {
  Rng rng(kSeed);
  const auto t = test::random_table(rng, 20, 5);
  std::vector<double> hits(100, 0.0);
  constexpr int draws = 1000;
  for (int s = 0; s < draws; ++s) {
    const auto a = ampute_mcar(t, {0.10, static_cast<std::uint64_t>(s)});
    if (a.mask.size() != 10 || a.table.missing_count() != 10) return "inexact amputation count";
    for (const auto& e : a.mask.entries()) hits[e.row * 5 + e.col] += 1.0;
  }
  double chi2 = 0.0;
  for (double h : hits) chi2 += (h - draws * 0.10) * (h - draws * 0.10) / (draws * 0.10);
  if (chi2 >= chi2_critical(99)) return fmt("uniformity chi2 %.1f", chi2);
  return "";
}

std::string gower_invariants() {
  Rng rng(kSeed + 1);
  for (int round = 0; round < 30; ++round) {
    auto t = test::random_table(rng, 8, 5);
    for (int i = 0; i < 8; ++i) t.set(rng.below(8), rng.below(5), Missing{});
    const auto ranges = ColumnRanges::from_table(t);
    for (std::size_t a = 0; a < t.rows(); ++a) {
      for (std::size_t b = 0; b < t.rows(); ++b) {
        const auto s = gower_similarity(t, a, b, ranges, t.cols());
        const auto sym = gower_similarity(t, b, a, ranges, t.cols());
        if (s.has_value() != sym.has_value()) return "asymmetric definedness";
        if (s && (*s < 0.0 || *s > 1.0 || *s != *sym)) return "similarity outside [0,1] or asymmetric";
      }
      bool complete = true;
      for (std::size_t c = 0; c < t.cols(); ++c) complete = complete && !t.is_missing(a, c);
      if (complete && *gower_similarity(t, a, a, ranges, t.cols()) != 1.0) return "self-similarity below 1";
    }
  }
  return "";
}

std::string containment_invariants() {
  for (const char* name : {"iris", "rock", "hayes"}) {
    const auto complete = load_builtin(name);
    for (std::uint64_t s = 0; s < 3; ++s) {
      const auto a = ampute_mcar(complete, {0.10, s});
      for (const char* method : {"knn", "mice", "missforest"}) {
        const auto r = impute(a.table, method, Json::object(), s + 1);
        for (const auto& e : a.mask.entries()) {
          const auto col = a.table.column(e.col);
          const double v = r.table.raw(e.row, e.col);
          bool ok;
          if (a.table.kind(e.col).is_quantitative()) {
            double lo = INFINITY, hi = -INFINITY;
            for (double x : col) {
              if (!std::isnan(x)) lo = std::min(lo, x), hi = std::max(hi, x);
            }
            ok = v >= lo && v <= hi;
          } else {
            ok = std::find(col.begin(), col.end(), v) != col.end();
          }
          if (!ok) return std::string(method) + " left the observed range on " + name;
        }
      }
    }
  }
  return "";
}

std::string pmm_invariants() {
  const auto rock = load_builtin("rock");
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto a = ampute_mcar(rock, {0.15, s});
    const auto r = mice_impute(a.table, {.m = 3, .seed = s});
    for (const auto& chain : r.chains) {
      for (const auto& e : a.mask.entries()) {
        if (!a.table.kind(e.col).is_quantitative()) continue;
        const auto col = a.table.column(e.col);
        if (std::find(col.begin(), col.end(), chain.table.raw(e.row, e.col)) == col.end()) {
          return "pmm value is not an observed donor value";
        }
      }
    }
  }
  return "";
}

std::string determinism_invariants() {
  BenchConfig c;
  c.datasets = {{"iris", "", ""}, {"rock", "", ""}};
  c.fractions = {0.05, 0.10};
  c.methods = {{"knn", Json::object()}, {"mice", {{"m", 2}}}, {"missforest", {{"ntree", 20}}}};
  c.trials = 3;
  c.seed = kSeed;
  c.include_timing = false;
  c.threads = 1;
  const auto one = run_experiment(c).to_json(true).dump();
  c.threads = kManyWorkers;
  const auto many = run_experiment(c).to_json(true).dump();
  return one == many ? "" : "bench report differs between 1 and 8 workers";
}

Outcome criterion_invariants() {
  std::string detail;
  bool pass = true;
  for (const auto& [name, check] : std::vector<std::pair<std::string, std::function<std::string()>>>{
           {"amputation", amputation_invariants},
           {"gower", gower_invariants},
           {"containment", containment_invariants},
           {"pmm", pmm_invariants},
           {"determinism", determinism_invariants}}) {
    const auto problem = check();
    pass = pass && problem.empty();
    detail += (detail.empty() ? "" : ", ") + name + (problem.empty() ? " ok" : ": " + problem);
  }
  return {pass, detail};
}

// --- 8 ----------------------------------------------------------------------------

Outcome criterion_schema() {
  BenchConfig c;
  c.datasets = {{"rock", "", ""}, {"iris", "", ""}, {"hayes", "", ""}};
  c.fractions = {0.05, 0.10};
  c.methods = {{"knn", Json::object()}, {"mice", {{"m", 2}}}, {"missforest", {{"ntree", 10}}}};
  c.trials = 2;
  c.seed = kSeed;
  const auto j = run_experiment(c).to_json(true);
  std::vector<std::string> missing;
  auto require = [&](const Json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
      if (!obj.contains(k)) missing.push_back(where + "." + k);
    }
  };
  require(j, "report", {"config", "datasets", "cells", "table4", "table5", "table6", "figure5", "failures", "trials"});
  if (!missing.empty()) return {false, "missing " + Json(missing).dump()};
  for (const auto& cell : j.at("cells")) {
    require(cell, "cells[]", {"dataset", "method", "fraction", "trials", "failed", "nrmse", "pfc", "time_s"});
    for (const char* m : {"nrmse", "pfc", "time_s"}) {
      if (cell.at(m).is_null()) continue;
      for (const auto& stat : kBoxplotStatistics) {
        if (!cell.at(m).contains(stat)) missing.push_back(std::string("cells[].") + m + "." + stat);
      }
    }
  }
  for (const auto& row : j.at("table4")) require(row, "table4[]", {"method", "fraction", "mean_time_s"});
  for (const auto& d : j.at("table5").at("datasets")) {
    require(d, "table5.datasets[]", {"dataset", "type", "methods"});
    for (const auto& m : d.at("methods")) {
      require(m, "table5.datasets[].methods[]", {"method", "mean_time_s", "rank", "mean_rank"});
    }
  }
  if (j.at("table5").at("groups").size() != 3) missing.push_back("table5.groups (3 types)");
  for (const auto& g : j.at("table5").at("groups")) require(g, "table5.groups[]", {"type", "methods"});
  // Qualitative data have no quantitative pair, hence no table6 row.
  if (j.at("table6").size() != 2) missing.push_back("table6 rows");
  for (const auto& row : j.at("table6")) {
    require(row, "table6[]", {"dataset", "type", "rows", "cols", "rho_abs", "sd_abs", "skew_abs",
                              "mean_nrmse", "reference", "gap_vs_reference"});
  }
  if (j.at("figure5").empty()) missing.push_back("figure5 rows");
  for (const auto& row : j.at("figure5")) {
    require(row, "figure5[]", {"group", "metric", "fraction", "method", "reference", "gap"});
  }
  for (const auto& t : j.at("trials")) require(t, "trials[]", {"nrmse", "pfc", "time_s"});
  std::sort(missing.begin(), missing.end());
  missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
  return {missing.empty(), missing.empty() ? "cells, table4, table5, table6, figure5 and raw trials present"
                                           : "missing " + Json(missing).dump()};
}

}  // namespace

int main() {
  report(1, "structural indices of rock and concrete", criterion_indices);
  report(2, "case-study pipeline on the wwtp fixture", criterion_pipeline);
  report(3, "iris: missforest vs knn", criterion_iris);
  report(4, "rock: missforest vs mice", criterion_rock);
  report(5, "out-of-bag fidelity", criterion_oob);
  report(6, "metric oracle fuzz", criterion_fuzz);
  report(7, "invariant suites", criterion_invariants);
  report(8, "report schema", criterion_schema);
  std::printf("%s: %d of 8 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
