#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <string>

#include "imputekit/ampute.hpp"
#include "imputekit/bench.hpp"
#include "imputekit/imputekit.h"

struct ik_table {
  imputekit::MixedTable table;
};
struct ik_mask {
  imputekit::MissingMask mask;
};
struct ik_report {
  imputekit::BenchReport report;
};

namespace {

using imputekit::Error;
using imputekit::ErrorCode;
using imputekit::Json;

thread_local std::string last_error;
thread_local std::string last_kind;

ik_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnknownDataset:
    case ErrorCode::UnknownMethod:
      return IK_E_INVALID_ARGUMENT;
    case ErrorCode::Io:
    case ErrorCode::DatasetUnavailable:
      return IK_E_RUNTIME;
    default:
      return imputekit::is_data_error(code) ? IK_E_DATA : IK_E_RUNTIME;
  }
}

ik_status fail(ik_status status, const std::string& kind, const std::string& message) {
  last_kind = kind;
  last_error = message;
  return status;
}

template <class F>
ik_status guarded(F&& body) {
  last_error.clear();
  last_kind.clear();
  try {
    body();
    return IK_OK;
  } catch (const Error& e) {
    return fail(status_of(e.code()), imputekit::to_string(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(IK_E_INVALID_ARGUMENT, "InvalidArgument", std::string("JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(IK_E_RUNTIME, "OutOfMemory", "out of memory");
  } catch (const std::exception& e) {
    return fail(IK_E_RUNTIME, "Internal", e.what());
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

char* copy_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

Json parse_json(const char* text, const char* what) {
  if (text == nullptr || *text == '\0') return Json::object();
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " is not valid JSON: " + e.what());
  }
}

}  // namespace

extern "C" {

const char* ik_version(void) { return "1.0.0"; }
const char* ik_last_error(void) { return last_error.c_str(); }
const char* ik_last_error_kind(void) { return last_kind.c_str(); }
void ik_free_string(char* s) { std::free(s); }

ik_status ik_table_load_csv(const char* csv_path, const char* schema_path, ik_table** out) {
  return guarded([&] {
    require(csv_path, "csv_path");
    require(schema_path, "schema_path");
    require(out, "out");
    *out = nullptr;
    auto schema = imputekit::Schema::load(schema_path);
    *out = new ik_table{imputekit::load_csv(csv_path, schema)};
  });
}

ik_status ik_table_load_builtin(const char* name, ik_table** out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    *out = nullptr;
    *out = new ik_table{imputekit::load_builtin(name)};
  });
}

ik_status ik_table_write_csv(const ik_table* table, const char* path) {
  return guarded([&] {
    require(table, "table");
    require(path, "path");
    imputekit::write_csv(table->table, path);
  });
}

ik_status ik_table_to_csv(const ik_table* table, char** out) {
  return guarded([&] {
    require(table, "table");
    require(out, "out");
    *out = copy_string(imputekit::to_csv_string(table->table));
  });
}

ik_status ik_table_schema_json(const ik_table* table, char** out) {
  return guarded([&] {
    require(table, "table");
    require(out, "out");
    *out = copy_string(table->table.schema().to_json());
  });
}

size_t ik_table_rows(const ik_table* table) { return table ? table->table.rows() : 0; }
size_t ik_table_cols(const ik_table* table) { return table ? table->table.cols() : 0; }
size_t ik_table_missing_count(const ik_table* table) {
  return table ? table->table.missing_count() : 0;
}
void ik_table_free(ik_table* table) { delete table; }

ik_status ik_ampute_mcar(const ik_table* complete, double fraction, uint64_t seed,
                         ik_table** out_table, ik_mask** out_mask) {
  return guarded([&] {
    require(complete, "complete");
    require(out_table, "out_table");
    require(out_mask, "out_mask");
    *out_table = nullptr;
    *out_mask = nullptr;
    imputekit::AmputationSpec spec;
    spec.fraction = fraction;
    spec.seed = seed;
    auto result = imputekit::ampute_mcar(complete->table, spec);
    auto table = std::make_unique<ik_table>(ik_table{std::move(result.table)});
    *out_mask = new ik_mask{std::move(result.mask)};
    *out_table = table.release();
  });
}

ik_status ik_mask_read_csv(const char* path, const ik_table* table, ik_mask** out) {
  return guarded([&] {
    require(path, "path");
    require(table, "table");
    require(out, "out");
    *out = nullptr;
    *out = new ik_mask{imputekit::MissingMask::read_csv(path, table->table)};
  });
}

ik_status ik_mask_to_csv(const ik_mask* mask, char** out) {
  return guarded([&] {
    require(mask, "mask");
    require(out, "out");
    *out = copy_string(mask->mask.to_csv());
  });
}

size_t ik_mask_size(const ik_mask* mask) { return mask ? mask->mask.size() : 0; }
void ik_mask_free(ik_mask* mask) { delete mask; }

ik_status ik_impute(const ik_table* table, const char* method, const char* params_json,
                    uint64_t seed, ik_table** out_table, char** diagnostics_json) {
  return guarded([&] {
    require(table, "table");
    require(method, "method");
    require(out_table, "out_table");
    *out_table = nullptr;
    if (diagnostics_json) *diagnostics_json = nullptr;
    auto result = imputekit::impute(table->table, method, parse_json(params_json, "params"), seed);
    char* diagnostics = nullptr;
    if (diagnostics_json) {
      Json d{{"method", result.method}, {"seconds", result.seconds},
             {"diagnostics", result.diagnostics}};
      diagnostics = copy_string(d.dump());
    }
    *out_table = new ik_table{std::move(result.table)};
    if (diagnostics_json) *diagnostics_json = diagnostics;
  });
}

ik_status ik_method_defaults(const char* method, char** out_json) {
  return guarded([&] {
    require(method, "method");
    require(out_json, "out_json");
    *out_json = copy_string(imputekit::method_defaults(method).dump());
  });
}

ik_status ik_describe(const ik_table* table, char** out_json) {
  return guarded([&] {
    require(table, "table");
    require(out_json, "out_json");
    *out_json = copy_string(imputekit::describe_table(table->table).dump());
  });
}

ik_status ik_score(const ik_table* complete, const ik_table* imputed, const ik_mask* mask,
                   char** out_json) {
  return guarded([&] {
    require(complete, "complete");
    require(imputed, "imputed");
    require(mask, "mask");
    require(out_json, "out_json");
    const auto s = imputekit::score(complete->table, imputed->table, mask->mask);
    Json j{{"nrmse", s.nrmse ? Json(*s.nrmse) : Json(nullptr)},
           {"pfc", s.pfc ? Json(*s.pfc) : Json(nullptr)},
           {"quantitative_cells", s.quantitative_cells},
           {"categorical_cells", s.categorical_cells},
           {"variance_zero", s.variance_zero}};
    *out_json = copy_string(j.dump());
  });
}

ik_status ik_bench_run(const char* config_json, unsigned threads, ik_report** out) {
  return guarded([&] {
    require(config_json, "config_json");
    require(out, "out");
    *out = nullptr;
    auto config = imputekit::BenchConfig::from_json(parse_json(config_json, "config"));
    if (threads != 0) config.threads = threads;
    *out = new ik_report{imputekit::run_experiment(config)};
  });
}

ik_status ik_report_to_json(const ik_report* report, int include_raw, char** out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    *out = copy_string(report->report.to_json(include_raw != 0).dump(1) + "\n");
  });
}

ik_status ik_report_to_csv(const ik_report* report, char** out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    *out = copy_string(report->report.to_csv());
  });
}

ik_status ik_report_trials_csv(const ik_report* report, char** out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    *out = copy_string(report->report.trials_csv());
  });
}

void ik_report_free(ik_report* report) { delete report; }

ik_status ik_pipeline_run(const ik_table* input, const char* params_json, char** report_json,
                          ik_table** out_imputed) {
  return guarded([&] {
    require(input, "input");
    require(report_json, "report_json");
    *report_json = nullptr;
    if (out_imputed) *out_imputed = nullptr;
    const auto params = imputekit::pipeline_params_from_json(parse_json(params_json, "params"));
    auto result = imputekit::run_pipeline(input->table, params);
    auto table = std::make_unique<ik_table>(ik_table{std::move(result.imputed)});
    *report_json = copy_string(result.report.dump(1) + "\n");
    if (out_imputed) *out_imputed = table.release();
  });
}

}  // extern "C"
