#include <chrono>

#include "imputekit/bench.hpp"
#include "imputekit/chained.hpp"
#include "imputekit/knn.hpp"

namespace imputekit {

namespace {

void reject_unknown(const Json& params, const Json& defaults, const std::string& method) {
  if (!params.is_object()) {
    throw Error(ErrorCode::InvalidArgument, method + " parameters must be a JSON object");
  }
  for (const auto& [key, value] : params.items()) {
    if (!defaults.contains(key)) {
      throw Error(ErrorCode::InvalidArgument, "unknown " + method + " parameter '" + key + "'");
    }
  }
}

template <class T>
T get(const Json& params, const Json& defaults, const char* key) {
  const Json& v = params.contains(key) ? params.at(key) : defaults.at(key);
  try {
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, unsigned>) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw Error(ErrorCode::InvalidArgument, "");
      }
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument,
                std::string("parameter '") + key + "' has the wrong type: " + v.dump());
  }
}

std::size_t get_auto(const Json& params, const Json& defaults, const char* key) {
  const Json& v = params.contains(key) ? params.at(key) : defaults.at(key);
  if (v.is_string() && v.get<std::string>() == "auto") return 0;
  return get<std::size_t>(params, defaults, key);
}

}  // namespace

Json method_defaults(const std::string& method) {
  if (method == "knn") return {{"k", 5}};
  if (method == "mice") {
    return {{"m", 5}, {"maxit", 5}, {"pmm_donors", 5}, {"ridge", 1e-5},
            {"drop_collinear", false}, {"threads", 1}};
  }
  if (method == "missforest") {
    return {{"ntree", 100}, {"mtry", "auto"}, {"min_node_size", "auto"}, {"max_iter", 10},
            {"bootstrap", true}, {"threads", 1}};
  }
  throw Error(ErrorCode::UnknownMethod, "unknown method '" + method + "'");
}

ForestParams forest_params_from_json(const Json& params, std::uint64_t seed) {
  const Json defaults = method_defaults("missforest");
  reject_unknown(params, defaults, "missforest");
  ForestParams p;
  p.ntree = get<std::size_t>(params, defaults, "ntree");
  p.mtry = get_auto(params, defaults, "mtry");
  p.min_node_size = get_auto(params, defaults, "min_node_size");
  p.max_iter = get<std::size_t>(params, defaults, "max_iter");
  p.bootstrap = get<bool>(params, defaults, "bootstrap");
  p.threads = get<unsigned>(params, defaults, "threads");
  p.seed = seed;
  return p;
}

ImputationResult impute(const MixedTable& table, const std::string& method, const Json& params,
                        std::uint64_t seed) {
  const Json defaults = method_defaults(method);
  const Json& given = params.is_null() ? Json::object() : params;
  reject_unknown(given, defaults, method);
  const auto start = std::chrono::steady_clock::now();
  ImputationResult result;
  if (method == "knn") {
    KnnParams p;
    p.k = get<std::size_t>(given, defaults, "k");
    result = knn_impute(table, p);
  } else if (method == "mice") {
    MiceParams p;
    p.m = get<std::size_t>(given, defaults, "m");
    p.maxit = get<std::size_t>(given, defaults, "maxit");
    p.pmm_donors = get<std::size_t>(given, defaults, "pmm_donors");
    p.ridge = get<double>(given, defaults, "ridge");
    p.drop_collinear = get<bool>(given, defaults, "drop_collinear");
    p.threads = get<unsigned>(given, defaults, "threads");
    p.seed = seed;
    result = std::move(mice_impute(table, p).pooled);
  } else {
    result = std::move(missforest_impute(table, forest_params_from_json(given, seed)).result);
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace imputekit
