#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "imputekit/table.hpp"

namespace imputekit {

/// Output of any imputation method: the completed table plus method-specific
/// diagnostics (iterations, deltas, fallbacks, OOB estimate, ...).
struct ImputationResult {
  MixedTable table;
  std::string method;
  double seconds = 0.0;
  nlohmann::ordered_json diagnostics = nlohmann::ordered_json::object();
};

}  // namespace imputekit
