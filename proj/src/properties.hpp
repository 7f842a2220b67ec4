#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace scanmix {

struct CheckResult {
  std::string name;
  std::string reference;
  bool passed = false;
  nlohmann::json detail;
};

struct PropertyOptions {
  std::uint64_t seed = 1;
  int workers = 1;
  std::int64_t replicas = 10'000;  // contraction and supermartingale checks
  bool self_in_field = false;      // fault injection
};

std::vector<CheckResult> run_property_suite(const PropertyOptions& options);

/// Names of the checks in report order.
std::vector<std::string> property_check_names();

/// Runs a single named check. Throws ValidationError for an unknown name.
CheckResult run_property_check(const std::string& name, const PropertyOptions& options);

nlohmann::json property_report(const std::vector<CheckResult>& results,
                               const PropertyOptions& options);

}  // namespace scanmix
