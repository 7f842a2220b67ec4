#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "model.hpp"

namespace scanmix {

enum class Scenario {
  cutoff_profile,
  critical_scaling,
  restricted_scaling,
  property_suite,
  kernel_export,
  couple_trace,
};

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view name);
/// CLI subcommand name (profile, critical, restricted, properties, kernel, couple).
std::string_view subcommand_name(Scenario s);
Scenario scenario_from_subcommand(std::string_view name);

struct TimeGridSpec {
  double c_min = 0.3;
  double c_max = 2.0;
  int points = 15;
};

struct PairSpec {
  std::string x = "plus";        // plus | minus | random | half | balanced
  std::string x_tilde = "minus";
  std::string strategy = "rematch";  // rematch | two_coordinate
  std::int64_t t_max = 0;            // 0: 10 n ln n / k
};

struct ExperimentConfig {
  Scenario scenario = Scenario::property_suite;
  std::vector<int> n;
  std::vector<int> k;
  std::vector<double> beta;
  std::optional<Mode> mode;
  TimeGridSpec time_grid;
  std::int64_t replicas = 10'000;
  std::int64_t hitting_replicas = 1'000;
  std::uint64_t seed = 1;
  std::string output = "results";
  int workers = 1;
  std::string format = "csv";
  double eps = 0.25;
  double alpha = 0.5;
  bool exact = true;
  bool monte_carlo = true;
  std::string fault;  // "" or "self_in_field"
  PairSpec pair;
};

/// Defaults per scenario (the grids used by the acceptance suite).
ExperimentConfig default_config(Scenario scenario);

/// Parses a JSON config on top of the scenario defaults. Unknown keys are errors.
ExperimentConfig parse_config(const nlohmann::json& j, Scenario scenario);
ExperimentConfig parse_config_text(std::string_view text, Scenario scenario);

/// Checks every grid point and the scenario-specific requirements. Throws ValidationError.
void validate_config(const ExperimentConfig& config);

/// Parameters for every grid point, in deterministic (n, k, beta) order.
std::vector<ModelParams> grid_points(const ExperimentConfig& config);

struct ResultRecord {
  std::string scenario;
  int n = 0;
  int k = 0;
  double beta = 0.0;
  std::string mode;
  std::int64_t t = 0;
  std::string kind;
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t replicas = 0;
  std::uint64_t seed = 0;
  double wall_time_ms = 0.0;
};

inline constexpr std::string_view kCsvHeader =
    "scenario,n,k,beta,mode,t,kind,value,std_error,replicas,seed,wall_time_ms";

std::string format_double(double x);
std::string to_csv_line(const ResultRecord& r);
nlohmann::json to_json(const ResultRecord& r);
std::vector<ResultRecord> read_csv_records(const std::string& path);

struct RunOptions {
  std::optional<int> workers;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> fault;
  bool record_timing = false;
};

struct RunOutcome {
  std::vector<std::string> files;
  std::vector<ResultRecord> records;
  int failed_checks = 0;
};

/// Applies overrides, validates, runs, and writes the result files.
RunOutcome run_experiment(ExperimentConfig config, const RunOptions& options);

/// Stable stream identifier for a grid job.
std::uint64_t job_stream_id(Scenario s, const ModelParams& p, std::string_view tag);

}  // namespace scanmix
