#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "errors.hpp"
#include "harness.hpp"

using namespace scanmix;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("scanmix_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_rows(const fs::path& p) {
  std::ifstream f(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(f, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("scenario names") {
  CHECK(parse_scenario("cutoff_profile") == Scenario::cutoff_profile);
  CHECK(scenario_from_subcommand("profile") == Scenario::cutoff_profile);
  CHECK(subcommand_name(Scenario::restricted_scaling) == "restricted");
  CHECK_THROWS_AS(parse_scenario("nope"), ValidationError);
}

TEST_CASE("config parsing") {
  const auto c = parse_config_text(
      R"({"scenario":"critical_scaling","params_grid":{"n":[64,128,256],"k":[1],"beta":[1.0]},"seed":9})",
      Scenario::critical_scaling);
  CHECK(c.n == std::vector<int>{64, 128, 256});
  CHECK(c.seed == 9);
  CHECK(c.replicas == 10000);
  CHECK(grid_points(c).size() == 3);

  CHECK_THROWS_AS(parse_config_text(R"({"bogus":1})", Scenario::critical_scaling), ValidationError);
  CHECK_THROWS_AS(parse_config_text(R"({"params_grid":{"n":[10],"q":[1]}})", Scenario::critical_scaling),
                  ValidationError);
  CHECK_THROWS_AS(parse_config_text(R"({"scenario":"cutoff_profile"})", Scenario::critical_scaling),
                  ValidationError);
  CHECK_THROWS_AS(parse_config_text("{not json", Scenario::critical_scaling), ValidationError);

  auto bad = default_config(Scenario::cutoff_profile);
  bad.beta = {1.2};
  CHECK_THROWS_AS(validate_config(bad), ValidationError);
  bad = default_config(Scenario::critical_scaling);
  bad.n = {64, 64};
  CHECK_THROWS_AS(validate_config(bad), ValidationError);
  bad = default_config(Scenario::critical_scaling);
  bad.k = {0};
  CHECK_THROWS_AS(validate_config(bad), ValidationError);
  bad = default_config(Scenario::restricted_scaling);
  bad.beta = {0.9};
  CHECK_THROWS_AS(validate_config(bad), ValidationError);
  bad = default_config(Scenario::couple_trace);
  bad.pair.strategy = "magic";
  CHECK_THROWS_AS(validate_config(bad), ValidationError);
  for (auto s : {Scenario::cutoff_profile, Scenario::critical_scaling, Scenario::restricted_scaling,
                 Scenario::property_suite, Scenario::kernel_export, Scenario::couple_trace}) {
    CHECK_NOTHROW(validate_config(default_config(s)));
  }
}

TEST_CASE("record formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(2.0) == "2");
  ResultRecord r{"critical_scaling", 64, 1, 1.0, "standard", 10, "tmix_exact", 10.0, 0.0, 0, 1, 0.0};
  CHECK(to_csv_line(r) == "critical_scaling,64,1,1,standard,10,tmix_exact,10,0,0,1,0");
  CHECK(to_json(r)["kind"] == "tmix_exact");
  r.value = std::nan("");
  CHECK(to_json(r)["value"].is_null());
}

TEST_CASE("critical scenario writes the result schema") {
  const fs::path dir = scratch("critical");
  auto c = parse_config_text(R"({"params_grid":{"n":[32,64,128],"k":[1,2],"beta":[1.0]}})",
                             Scenario::critical_scaling);
  RunOptions opt;
  opt.out_dir = dir.string();
  const auto out = run_experiment(c, opt);
  REQUIRE(out.files.size() == 1);
  const auto rows = read_rows(out.files[0]);
  REQUIRE(!rows.empty());
  std::string header;
  for (std::size_t i = 0; i < rows[0].size(); ++i) header += (i ? "," : "") + rows[0][i];
  CHECK(header == kCsvHeader);
  const auto recs = read_csv_records(out.files[0]);
  CHECK(recs.size() == out.records.size());
  int fits = 0;
  for (const auto& r : recs) {
    if (r.kind == "fit_exponent_n") {
      ++fits;
      CHECK(r.n == 0);
    }
    CHECK(r.wall_time_ms == 0.0);
  }
  CHECK(fits == 2);
  fs::remove_all(dir);
}

TEST_CASE("runs are reproducible across worker counts") {
  auto c = parse_config_text(
      R"({"params_grid":{"n":[64,96],"k":[1,2],"beta":[0.5]},"replicas":300,"time_grid":{"points":4}})",
      Scenario::cutoff_profile);
  std::vector<std::string> contents;
  for (int w : {1, 4}) {
    const fs::path dir = scratch("repro_" + std::to_string(w));
    RunOptions opt;
    opt.out_dir = dir.string();
    opt.workers = w;
    const auto out = run_experiment(c, opt);
    contents.push_back(slurp(out.files[0]));
    fs::remove_all(dir);
  }
  CHECK(contents[0] == contents[1]);
  CHECK(contents[0].size() > 100);
}

TEST_CASE("json format") {
  const fs::path dir = scratch("json");
  RunOptions opt;
  opt.out_dir = dir.string();
  opt.format = "json";
  const auto out = run_experiment(default_config(Scenario::kernel_export), opt);
  const auto j = nlohmann::json::parse(slurp(out.files[0]));
  REQUIRE(j.is_array());
  CHECK(j[0]["scenario"] == "kernel_export");
  CHECK(fs::exists(out.files[1]));
  fs::remove_all(dir);
}

TEST_CASE("couple trace") {
  for (const char* strategy : {"rematch", "two_coordinate"}) {
    CAPTURE(strategy);
    const fs::path dir = scratch(std::string("couple_") + strategy);
    auto c = parse_config_text(std::string(R"({"params_grid":{"n":[120],"k":[3],"beta":[0.5]},)") +
                                   R"("pair":{"x":"random","x_tilde":"half","strategy":")" +
                                   strategy + R"("}})",
                               Scenario::couple_trace);
    RunOptions opt;
    opt.out_dir = dir.string();
    const auto out = run_experiment(c, opt);
    REQUIRE(out.files.size() == 2);
    const auto rows = read_rows(out.files[1]);
    REQUIRE(rows.size() > 2);
    CHECK(rows[0] == std::vector<std::string>{"t", "hamming", "mag_gap", "r_value", "rule",
                                              "stop_events"});
    bool matched = false;
    bool coalesced = false;
    std::string prev_rule = rows[1][4];
    int switches = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (coalesced) CHECK(r[1] == "0");
      if (r[1] == "0") coalesced = true;
      if (matched && r[5] == "0") CHECK(r[2] == "0");
      if (r[2] == "0") matched = true;
      if (i > 1 && r[4] != prev_rule) ++switches;
      prev_rule = r[4];
    }
    CHECK(coalesced);
    double reported = -1.0;
    for (const auto& rec : out.records) {
      if (rec.kind == "rule_switches") reported = rec.value;
    }
    CHECK(reported >= 1.0);
    CHECK(switches <= 2 * static_cast<int>(reported) + 1);
    fs::remove_all(dir);
  }
}

TEST_CASE("property suite through the harness") {
  const fs::path dir = scratch("props");
  RunOptions opt;
  opt.out_dir = dir.string();
  auto c = default_config(Scenario::property_suite);
  c.replicas = 2000;
  const auto out = run_experiment(c, opt);
  CHECK(out.failed_checks == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "property_report.json"));
  CHECK(report["passed"] == true);
  CHECK(report["checks"].size() == 15);
  fs::remove_all(dir);
}
