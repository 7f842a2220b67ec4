#include "harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "constants.hpp"
#include "couplings.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "kernels.hpp"
#include "parallel.hpp"
#include "properties.hpp"

namespace scanmix {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ScenarioName {
  Scenario scenario;
  std::string_view name;
  std::string_view subcommand;
};

constexpr ScenarioName kScenarios[] = {
    {Scenario::cutoff_profile, "cutoff_profile", "profile"},
    {Scenario::critical_scaling, "critical_scaling", "critical"},
    {Scenario::restricted_scaling, "restricted_scaling", "restricted"},
    {Scenario::property_suite, "property_suite", "properties"},
    {Scenario::kernel_export, "kernel_export", "kernel"},
    {Scenario::couple_trace, "couple_trace", "couple"},
};

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

double theory_time(const ModelParams& p) {
  const double n = p.n;
  return n * std::log(n) / (2.0 * p.k * (1.0 - p.beta));
}

bool within_budget(const ModelParams& p) {
  const KernelBudget b;
  const std::int64_t w = static_cast<std::int64_t>(p.k) + 1;
  return p.n <= b.max_n && static_cast<std::int64_t>(p.n) * w * w * w <= b.max_work;
}

ResultRecord base_record(const ExperimentConfig& c, const ModelParams& p) {
  ResultRecord r;
  r.scenario = std::string(to_string(c.scenario));
  r.n = p.n;
  r.k = p.k;
  r.beta = p.beta;
  r.mode = std::string(to_string(p.mode));
  r.seed = c.seed;
  return r;
}

ResultRecord make_record(const ExperimentConfig& c, const ModelParams& p, std::int64_t t,
                         std::string kind, double value, double se = 0.0,
                         std::int64_t replicas = 0) {
  ResultRecord r = base_record(c, p);
  r.t = t;
  r.kind = std::move(kind);
  r.value = value;
  r.std_error = se;
  r.replicas = replicas;
  return r;
}

template <class T>
std::vector<T> read_list(const json& v, const char* key) {
  if (v.is_array()) {
    std::vector<T> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ValidationError(std::string(key) + " entries must be numbers");
      out.push_back(e.get<T>());
    }
    return out;
  }
  if (v.is_number()) return {v.get<T>()};
  throw ValidationError(std::string(key) + " must be a number or a list of numbers");
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                std::string_view where) {
  if (!obj.is_object()) throw ValidationError(std::string(where) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

std::string normalize_fault(const std::string& f) {
  if (f.empty() || f == "none") return "";
  if (f == "self_in_field" || f == "self-spin" || f == "self_spin") return "self_in_field";
  throw ValidationError("unknown fault: " + f);
}

// Geometric grid of c values, preceded by c = 0.
std::vector<double> c_grid(const TimeGridSpec& g) {
  std::vector<double> cs{0.0};
  const double ratio = std::pow(g.c_max / g.c_min, 1.0 / (g.points - 1));
  for (int i = 0; i < g.points; ++i) cs.push_back(g.c_min * std::pow(ratio, i));
  cs.back() = g.c_max;
  return cs;
}

// Interpolated time at which a nonincreasing series first falls to `level`.
std::optional<double> crossing(const std::vector<ProfilePoint>& series, double level) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].d > level) continue;
    if (i == 0) return static_cast<double>(series[0].t);
    const auto& a = series[i - 1];
    const auto& b = series[i];
    const double frac = (a.d - level) / (a.d - b.d);
    return static_cast<double>(a.t) + frac * static_cast<double>(b.t - a.t);
  }
  return std::nullopt;
}

struct JobContext {
  const ExperimentConfig& config;
  int inner_workers = 1;
  fs::path out_dir;
};

using JobResult = std::vector<ResultRecord>;

JobResult cutoff_job(const JobContext& ctx, const ModelParams& p) {
  const ExperimentConfig& c = ctx.config;
  JobResult out;
  const double tn = theory_time(p);
  const std::vector<double> cs = c_grid(c.time_grid);
  std::vector<std::int64_t> times;
  for (double cv : cs) times.push_back(std::llround(cv * tn));
  std::vector<std::int64_t> unique_times = times;
  unique_times.erase(std::unique(unique_times.begin(), unique_times.end()), unique_times.end());

  out.push_back(make_record(c, p, 0, "t_n", tn));

  if (c.exact && within_budget(p)) {
    const MagKernel K = build_kernel(p);
    const std::vector<int> starts = extremal_starts(K);
    const auto t_cap = static_cast<std::int64_t>(std::ceil(50.0 * tn));
    const std::int64_t t_grid_max = unique_times.back();
    std::vector<ProfilePoint> series = exact_d_series(K, starts, std::max(t_grid_max, t_cap), 0.2);
    std::vector<std::int64_t> beyond;
    for (std::int64_t t : unique_times) {
      if (t >= static_cast<std::int64_t>(series.size())) beyond.push_back(t);
    }
    // The series stops once d falls below 0.2; later grid times are evolved directly.
    std::vector<double> beyond_d(beyond.size(), 0.0);
    for (int m0 : starts) {
      const auto prof = exact_d_profile(K, m0, beyond);
      for (std::size_t i = 0; i < prof.size(); ++i) beyond_d[i] = std::max(beyond_d[i], prof[i].d);
    }
    for (std::int64_t t : unique_times) {
      double d = 0.0;
      if (t < static_cast<std::int64_t>(series.size())) {
        d = series[static_cast<std::size_t>(t)].d;
      } else {
        d = beyond_d[static_cast<std::size_t>(
            std::lower_bound(beyond.begin(), beyond.end(), t) - beyond.begin())];
      }
      out.push_back(make_record(c, p, t, "d_exact", d));
    }
    for (const auto& [level, kind] :
         {std::pair{0.75, "c_cross_0.75"}, std::pair{0.5, "c_cross_0.50"},
          std::pair{0.25, "c_cross_0.25"}}) {
      const auto tc = crossing(series, level);
      out.push_back(make_record(c, p, 0, kind, tc ? *tc / tn : NAN));
    }
    const auto t75 = crossing(series, 0.75);
    const auto t25 = crossing(series, 0.25);
    out.push_back(
        make_record(c, p, 0, "cutoff_width", t75 && t25 ? (*t25 - *t75) / tn : NAN));
  }

  if (c.monte_carlo) {
    const int m0 = p.n;
    const RngStream tv_rng(c.seed, job_stream_id(c.scenario, p, "tv_lower"));
    const auto lower =
        mc_tv_lower_bound_grid(p, m0, unique_times, c.replicas, tv_rng, {200, ctx.inner_workers});
    for (std::size_t i = 0; i < unique_times.size(); ++i) {
      out.push_back(make_record(c, p, unique_times[i], "tv_lower_mc", lower[i].value,
                                lower[i].std_error, c.replicas));
    }
    if (p.mode == Mode::standard) {
      const RngStream cu_rng(c.seed, job_stream_id(c.scenario, p, "coupling_upper"));
      const auto upper = coupling_survival(p, unique_times, c.replicas, cu_rng, ctx.inner_workers);
      for (std::size_t i = 0; i < unique_times.size(); ++i) {
        out.push_back(make_record(c, p, unique_times[i], "coupling_upper_mc", upper[i].value,
                                  upper[i].std_error, c.replicas));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const ResultRecord& a, const ResultRecord& b) {
    return a.t < b.t;
  });
  return out;
}

std::int64_t mixing_cap(const ExperimentConfig& c, const ModelParams& p) {
  const double n = p.n;
  if (c.scenario == Scenario::critical_scaling) return std::llround(50.0 * std::pow(n, 1.5) / p.k);
  return std::llround(50.0 * n * std::log(n) / p.k) + 100;
}

JobResult critical_job(const JobContext& ctx, const ModelParams& p) {
  const ExperimentConfig& c = ctx.config;
  const MagKernel K = build_kernel(p);
  const std::int64_t t = exact_mixing_time(K, c.eps, mixing_cap(c, p));
  JobResult out;
  out.push_back(make_record(c, p, t, "tmix_exact", static_cast<double>(t)));
  out.push_back(make_record(c, p, t, "tmix_scaled",
                            static_cast<double>(t) * p.k / std::pow(p.n, 1.5)));
  return out;
}

JobResult restricted_job(const JobContext& ctx, const ModelParams& p) {
  const ExperimentConfig& c = ctx.config;
  JobResult out;
  if (c.exact) {
    const MagKernel K = build_kernel(p);
    const std::int64_t t = exact_mixing_time(K, c.eps, mixing_cap(c, p));
    out.push_back(make_record(c, p, t, "tmix_exact", static_cast<double>(t)));
    out.push_back(make_record(c, p, t, "tmix_ratio_nlogn",
                              static_cast<double>(t) * p.k / (p.n * std::log(p.n))));
  }
  out.push_back(make_record(c, p, 0, "s_star", fixed_point_s_star(p.beta)));
  if (c.monte_carlo) {
    const std::int64_t t_max =
        std::llround(50.0 * p.n * std::log(static_cast<double>(p.n)) / p.k) + 100;
    for (const auto& [kind, tag] : {std::pair{HittingKind::below, "tau_star_from_zero"},
                                    std::pair{HittingKind::above, "tau_star_from_plus"}}) {
      const RngStream rng(c.seed, job_stream_id(c.scenario, p, tag));
      const HittingSummary h =
          hitting_time_summary(p, kind, c.alpha, c.hitting_replicas, t_max, rng,
                               ctx.inner_workers);
      const std::string base(tag);
      out.push_back(make_record(c, p, 0, base + "_mean", h.mean.value, h.mean.std_error,
                                c.hitting_replicas));
      out.push_back(make_record(c, p, 0, base + "_median", h.median, 0.0, c.hitting_replicas));
      out.push_back(make_record(c, p, 0, base + "_timeouts", static_cast<double>(h.timeouts), 0.0,
                                c.hitting_replicas));
    }
  }
  return out;
}

std::string file_tag(const ModelParams& p) {
  return "n" + std::to_string(p.n) + "_k" + std::to_string(p.k) + "_beta" +
         format_double(p.beta) + "_" + std::string(to_string(p.mode));
}

JobResult kernel_job(const JobContext& ctx, const ModelParams& p) {
  const ExperimentConfig& c = ctx.config;
  const MagKernel K = build_kernel(p);
  const fs::path file = ctx.out_dir / ("kernel_" + file_tag(p) + ".txt");
  export_kernel_file(K, file.string());
  std::int64_t entries = 0;
  double worst = 0.0;
  for (int m = 0; m <= p.n; ++m) {
    for (double x : K.row_band(m)) entries += x != 0.0;
    worst = std::max(worst, std::abs(K.row_sum(m) - 1.0));
  }
  JobResult out;
  out.push_back(make_record(c, p, 0, "kernel_entries", static_cast<double>(entries)));
  out.push_back(make_record(c, p, 0, "row_sum_max_error", worst));
  out.push_back(make_record(c, p, 0, "band_width", K.width()));
  return out;
}

SpinConfig start_config(const std::string& kind, int n, RngStream& rng) {
  if (kind == "plus") return SpinConfig::all_plus(n);
  if (kind == "minus") return SpinConfig::all_minus(n);
  if (kind == "random") return SpinConfig::random(n, rng);
  if (kind == "half") return SpinConfig::with_plus_count(n, n / 2);
  if (kind == "half_reversed") return SpinConfig::with_plus_count(n, n / 2).flipped();
  throw ValidationError("unknown start configuration: " + kind);
}

struct TraceRow {
  std::int64_t t;
  int hamming;
  double mag_gap;
  int r_value;
  std::string rule;
  int stop_events;
};

JobResult couple_job(const JobContext& ctx, const ModelParams& p) {
  const ExperimentConfig& c = ctx.config;
  const int n = p.n;
  RngStream rng(c.seed, job_stream_id(c.scenario, p, "couple"));
  const std::int64_t t_max =
      c.pair.t_max > 0 ? c.pair.t_max
                       : std::llround(10.0 * n * std::log(static_cast<double>(n)) / p.k);
  CoupledPair pair = CoupledPair::identity(start_config(c.pair.x, n, rng),
                                           start_config(c.pair.x_tilde, n, rng),
                                           CouplingRule::grand_monotone);
  const bool two_coord = c.pair.strategy == "two_coordinate";
  GrandCoupler grand(p);
  std::optional<SpinConfig> sigma0;

  std::vector<TraceRow> rows;
  auto record = [&](std::int64_t t, const CouplingStats& s, CouplingRule rule) {
    rows.push_back({t, s.hamming, s.mag_gap, s.r_value, std::string(to_string(rule)),
                    s.stop_events});
  };
  CouplingStats s0 = pair_stats(pair);
  record(0, s0, pair.rule);

  CouplingRule phase = CouplingRule::grand_monotone;
  std::int64_t switches = 0;
  std::int64_t mag_match = -1;
  std::int64_t coalesced_at = pair.x == pair.x_tilde ? 0 : -1;
  if (pair.x.plus_count() == pair.x_tilde.plus_count()) mag_match = 0;
  std::int64_t total_stops = 0;
  for (std::int64_t t = 1; t <= t_max; ++t) {
    const bool equal_mag = pair.x.plus_count() == pair.x_tilde.plus_count();
    CouplingRule next = phase;
    if (phase == CouplingRule::grand_monotone && equal_mag) {
      next = CouplingRule::rematched_monotone;
      if (two_coord && pair.x != pair.x_tilde) {
        sigma0 = pair.x_tilde;
        next = CouplingRule::two_coord_closing;
      }
    }
    if (next == CouplingRule::two_coord_closing) {
      const int r = two_coordinate(*sigma0, pair.x_tilde).u - two_coordinate(*sigma0, pair.x).u;
      if (r < p.k) next = CouplingRule::rematched_monotone;
    }
    if (next != phase) {
      ++switches;
      phase = next;
    }
    CouplingStats s;
    if (phase == CouplingRule::grand_monotone) {
      grand.step(pair.x, pair.x_tilde, rng);
      s = pair_stats(pair);
    } else if (phase == CouplingRule::rematched_monotone) {
      CoupledStep st = rematched_monotone_step(p, pair, rng);
      pair.x = std::move(st.pair.x);
      pair.x_tilde = std::move(st.pair.x_tilde);
      s = st.stats;
    } else {
      CoupledStep st = two_coord_closing_step(p, pair, *sigma0, rng);
      pair.x = std::move(st.pair.x);
      pair.x_tilde = std::move(st.pair.x_tilde);
      s = st.stats;
      total_stops += s.stop_events;
      if (s.stop_events > 0) {
        // Fallback left the magnetizations unequal; return to the monotone phase.
        phase = CouplingRule::grand_monotone;
        ++switches;
      }
    }
    s.hamming = hamming(pair.x, pair.x_tilde);
    s.mag_gap = std::abs(magnetization(pair.x) - magnetization(pair.x_tilde));
    if (phase == CouplingRule::two_coord_closing || s.stop_events > 0) {
      s.r_value = two_coordinate(*sigma0, pair.x_tilde).u - two_coordinate(*sigma0, pair.x).u;
    }
    if (mag_match < 0 && s.mag_gap == 0.0) mag_match = t;
    if (coalesced_at < 0 && s.hamming == 0) coalesced_at = t;
    record(t, s, s.stop_events > 0 ? CouplingRule::independent : phase);
  }

  const bool as_json = c.format == "json";
  const fs::path file =
      ctx.out_dir / ("couple_trace_" + file_tag(p) + (as_json ? ".json" : ".csv"));
  std::ofstream f(file, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + file.string());
  if (as_json) {
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"t", r.t},
                     {"hamming", r.hamming},
                     {"mag_gap", r.mag_gap},
                     {"r_value", r.r_value},
                     {"rule", r.rule},
                     {"stop_events", r.stop_events}});
    }
    f << arr.dump(1) << "\n";
  } else {
    f << "t,hamming,mag_gap,r_value,rule,stop_events\n";
    for (const auto& r : rows) {
      f << r.t << ',' << r.hamming << ',' << format_double(r.mag_gap) << ',' << r.r_value << ','
        << r.rule << ',' << r.stop_events << '\n';
    }
  }

  JobResult out;
  out.push_back(make_record(c, p, t_max, "mag_match_step", static_cast<double>(mag_match)));
  out.push_back(make_record(c, p, t_max, "coalescence_step", static_cast<double>(coalesced_at)));
  out.push_back(make_record(c, p, t_max, "rule_switches", static_cast<double>(switches)));
  out.push_back(make_record(c, p, t_max, "stop_events", static_cast<double>(total_stops)));
  return out;
}

JobResult run_job(const JobContext& ctx, const ModelParams& p) {
  switch (ctx.config.scenario) {
    case Scenario::cutoff_profile: return cutoff_job(ctx, p);
    case Scenario::critical_scaling: return critical_job(ctx, p);
    case Scenario::restricted_scaling: return restricted_job(ctx, p);
    case Scenario::kernel_export: return kernel_job(ctx, p);
    case Scenario::couple_trace: return couple_job(ctx, p);
    case Scenario::property_suite: break;
  }
  throw std::logic_error("no per-point job for this scenario");
}

// Power-law fits over the completed grid.
JobResult aggregate_rows(const ExperimentConfig& c, const std::vector<ResultRecord>& rows) {
  JobResult out;
  if (c.scenario != Scenario::critical_scaling && c.scenario != Scenario::restricted_scaling) {
    return out;
  }
  const Mode mode = c.scenario == Scenario::restricted_scaling ? Mode::restricted : Mode::standard;
  // (beta, k) -> n -> value
  std::map<std::pair<double, int>, std::map<int, double>> tmix;
  std::map<std::pair<double, int>, std::map<int, double>> tau;
  for (const auto& r : rows) {
    if (r.kind == "tmix_exact") tmix[{r.beta, r.k}][r.n] = r.value;
    if (r.kind == "tau_star_from_zero_mean") tau[{r.beta, r.k}][r.n] = r.value;
  }
  auto agg = [&](int n, int k, double beta, const std::string& kind, double value, double se) {
    ResultRecord r;
    r.scenario = std::string(to_string(c.scenario));
    r.n = n;
    r.k = k;
    r.beta = beta;
    r.mode = std::string(to_string(mode));
    r.kind = kind;
    r.value = value;
    r.std_error = se;
    r.seed = c.seed;
    return r;
  };
  auto fit_over_n = [&](const auto& table, const std::string& name) {
    for (const auto& [key, by_n] : table) {
      if (by_n.size() < 3) continue;
      std::vector<double> xs;
      std::vector<double> ys;
      for (const auto& [n, v] : by_n) {
        xs.push_back(n);
        ys.push_back(v);
      }
      const PowerLawFit fit = fit_power_law(xs, ys);
      out.push_back(agg(0, key.second, key.first, "fit_exponent_" + name, fit.exponent,
                        fit.exponent_se));
      out.push_back(agg(0, key.second, key.first, "fit_r2_" + name, fit.r2, 0.0));
    }
  };
  fit_over_n(tmix, "n");
  fit_over_n(tau, "tau_from_zero");

  // Dependence on k at fixed (beta, n).
  std::map<std::pair<double, int>, std::map<int, double>> by_k;
  for (const auto& [key, by_n] : tmix) {
    for (const auto& [n, v] : by_n) by_k[{key.first, n}][key.second] = v;
  }
  for (const auto& [key, ks] : by_k) {
    const auto& [beta, n] = key;
    if (ks.size() >= 2) {
      const double base = ks.begin()->second;
      for (auto it = std::next(ks.begin()); it != ks.end(); ++it) {
        out.push_back(agg(n, it->first, beta, "tmix_ratio_kmin", it->second / base, 0.0));
      }
    }
    if (ks.size() >= 3) {
      std::vector<double> xs;
      std::vector<double> ys;
      for (const auto& [k, v] : ks) {
        xs.push_back(1.0 / k);
        ys.push_back(v);
      }
      const PowerLawFit fit = fit_power_law(xs, ys);
      out.push_back(agg(n, 0, beta, "fit_exponent_inv_k", fit.exponent, fit.exponent_se));
      out.push_back(agg(n, 0, beta, "fit_r2_inv_k", fit.r2, 0.0));
    }
  }
  return out;
}

class RecordWriter {
 public:
  RecordWriter(const fs::path& path, bool json_format)
      : json_(json_format), out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    if (json_) {
      out_ << "[";
    } else {
      out_ << kCsvHeader << "\n";
    }
    out_.flush();
  }
  void write(const std::vector<ResultRecord>& rows) {
    for (const auto& r : rows) {
      if (json_) {
        out_ << (first_ ? "\n" : ",\n") << to_json(r).dump();
        first_ = false;
      } else {
        out_ << to_csv_line(r) << "\n";
      }
    }
    out_.flush();
  }
  void close() {
    if (json_) out_ << (first_ ? "]\n" : "\n]\n");
    out_.close();
  }

 private:
  bool json_;
  bool first_ = true;
  std::ofstream out_;
};

RunOutcome run_properties(const ExperimentConfig& c, const fs::path& dir, bool timing) {
  PropertyOptions opt;
  opt.seed = c.seed;
  opt.workers = c.workers;
  opt.replicas = c.replicas;
  opt.self_in_field = c.fault == "self_in_field";
  RunOutcome outcome;
  const fs::path results = dir / (std::string("property_suite.") + c.format);
  RecordWriter writer(results, c.format == "json");
  std::vector<CheckResult> checks;
  for (const auto& name : property_check_names()) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r = run_property_check(name, opt);
    const auto t1 = std::chrono::steady_clock::now();
    ResultRecord rec;
    rec.scenario = "property_suite";
    rec.kind = r.name;
    rec.value = r.passed ? 1.0 : 0.0;
    rec.replicas = c.replicas;
    rec.seed = c.seed;
    if (timing) rec.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    writer.write({rec});
    outcome.records.push_back(rec);
    if (!r.passed) ++outcome.failed_checks;
    checks.push_back(std::move(r));
  }
  writer.close();
  const fs::path report = dir / "property_report.json";
  std::ofstream f(report, std::ios::binary);
  f << property_report(checks, opt).dump(2) << "\n";
  outcome.files = {results.string(), report.string()};
  return outcome;
}

}  // namespace

std::string_view to_string(Scenario s) {
  for (const auto& e : kScenarios) {
    if (e.scenario == s) return e.name;
  }
  return "unknown";
}

Scenario parse_scenario(std::string_view name) {
  for (const auto& e : kScenarios) {
    if (e.name == name) return e.scenario;
  }
  throw ValidationError("unknown scenario: " + std::string(name));
}

std::string_view subcommand_name(Scenario s) {
  for (const auto& e : kScenarios) {
    if (e.scenario == s) return e.subcommand;
  }
  return "unknown";
}

Scenario scenario_from_subcommand(std::string_view name) {
  for (const auto& e : kScenarios) {
    if (e.subcommand == name) return e.scenario;
  }
  throw ValidationError("unknown subcommand: " + std::string(name));
}

ExperimentConfig default_config(Scenario scenario) {
  ExperimentConfig c;
  c.scenario = scenario;
  switch (scenario) {
    case Scenario::cutoff_profile:
      c.n = {400, 800, 1600};
      c.k = {2};
      c.beta = {0.5};
      c.replicas = 2'000;
      break;
    case Scenario::critical_scaling:
      c.n = {128, 256, 512, 1024};
      c.k = {1, 2};
      c.beta = {1.0};
      break;
    case Scenario::restricted_scaling:
      c.n = {128, 256, 512, 1024};
      c.k = {1, 2};
      c.beta = {1.5};
      c.mode = Mode::restricted;
      c.alpha = bands::kTauStarAlpha;
      c.hitting_replicas = 400;
      break;
    case Scenario::property_suite:
      break;
    case Scenario::kernel_export:
      c.n = {8};
      c.k = {2};
      c.beta = {0.5};
      break;
    case Scenario::couple_trace:
      c.n = {200};
      c.k = {4};
      c.beta = {0.5};
      break;
  }
  return c;
}

ExperimentConfig parse_config(const json& j, Scenario scenario) {
  check_keys(j,
             {"scenario", "params_grid", "mode", "time_grid", "replicas", "hitting_replicas",
              "seed", "output", "workers", "format", "eps", "alpha", "exact", "monte_carlo",
              "fault", "pair"},
             "config");
  if (j.contains("scenario")) {
    if (!j["scenario"].is_string()) throw ValidationError("scenario must be a string");
    const Scenario named = parse_scenario(j["scenario"].get<std::string>());
    if (named != scenario) {
      throw ValidationError("config scenario '" + j["scenario"].get<std::string>() +
                            "' does not match the requested scenario '" +
                            std::string(to_string(scenario)) + "'");
    }
  }
  ExperimentConfig c = default_config(scenario);
  try {
    if (j.contains("params_grid")) {
      const json& g = j["params_grid"];
      check_keys(g, {"n", "k", "beta"}, "params_grid");
      if (g.contains("n")) c.n = read_list<int>(g["n"], "n");
      if (g.contains("k")) c.k = read_list<int>(g["k"], "k");
      if (g.contains("beta")) c.beta = read_list<double>(g["beta"], "beta");
    }
    if (j.contains("mode")) c.mode = parse_mode(j["mode"].get<std::string>());
    if (j.contains("time_grid")) {
      const json& g = j["time_grid"];
      check_keys(g, {"c_min", "c_max", "points"}, "time_grid");
      if (g.contains("c_min")) c.time_grid.c_min = g["c_min"].get<double>();
      if (g.contains("c_max")) c.time_grid.c_max = g["c_max"].get<double>();
      if (g.contains("points")) c.time_grid.points = g["points"].get<int>();
    }
    if (j.contains("replicas")) c.replicas = j["replicas"].get<std::int64_t>();
    if (j.contains("hitting_replicas")) c.hitting_replicas = j["hitting_replicas"].get<std::int64_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output")) c.output = j["output"].get<std::string>();
    if (j.contains("workers")) c.workers = j["workers"].get<int>();
    if (j.contains("format")) c.format = j["format"].get<std::string>();
    if (j.contains("eps")) c.eps = j["eps"].get<double>();
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
    if (j.contains("exact")) c.exact = j["exact"].get<bool>();
    if (j.contains("monte_carlo")) c.monte_carlo = j["monte_carlo"].get<bool>();
    if (j.contains("fault")) c.fault = normalize_fault(j["fault"].get<std::string>());
    if (j.contains("pair")) {
      const json& g = j["pair"];
      check_keys(g, {"x", "x_tilde", "strategy", "t_max"}, "pair");
      if (g.contains("x")) c.pair.x = g["x"].get<std::string>();
      if (g.contains("x_tilde")) c.pair.x_tilde = g["x_tilde"].get<std::string>();
      if (g.contains("strategy")) c.pair.strategy = g["strategy"].get<std::string>();
      if (g.contains("t_max")) c.pair.t_max = g["t_max"].get<std::int64_t>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid config value: ") + e.what());
  }
  return c;
}

ExperimentConfig parse_config_text(std::string_view text, Scenario scenario) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j, scenario);
}

std::vector<ModelParams> grid_points(const ExperimentConfig& c) {
  std::vector<ModelParams> out;
  const Mode mode = c.mode.value_or(Mode::standard);
  for (int n : c.n) {
    for (int k : c.k) {
      for (double beta : c.beta) {
        ModelParams p = make_params(n, k, beta, mode);
        p.self_in_field = c.fault == "self_in_field";
        out.push_back(p);
      }
    }
  }
  return out;
}

void validate_config(const ExperimentConfig& c) {
  if (c.format != "csv" && c.format != "json") {
    throw ValidationError("format must be csv or json");
  }
  if (c.workers < 1) throw ValidationError("workers must be at least 1");
  if (c.replicas < 2) throw ValidationError("replicas must be at least 2");
  if (c.output.empty()) throw ValidationError("output path is empty");
  normalize_fault(c.fault);
  if (c.scenario == Scenario::property_suite) return;
  if (c.n.empty() || c.k.empty() || c.beta.empty()) {
    throw ValidationError("params_grid needs non-empty n, k and beta lists");
  }
  const std::vector<ModelParams> grid = grid_points(c);
  std::set<std::tuple<int, int, double>> seen;
  for (const auto& p : grid) {
    if (!seen.insert({p.n, p.k, p.beta}).second) {
      throw ValidationError("duplicate grid point");
    }
  }
  switch (c.scenario) {
    case Scenario::cutoff_profile:
      for (const auto& p : grid) {
        if (!(p.beta < 1.0)) throw ValidationError("cutoff_profile requires beta < 1");
      }
      if (c.time_grid.points < 2) throw ValidationError("time_grid.points must be at least 2");
      if (!(c.time_grid.c_min > 0.0 && c.time_grid.c_min < c.time_grid.c_max)) {
        throw ValidationError("time_grid needs 0 < c_min < c_max");
      }
      break;
    case Scenario::critical_scaling:
      for (const auto& p : grid) {
        if (p.beta != 1.0) throw ValidationError("critical_scaling requires beta = 1");
        if (p.mode != Mode::standard) throw ValidationError("critical_scaling uses standard mode");
        if (!within_budget(p)) throw BudgetError("kernel budget exceeded for n = " +
                                                 std::to_string(p.n));
      }
      break;
    case Scenario::restricted_scaling:
      if (c.mode != Mode::restricted) throw ValidationError("restricted_scaling requires restricted mode");
      for (const auto& p : grid) {
        if (!(p.beta > 1.0)) throw ValidationError("restricted_scaling requires beta > 1");
        if (c.exact && !within_budget(p)) {
          throw BudgetError("kernel budget exceeded for n = " + std::to_string(p.n));
        }
      }
      if (c.hitting_replicas < 1) throw ValidationError("hitting_replicas must be positive");
      if (!(c.alpha >= 0.0)) throw ValidationError("alpha must be non-negative");
      break;
    case Scenario::kernel_export:
      for (const auto& p : grid) {
        if (!within_budget(p)) throw BudgetError("kernel budget exceeded for n = " +
                                                 std::to_string(p.n));
      }
      break;
    case Scenario::couple_trace: {
      for (const auto& s : {c.pair.x, c.pair.x_tilde}) {
        if (s != "plus" && s != "minus" && s != "random" && s != "half" && s != "half_reversed") {
          throw ValidationError("unknown pair start: " + s);
        }
      }
      if (c.pair.strategy != "rematch" && c.pair.strategy != "two_coordinate") {
        throw ValidationError("pair.strategy must be rematch or two_coordinate");
      }
      if (c.pair.t_max < 0) throw ValidationError("pair.t_max must be non-negative");
      for (const auto& p : grid) {
        if (p.mode != Mode::standard) throw ValidationError("couple_trace uses standard mode");
      }
      break;
    }
    case Scenario::property_suite: break;
  }
  if (!(c.eps > 0.0 && c.eps < 1.0)) throw ValidationError("eps must lie in (0, 1)");
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string to_csv_line(const ResultRecord& r) {
  std::string s;
  s += r.scenario;
  s += ',' + std::to_string(r.n);
  s += ',' + std::to_string(r.k);
  s += ',' + format_double(r.beta);
  s += ',' + r.mode;
  s += ',' + std::to_string(r.t);
  s += ',' + r.kind;
  s += ',' + format_double(r.value);
  s += ',' + format_double(r.std_error);
  s += ',' + std::to_string(r.replicas);
  s += ',' + std::to_string(r.seed);
  s += ',' + format_double(r.wall_time_ms);
  return s;
}

json to_json(const ResultRecord& r) {
  auto num = [](double x) -> json {
    if (std::isfinite(x)) return x;
    return nullptr;
  };
  return {{"scenario", r.scenario}, {"n", r.n},
          {"k", r.k},               {"beta", num(r.beta)},
          {"mode", r.mode},         {"t", r.t},
          {"kind", r.kind},         {"value", num(r.value)},
          {"std_error", num(r.std_error)}, {"replicas", r.replicas},
          {"seed", r.seed},         {"wall_time_ms", num(r.wall_time_ms)}};
}

std::vector<ResultRecord> read_csv_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ValidationError("unexpected CSV header in " + path);
  }
  std::vector<ResultRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 12) throw ValidationError("malformed CSV row in " + path);
    ResultRecord r;
    r.scenario = f[0];
    r.n = std::stoi(f[1]);
    r.k = std::stoi(f[2]);
    r.beta = std::stod(f[3]);
    r.mode = f[4];
    r.t = std::stoll(f[5]);
    r.kind = f[6];
    r.value = std::stod(f[7]);
    r.std_error = std::stod(f[8]);
    r.replicas = std::stoll(f[9]);
    r.seed = std::stoull(f[10]);
    r.wall_time_ms = std::stod(f[11]);
    out.push_back(std::move(r));
  }
  return out;
}

std::uint64_t job_stream_id(Scenario s, const ModelParams& p, std::string_view tag) {
  std::string key = std::string(to_string(s)) + "|" + std::to_string(p.n) + "|" +
                    std::to_string(p.k) + "|" + format_double(p.beta) + "|" +
                    std::string(to_string(p.mode)) + "|" + std::string(tag);
  return fnv1a(key);
}

RunOutcome run_experiment(ExperimentConfig config, const RunOptions& options) {
  if (options.workers) config.workers = *options.workers;
  if (options.out_dir) config.output = *options.out_dir;
  if (options.format) config.format = *options.format;
  if (options.seed) config.seed = *options.seed;
  if (options.fault) config.fault = *options.fault;
  config.fault = normalize_fault(config.fault);
  if (config.scenario == Scenario::restricted_scaling && !config.mode) {
    config.mode = Mode::restricted;
  }
  validate_config(config);

  const fs::path dir(config.output);
  fs::create_directories(dir);
  if (config.scenario == Scenario::property_suite) {
    return run_properties(config, dir, options.record_timing);
  }

  const std::vector<ModelParams> grid = grid_points(config);
  const std::size_t jobs = grid.size();
  const int job_workers = static_cast<int>(std::min<std::size_t>(
      jobs, static_cast<std::size_t>(config.workers)));
  JobContext ctx{config, std::max(1, config.workers / std::max(1, job_workers)), dir};

  const fs::path results = dir / (std::string(to_string(config.scenario)) + "." + config.format);
  RecordWriter writer(results, config.format == "json");
  std::vector<std::optional<JobResult>> done(jobs);
  std::size_t next_to_write = 0;
  std::mutex mutex;
  RunOutcome outcome;

  parallel_for(jobs, job_workers, [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    JobResult rows = run_job(ctx, grid[i]);
    const auto t1 = std::chrono::steady_clock::now();
    if (options.record_timing) {
      const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      for (auto& r : rows) r.wall_time_ms = ms;
    }
    std::lock_guard lock(mutex);
    done[i] = std::move(rows);
    while (next_to_write < jobs && done[next_to_write]) {
      writer.write(*done[next_to_write]);
      outcome.records.insert(outcome.records.end(), done[next_to_write]->begin(),
                             done[next_to_write]->end());
      ++next_to_write;
    }
  });

  const JobResult fits = aggregate_rows(config, outcome.records);
  writer.write(fits);
  outcome.records.insert(outcome.records.end(), fits.begin(), fits.end());
  writer.close();
  outcome.files.push_back(results.string());
  if (config.scenario == Scenario::kernel_export || config.scenario == Scenario::couple_trace) {
    for (const auto& p : grid) {
      const std::string tag = file_tag(p);
      outcome.files.push_back(
          (dir / (config.scenario == Scenario::kernel_export
                      ? "kernel_" + tag + ".txt"
                      : "couple_trace_" + tag + (config.format == "json" ? ".json" : ".csv")))
              .string());
    }
  }
  return outcome;
}

}  // namespace scanmix
