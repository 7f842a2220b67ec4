#include "scanmix/scanmix.h"

#include <exception>
#include <filesystem>
#include <new>
#include <string>

#include "errors.hpp"
#include "estimators.hpp"
#include "harness.hpp"
#include "kernels.hpp"
#include "model.hpp"

struct scanmix_kernel {
  scanmix::MagKernel kernel;
};

struct scanmix_chain {
  scanmix::ModelParams params;
  scanmix::SpinConfig config;
  scanmix::RngStream rng;
};

struct scanmix_run_result {
  scanmix::RunOutcome outcome;
};

namespace {

thread_local std::string g_last_error;

int fail(int code, const char* what) {
  g_last_error = what;
  return code;
}

template <class Fn>
int guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const scanmix::ValidationError& e) {
    return fail(SCANMIX_E_INVALID, e.what());
  } catch (const scanmix::BudgetError& e) {
    return fail(SCANMIX_E_BUDGET, e.what());
  } catch (const scanmix::PreconditionError& e) {
    return fail(SCANMIX_E_PRECONDITION, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(SCANMIX_E_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SCANMIX_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SCANMIX_E_INTERNAL, e.what());
  } catch (...) {
    return fail(SCANMIX_E_INTERNAL, "unknown error");
  }
}

scanmix::ModelParams to_params(const scanmix_params* p) {
  if (p == nullptr) throw scanmix::ValidationError("params is NULL");
  if (p->mode != SCANMIX_MODE_STANDARD && p->mode != SCANMIX_MODE_RESTRICTED) {
    throw scanmix::ValidationError("unknown mode");
  }
  return scanmix::make_params(p->n, p->k, p->beta,
                              p->mode == SCANMIX_MODE_RESTRICTED ? scanmix::Mode::restricted
                                                                 : scanmix::Mode::standard);
}

template <class T>
void require(T* ptr, const char* name) {
  if (ptr == nullptr) throw scanmix::ValidationError(std::string(name) + " is NULL");
}

}  // namespace

extern "C" {

const char* scanmix_last_error(void) { return g_last_error.c_str(); }

const char* scanmix_version(void) { return "1.0.0"; }

const char* scanmix_status_name(int status) {
  switch (status) {
    case SCANMIX_OK: return "ok";
    case SCANMIX_E_INVALID: return "invalid argument";
    case SCANMIX_E_BUDGET: return "budget exceeded";
    case SCANMIX_E_PRECONDITION: return "precondition violated";
    case SCANMIX_E_IO: return "i/o error";
    case SCANMIX_E_INTERNAL: return "internal error";
    case SCANMIX_E_CHECKS_FAILED: return "checks failed";
    default: return "unknown status";
  }
}

int scanmix_validate_params(const scanmix_params* params, int* restricted_warning) {
  return guarded([&] {
    const auto p = to_params(params);
    if (restricted_warning) *restricted_warning = p.restricted_warning ? 1 : 0;
    return SCANMIX_OK;
  });
}

int scanmix_update_prob_plus(double beta, double x, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = scanmix::update_prob_plus(beta, x);
    return SCANMIX_OK;
  });
}

int scanmix_s_star(double beta, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = scanmix::fixed_point_s_star(beta);
    return SCANMIX_OK;
  });
}

int scanmix_stationary(const scanmix_params* params, double* weights, size_t len) {
  return guarded([&] {
    const auto p = to_params(params);
    require(weights, "weights");
    if (len < static_cast<size_t>(p.n) + 1) throw scanmix::ValidationError("buffer too small");
    const auto mu = scanmix::stationary_magnetization(p);
    for (size_t i = 0; i < mu.size(); ++i) weights[i] = mu.weights[i];
    return SCANMIX_OK;
  });
}

int scanmix_kernel_build(const scanmix_params* params, scanmix_kernel** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    const auto p = to_params(params);
    *out = new scanmix_kernel{scanmix::build_kernel(p)};
    return SCANMIX_OK;
  });
}

int scanmix_kernel_import(const char* path, scanmix_kernel** out) {
  return guarded([&] {
    require(out, "out");
    require(path, "path");
    *out = nullptr;
    if (!std::filesystem::exists(path)) {
      return fail(SCANMIX_E_IO, (std::string("cannot open ") + path).c_str());
    }
    *out = new scanmix_kernel{scanmix::import_kernel_file(path)};
    return static_cast<int>(SCANMIX_OK);
  });
}

int scanmix_kernel_export(const scanmix_kernel* kernel, const char* path) {
  return guarded([&] {
    require(kernel, "kernel");
    require(path, "path");
    scanmix::export_kernel_file(kernel->kernel, path);
    return SCANMIX_OK;
  });
}

void scanmix_kernel_free(scanmix_kernel* kernel) { delete kernel; }

int scanmix_kernel_params(const scanmix_kernel* kernel, scanmix_params* out) {
  return guarded([&] {
    require(kernel, "kernel");
    require(out, "out");
    const auto& p = kernel->kernel.params();
    out->n = p.n;
    out->k = p.k;
    out->beta = p.beta;
    out->mode = p.mode == scanmix::Mode::restricted ? SCANMIX_MODE_RESTRICTED
                                                    : SCANMIX_MODE_STANDARD;
    return SCANMIX_OK;
  });
}

int scanmix_kernel_entry(const scanmix_kernel* kernel, int m, int m_next, double* out) {
  return guarded([&] {
    require(kernel, "kernel");
    require(out, "out");
    const int n = kernel->kernel.n();
    if (m < 0 || m > n || m_next < 0 || m_next > n) {
      throw scanmix::ValidationError("plus-count out of range");
    }
    *out = kernel->kernel.entry(m, m_next);
    return SCANMIX_OK;
  });
}

int scanmix_kernel_mixing_time(const scanmix_kernel* kernel, double eps, int64_t t_max,
                               int64_t* out) {
  return guarded([&] {
    require(kernel, "kernel");
    require(out, "out");
    if (!(eps > 0.0 && eps < 1.0)) throw scanmix::ValidationError("eps must lie in (0, 1)");
    *out = scanmix::exact_mixing_time(kernel->kernel, eps, t_max);
    return SCANMIX_OK;
  });
}

int scanmix_kernel_d_profile(const scanmix_kernel* kernel, int m0, const int64_t* times,
                             size_t count, double* d_out) {
  return guarded([&] {
    require(kernel, "kernel");
    if (count == 0) return SCANMIX_OK;
    require(times, "times");
    require(d_out, "d_out");
    if (m0 < 0 || m0 > kernel->kernel.n()) throw scanmix::ValidationError("m0 out of range");
    const auto prof = scanmix::exact_d_profile(
        kernel->kernel, m0, std::span<const std::int64_t>(times, count));
    for (size_t i = 0; i < prof.size(); ++i) d_out[i] = prof[i].d;
    return SCANMIX_OK;
  });
}

int scanmix_sample_mag_chain(const scanmix_params* params, int m0, int64_t t, uint64_t seed,
                             uint64_t stream, int* out) {
  return guarded([&] {
    require(out, "out");
    const auto p = to_params(params);
    scanmix::RngStream rng(seed, stream);
    *out = scanmix::sample_mag_chain(p, m0, t, rng);
    return SCANMIX_OK;
  });
}

int scanmix_chain_create(const scanmix_params* params, int plus_count, uint64_t seed,
                         uint64_t stream, scanmix_chain** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    const auto p = to_params(params);
    if (plus_count < 0 || plus_count > p.n) throw scanmix::ValidationError("plus_count out of range");
    auto config = scanmix::SpinConfig::with_plus_count(p.n, plus_count);
    if (p.mode == scanmix::Mode::restricted && 2 * plus_count < p.n) {
      throw scanmix::ValidationError("restricted chain needs a start with S >= 0");
    }
    *out = new scanmix_chain{p, std::move(config), scanmix::RngStream(seed, stream)};
    return SCANMIX_OK;
  });
}

int scanmix_chain_step(scanmix_chain* chain, int64_t steps) {
  return guarded([&] {
    require(chain, "chain");
    if (steps < 0) throw scanmix::ValidationError("steps must be non-negative");
    for (int64_t s = 0; s < steps; ++s) {
      chain->config = chain->params.mode == scanmix::Mode::restricted
                          ? scanmix::restricted_scan_step(chain->params, chain->config, chain->rng)
                                .config
                          : scanmix::scan_step(chain->params, chain->config, chain->rng).config;
    }
    return SCANMIX_OK;
  });
}

int scanmix_chain_plus_count(const scanmix_chain* chain, int* out) {
  return guarded([&] {
    require(chain, "chain");
    require(out, "out");
    *out = chain->config.plus_count();
    return SCANMIX_OK;
  });
}

int scanmix_chain_spins(const scanmix_chain* chain, int8_t* out, size_t len) {
  return guarded([&] {
    require(chain, "chain");
    require(out, "out");
    const auto spins = chain->config.spins();
    if (len < spins.size()) throw scanmix::ValidationError("buffer too small");
    for (size_t i = 0; i < spins.size(); ++i) out[i] = spins[i];
    return SCANMIX_OK;
  });
}

void scanmix_chain_free(scanmix_chain* chain) { delete chain; }

int scanmix_run(const char* scenario, const char* config_json, const scanmix_run_options* options,
                scanmix_run_result** out) {
  return guarded([&] {
    require(scenario, "scenario");
    require(out, "out");
    *out = nullptr;
    scanmix::Scenario s;
    try {
      s = scanmix::parse_scenario(scenario);
    } catch (const scanmix::ValidationError&) {
      s = scanmix::scenario_from_subcommand(scenario);
    }
    scanmix::ExperimentConfig config = config_json ? scanmix::parse_config_text(config_json, s)
                                                   : scanmix::default_config(s);
    scanmix::RunOptions opt;
    if (options) {
      if (options->workers > 0) opt.workers = options->workers;
      if (options->out_dir) opt.out_dir = options->out_dir;
      if (options->format) opt.format = options->format;
      if (options->has_seed) opt.seed = options->seed;
      if (options->fault) opt.fault = options->fault;
      opt.record_timing = options->record_timing != 0;
    }
    auto* result = new scanmix_run_result{scanmix::run_experiment(std::move(config), opt)};
    *out = result;
    if (result->outcome.failed_checks > 0) {
      return fail(SCANMIX_E_CHECKS_FAILED,
                  (std::to_string(result->outcome.failed_checks) + " property check(s) failed")
                      .c_str());
    }
    return static_cast<int>(SCANMIX_OK);
  });
}

size_t scanmix_run_file_count(const scanmix_run_result* result) {
  return result ? result->outcome.files.size() : 0;
}

const char* scanmix_run_file(const scanmix_run_result* result, size_t index) {
  if (!result || index >= result->outcome.files.size()) return nullptr;
  return result->outcome.files[index].c_str();
}

size_t scanmix_run_record_count(const scanmix_run_result* result) {
  return result ? result->outcome.records.size() : 0;
}

int scanmix_run_failed_checks(const scanmix_run_result* result) {
  return result ? result->outcome.failed_checks : 0;
}

void scanmix_run_free(scanmix_run_result* result) { delete result; }

}  // extern "C"
