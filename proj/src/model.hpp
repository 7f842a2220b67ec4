#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "rng.hpp"

namespace scanmix {

enum class Mode { standard, restricted };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

/// Model parameters: vertex count, scan width, inverse temperature, dynamics mode.
struct ModelParams {
  int n = 2;
  int k = 1;
  double beta = 0.0;
  Mode mode = Mode::standard;
  // Restricted mode requested with beta <= 1; accepted but flagged.
  bool restricted_warning = false;
  // Fault injection for mutation tests: the local field includes the updated
  // vertex's own spin. Never set outside tests and the property-suite fault mode.
  bool self_in_field = false;
};

/// Validates and builds params. Throws ValidationError on n < 2, k < 1, k > n or beta < 0.
ModelParams make_params(int n, int k, double beta, Mode mode = Mode::standard);

/// p+(x) = (1 + tanh(beta x)) / 2, the probability the updated spin is +1.
double update_prob_plus(double beta, double x);

/// A configuration in {-1,+1}^n with a cached plus-count.
class SpinConfig {
 public:
  SpinConfig() = default;
  explicit SpinConfig(std::vector<std::int8_t> spins);

  static SpinConfig all_plus(int n);
  static SpinConfig all_minus(int n);
  // First `plus` vertices +1, the rest -1.
  static SpinConfig with_plus_count(int n, int plus);
  // Uniform random configuration.
  static SpinConfig random(int n, RngStream& rng);

  int n() const { return static_cast<int>(spins_.size()); }
  int plus_count() const { return plus_; }
  std::int8_t operator[](int v) const { return spins_[static_cast<std::size_t>(v)]; }
  std::span<const std::int8_t> spins() const { return spins_; }

  void set(int v, std::int8_t s);
  void flip_all();
  SpinConfig flipped() const;

  // Recounts the plus entries and compares against the cache.
  bool consistent() const;

  bool operator==(const SpinConfig& other) const { return spins_ == other.spins_; }

 private:
  std::vector<std::int8_t> spins_;
  int plus_ = 0;
};

/// S(sigma) = (2 plus_count - n) / n.
double magnetization(const SpinConfig& config);
inline double magnetization_of(int plus_count, int n) {
  return static_cast<double>(2 * plus_count - n) / n;
}

/// Ordered k-subset of [0, n): the vertices updated in one scan step, in update order.
struct ScanOrder {
  std::vector<int> vertices;
};

/// Plus-counts after each single-site update of one scan step (k + 1 entries).
struct IntermediateTrace {
  std::vector<int> states;
  ScanOrder order;
};

/**
 * Heat-bath probabilities for every (plus-count, own spin) pair of a model.
 *
 * The local field at a vertex with spin s in a configuration with plus-count m
 * is (2m - n - s) / n, i.e. the magnetization with the vertex's own spin
 * removed. Every simulation path and the exact kernels read this one table, so
 * they agree bit-for-bit on the update threshold.
 */
class UpdateRule {
 public:
  explicit UpdateRule(const ModelParams& params);

  double prob_plus(int plus_count, int spin) const {
    return table_[static_cast<std::size_t>(2 * plus_count - spin + 1)];
  }
  // Applies the rule at v with uniform u; u <= threshold gives +1. Returns the new spin.
  std::int8_t apply(SpinConfig& config, int v, double u) const {
    const std::int8_t s = u <= prob_plus(config.plus_count(), config[v]) ? 1 : -1;
    config.set(v, s);
    return s;
  }
  int n() const { return n_; }

 private:
  int n_;
  std::vector<double> table_;
};

/**
 * Samples ordered k-subsets by a partial Fisher-Yates shuffle over a reusable
 * index array. Swaps are undone after each draw, so the result depends only on
 * the k consumed variates (one bounded integer per position).
 */
class ScanSampler {
 public:
  explicit ScanSampler(int n);
  void sample(int k, RngStream& rng, std::vector<int>& out);
  ScanOrder sample(int k, RngStream& rng) {
    ScanOrder order;
    sample(k, rng, order.vertices);
    return order;
  }

 private:
  std::vector<int> index_;
  std::vector<int> swaps_;
};

/// Shared randomness of one scan step: the order and one uniform per sub-update.
struct StepDraws {
  ScanOrder order;
  std::vector<double> uniforms;
};

/// Draws k indices then k uniforms from the stream.
StepDraws draw_step(const ModelParams& params, ScanSampler& sampler, RngStream& rng);

SpinConfig single_site_update(const ModelParams& params, const SpinConfig& config, int v,
                              double u);

ScanOrder sample_scan_order(const ModelParams& params, RngStream& rng);

/// Runs a scan step with pre-drawn randomness. Deterministic.
IntermediateTrace apply_scan(const UpdateRule& rule, SpinConfig& config, const StepDraws& draws);

struct StepResult {
  SpinConfig config;
  IntermediateTrace trace;
};

StepResult scan_step(const ModelParams& params, const SpinConfig& config, RngStream& rng);

/// Scan step followed by a global flip when the candidate magnetization is negative.
/// Rejects inputs with S < 0.
StepResult restricted_scan_step(const ModelParams& params, const SpinConfig& config,
                                RngStream& rng);

}  // namespace scanmix
