#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kernels.hpp"
#include "model.hpp"

namespace scanmix {

/// Sufficient statistics of the fast magnetization-only simulation inside one scan step.
struct MagSimState {
  int m = 0;
  int scanned_plus = 0;
  int scanned_total = 0;
};

struct EstimateWithCI {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t replicas = 0;
  std::uint64_t seed = 0;
};

struct HittingRecord {
  std::int64_t tau = 0;  // whole scan steps
  double threshold = 0.0;
  bool hit = false;
  std::int64_t t_max = 0;

  bool operator==(const HittingRecord&) const = default;
};

/**
 * Plus-count chain simulated from its sufficient statistics. Per sub-update the
 * selected vertex is + with probability (m - scanned_plus) / (n - scanned_total),
 * then it is resampled with the heat-bath rule. Distributionally exact.
 */
class MagChainSampler {
 public:
  explicit MagChainSampler(const ModelParams& params);

  // One scan step (folded in restricted mode).
  int step(int m, RngStream& rng) const;
  int run(int m0, std::int64_t t, RngStream& rng) const;
  const ModelParams& params() const { return params_; }

 private:
  ModelParams params_;
  UpdateRule rule_;
};

/// Plus-count after t scan steps from m0.
int sample_mag_chain(const ModelParams& params, int m0, std::int64_t t, RngStream& rng);

struct TvBoundOptions {
  int bootstrap = 200;
  int workers = 1;
};

/**
 * Conservative Monte Carlo lower bound on d(t) from plus-count m0: plug-in TV of the
 * empirical plus-count histogram against the exact stationary law, minus the 95th
 * percentile of the bootstrap deviation TV(resample, histogram). std_error is the
 * bootstrap standard deviation of the plug-in value.
 */
EstimateWithCI mc_tv_lower_bound(const ModelParams& params, int m0, std::int64_t t,
                                 std::int64_t replicas, const RngStream& rng,
                                 const TvBoundOptions& options = {});

/// The same bound at several ascending times, from one set of replica paths.
std::vector<EstimateWithCI> mc_tv_lower_bound_grid(const ModelParams& params, int m0,
                                                   std::span<const std::int64_t> times,
                                                   std::int64_t replicas, const RngStream& rng,
                                                   const TvBoundOptions& options = {});

/// Fraction of replicas whose grand-coupled all-plus/all-minus chains are still apart at each t.
std::vector<EstimateWithCI> coupling_survival(const ModelParams& params,
                                              std::span<const std::int64_t> times,
                                              std::int64_t replicas, const RngStream& rng,
                                              int workers = 1);

EstimateWithCI mc_coupling_upper_bound(const ModelParams& params, std::int64_t t,
                                       std::int64_t replicas, const RngStream& rng,
                                       int workers = 1);

/// Positive root of tanh(beta s) = s. Throws ValidationError for beta <= 1.
double fixed_point_s_star(double beta);

/// First whole step with S <= s* + alpha / sqrt(n), restricted chain from all-plus.
HittingRecord hitting_time_tau_star_above(const ModelParams& params, double alpha,
                                          RngStream& rng, std::int64_t t_max);

/// First whole step with S >= s* + alpha / sqrt(n), restricted chain from m = ceil(n/2).
HittingRecord hitting_time_tau_star_below(const ModelParams& params, double alpha,
                                          RngStream& rng, std::int64_t t_max);

enum class HittingKind { above, below };

/// Mean hitting time over replicas (timeouts counted at t_max) and the timeout count.
struct HittingSummary {
  EstimateWithCI mean;
  double median = 0.0;
  std::int64_t timeouts = 0;
  std::vector<HittingRecord> records;
};

HittingSummary hitting_time_summary(const ModelParams& params, HittingKind kind, double alpha,
                                    std::int64_t replicas, std::int64_t t_max,
                                    const RngStream& rng, int workers = 1);

struct PowerLawFit {
  double exponent = 0.0;
  double intercept = 0.0;  // log-space
  double r2 = 0.0;
  double exponent_se = 0.0;
};

/// Least squares on (log x, log y). Needs at least 3 positive points.
PowerLawFit fit_power_law(std::span<const double> xs, std::span<const double> ys);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Goodness of fit of counts against probabilities; bins with expectation below
/// `min_expected` are pooled.
ChiSquareResult chi_square_gof(std::span<const std::int64_t> counts,
                               std::span<const double> probs, double min_expected = 5.0);

struct ContractionRow {
  std::int64_t t = 0;
  double mean_dist = 0.0;
  double se_dist = 0.0;
  double dist_bound = 0.0;
  double mean_gap = 0.0;
  double se_gap = 0.0;
  double gap_bound = 0.0;
  bool dist_ok = false;
  bool gap_ok = false;
};

struct ContractionReport {
  double rho_hamming = 0.0;  // (1/beta)[1 + (beta-1)(1+beta/n)^k]
  double rho = 0.0;          // 1 - k(1-beta)/n
  std::vector<ContractionRow> rows;
  bool passed() const;
};

/// Hamming contraction from distance-1 pairs and magnetization contraction from the
/// all-plus/all-minus pair under the monotone coupling; 3-standard-error slack.
ContractionReport contraction_test(const ModelParams& params,
                                   std::span<const std::int64_t> t_grid, std::int64_t replicas,
                                   const RngStream& rng, int workers = 1);

double hamming_contraction_rate(const ModelParams& params);

}  // namespace scanmix
