#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "model.hpp"

namespace scanmix {

/// Non-negative weights over a finite index set (plus-counts or configurations).
struct Distribution {
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  double total() const;
  static Distribution point_mass(std::size_t size, std::size_t at);
};

/// Size limits for exact kernels. The lumped DP costs O(n (k+1)^3).
struct KernelBudget {
  int max_n = 2048;
  std::int64_t max_work = 2048LL * 9 * 9 * 9;  // n <= 2048 at k <= 8
  std::int64_t max_full_work = 400'000'000;
};

/**
 * Exact one-scan-step transition matrix of the plus-count chain.
 *
 * Rows are stored as bands of width min(2k+1, n+1): row m holds columns
 * [row_start(m), row_start(m) + width). Entries outside the band are exactly 0.
 */
class MagKernel {
 public:
  MagKernel() = default;
  MagKernel(const ModelParams& params, int width);

  const ModelParams& params() const { return params_; }
  int n() const { return params_.n; }
  int k() const { return params_.k; }
  double beta() const { return params_.beta; }
  Mode mode() const { return params_.mode; }
  int states() const { return params_.n + 1; }
  int width() const { return width_; }

  int row_start(int m) const { return start_[static_cast<std::size_t>(m)]; }
  std::span<const double> row_band(int m) const;
  std::span<double> row_band_mut(int m);
  void set_row_start(int m, int start) { start_[static_cast<std::size_t>(m)] = start; }

  double entry(int m, int m_next) const;
  double row_sum(int m) const;
  std::vector<double> dense_row(int m) const;

  // dist * K
  Distribution step(const Distribution& dist) const;
  void step_into(std::span<const double> in, std::span<double> out) const;

 private:
  ModelParams params_;
  int width_ = 0;
  std::vector<int> start_;
  std::vector<double> data_;
};

/// Lumped kernel by dynamic programming over (sub-update, plus-count, scanned vertices now +).
MagKernel build_mag_kernel(const ModelParams& params, const KernelBudget& budget = {});

/// Standard kernel with columns m' < n/2 folded onto n - m'.
MagKernel build_restricted_mag_kernel(const ModelParams& params,
                                      const KernelBudget& budget = {});

/// Builds the kernel matching params.mode.
MagKernel build_kernel(const ModelParams& params, const KernelBudget& budget = {});

/// Projected Gibbs weights mu(m) ~ C(n,m) exp(beta (2m-n)^2 / (2n)); folded in restricted mode.
Distribution stationary_magnetization(const ModelParams& params);

/// Folds a plus-count distribution onto m >= n/2.
Distribution fold(const Distribution& dist);

/// Dense 2^n x 2^n kernel over configurations; configuration bit v set means spin +1.
struct FullKernel {
  int n = 0;
  std::vector<double> matrix;

  std::size_t states() const { return std::size_t{1} << n; }
  double at(std::uint32_t from, std::uint32_t to) const { return matrix[from * states() + to]; }
  Distribution step(const Distribution& dist) const;
};

/// One full scan step over configurations (exact mixture over ordered k-subsets). n <= 10.
FullKernel full_config_kernel(const ModelParams& params, const KernelBudget& budget = {});

/// Random-site single-update kernel (1/n) sum_v P_v. n <= 10.
FullKernel single_site_kernel(const ModelParams& params);

/// Gibbs measure pi(sigma) ~ exp(beta n S(sigma)^2 / 2) over configurations.
Distribution gibbs_full(const ModelParams& params);

/// Max over configurations of |sum_tau pi(sigma) K(sigma,tau) - pi(tau) K(tau,sigma)|.
double detailed_balance_residual(const FullKernel& kernel, const Distribution& pi);

/// Plus-count projection of a full kernel: averages each plus-count class of starting rows.
/// `lumpability_defect` receives the largest spread between rows of the same class.
std::vector<double> project_to_plus_counts(const FullKernel& kernel,
                                           double* lumpability_defect = nullptr);

Distribution evolve(const Distribution& dist, const MagKernel& kernel, std::int64_t t);
Distribution evolve(const Distribution& dist, const FullKernel& kernel, std::int64_t t);

/// Half L1 distance. Throws ValidationError on size mismatch.
double tv_distance(const Distribution& a, const Distribution& b);

struct ProfilePoint {
  std::int64_t t = 0;
  double d = 0.0;
};

/// TV to stationarity at each requested time (sorted ascending) from plus-count m0.
std::vector<ProfilePoint> exact_d_profile(const MagKernel& kernel, int m0,
                                          std::span<const std::int64_t> times);

/// d(t) maximized over several starts, at every t in [0, t_max]; stops early once d <= stop_below.
std::vector<ProfilePoint> exact_d_series(const MagKernel& kernel, std::span<const int> starts,
                                         std::int64_t t_max, double stop_below = -1.0);

/// Extremal starts of the lumped chain: {n} standard, {ceil(n/2), n} restricted.
std::vector<int> extremal_starts(const MagKernel& kernel);

/// Smallest listed t with d(t) <= eps. Throws ValidationError when the crossing is not bracketed.
std::int64_t mixing_time_from_profile(std::span<const ProfilePoint> profile, double eps = 0.25);

/// Exact t_mix(eps) of the lumped chain from its extremal starts. Throws BudgetError past t_max.
std::int64_t exact_mixing_time(const MagKernel& kernel, double eps, std::int64_t t_max);

/// Full-chain d(t) from one configuration (bitmask) at each requested time.
std::vector<ProfilePoint> full_d_profile(const FullKernel& kernel, const Distribution& pi,
                                         std::uint32_t start,
                                         std::span<const std::int64_t> times);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact mean and variance of the post-step magnetization from plus-count m.
Moments one_step_moments(const MagKernel& kernel, int m);

/// Moments of the magnetization under a plus-count distribution.
Moments magnetization_moments(const Distribution& dist);

/// Text export: header lines then "m m' value" triples, 17 significant digits.
void export_kernel(const MagKernel& kernel, std::ostream& out);
MagKernel import_kernel(std::istream& in);
void export_kernel_file(const MagKernel& kernel, const std::string& path);
MagKernel import_kernel_file(const std::string& path);

}  // namespace scanmix
