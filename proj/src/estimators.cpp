#include "estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "couplings.hpp"
#include "errors.hpp"
#include "parallel.hpp"

namespace scanmix {

namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(std::span<const double> xs) {
  MeanSe r;
  if (xs.empty()) return r;
  r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() < 2) return r;
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  return r;
}

// Stream indices reserved for auxiliary draws, disjoint from replica indices.
constexpr std::uint64_t kBootstrapStream = 0xb0075'7a9ULL << 32;

}  // namespace

MagChainSampler::MagChainSampler(const ModelParams& params) : params_(params), rule_(params) {}

int MagChainSampler::step(int m, RngStream& rng) const {
  const int n = params_.n;
  int scanned_plus = 0;
  for (int i = 0; i < params_.k; ++i) {
    const bool plus = static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i))) <
                      m - scanned_plus;
    const double u = rng.uniform();
    const bool becomes_plus = u <= rule_.prob_plus(m, plus ? 1 : -1);
    if (plus && !becomes_plus) --m;
    if (!plus && becomes_plus) ++m;
    scanned_plus += becomes_plus;
  }
  if (params_.mode == Mode::restricted && 2 * m < n) m = n - m;
  return m;
}

int MagChainSampler::run(int m0, std::int64_t t, RngStream& rng) const {
  int m = m0;
  for (std::int64_t s = 0; s < t; ++s) m = step(m, rng);
  return m;
}

int sample_mag_chain(const ModelParams& params, int m0, std::int64_t t, RngStream& rng) {
  if (m0 < 0 || m0 > params.n) throw ValidationError("start plus-count out of range");
  if (params.mode == Mode::restricted && 2 * m0 < params.n) {
    throw ValidationError("restricted chain must start with S >= 0");
  }
  return MagChainSampler(params).run(m0, t, rng);
}

namespace {

EstimateWithCI tv_bound_from_counts(std::span<const std::int64_t> counts, const Distribution& mu,
                                    std::int64_t replicas, RngStream boot, int bootstrap) {
  const std::size_t dim = counts.size();
  const auto R = static_cast<double>(replicas);
  auto tv_counts = [&](std::span<const std::int64_t> c, std::span<const double> ref) {
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) s += std::abs(static_cast<double>(c[i]) / R - ref[i]);
    return 0.5 * s;
  };
  const double plug_in = tv_counts(counts, mu.weights);

  std::vector<double> empirical(dim);
  for (std::size_t i = 0; i < dim; ++i) empirical[i] = static_cast<double>(counts[i]) / R;
  std::vector<std::int64_t> cumulative(dim);
  std::partial_sum(counts.begin(), counts.end(), cumulative.begin());

  const int B = std::max(2, bootstrap);
  std::vector<double> deviation(static_cast<std::size_t>(B));
  std::vector<double> boot_tv(static_cast<std::size_t>(B));
  std::vector<std::int64_t> resampled(dim);
  for (int b = 0; b < B; ++b) {
    std::fill(resampled.begin(), resampled.end(), 0);
    for (std::int64_t r = 0; r < replicas; ++r) {
      const auto x = static_cast<std::int64_t>(boot.below(static_cast<std::uint64_t>(replicas)));
      const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
      ++resampled[static_cast<std::size_t>(it - cumulative.begin())];
    }
    deviation[static_cast<std::size_t>(b)] = tv_counts(resampled, empirical);
    boot_tv[static_cast<std::size_t>(b)] = tv_counts(resampled, mu.weights);
  }
  std::sort(deviation.begin(), deviation.end());
  const double allowance =
      deviation[static_cast<std::size_t>(std::ceil(0.95 * B)) - 1];

  EstimateWithCI est;
  est.value = std::max(0.0, plug_in - allowance);
  const MeanSe spread = mean_se(boot_tv);
  est.std_error = spread.se * std::sqrt(static_cast<double>(B));
  est.replicas = replicas;
  return est;
}

}  // namespace

EstimateWithCI mc_tv_lower_bound(const ModelParams& params, int m0, std::int64_t t,
                                 std::int64_t replicas, const RngStream& rng,
                                 const TvBoundOptions& options) {
  const std::int64_t times[] = {t};
  return mc_tv_lower_bound_grid(params, m0, times, replicas, rng, options).front();
}

std::vector<EstimateWithCI> mc_tv_lower_bound_grid(const ModelParams& params, int m0,
                                                   std::span<const std::int64_t> times,
                                                   std::int64_t replicas, const RngStream& rng,
                                                   const TvBoundOptions& options) {
  if (replicas < 1) throw ValidationError("replicas must be positive");
  if (m0 < 0 || m0 > params.n) throw ValidationError("start plus-count out of range");
  if (times.empty()) return {};
  if (!std::is_sorted(times.begin(), times.end()) || times.front() < 0) {
    throw ValidationError("times must be non-negative and ascending");
  }
  const Distribution mu = stationary_magnetization(params);
  const MagChainSampler sampler(params);
  const std::size_t T = times.size();
  const int start = params.mode == Mode::restricted ? std::max(m0, params.n - m0) : m0;
  std::vector<int> finals(static_cast<std::size_t>(replicas) * T);
  parallel_for(static_cast<std::size_t>(replicas), options.workers, [&](std::size_t r) {
    RngStream stream = rng.substream(r);
    int m = start;
    std::int64_t now = 0;
    for (std::size_t j = 0; j < T; ++j) {
      for (; now < times[j]; ++now) m = sampler.step(m, stream);
      finals[r * T + j] = m;
    }
  });

  const auto dim = static_cast<std::size_t>(params.n + 1);
  std::vector<EstimateWithCI> out;
  out.reserve(T);
  std::vector<std::int64_t> counts(dim);
  for (std::size_t j = 0; j < T; ++j) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t r = 0; r < static_cast<std::size_t>(replicas); ++r) {
      ++counts[static_cast<std::size_t>(finals[r * T + j])];
    }
    EstimateWithCI est = tv_bound_from_counts(counts, mu, replicas,
                                              rng.substream(kBootstrapStream + j),
                                              options.bootstrap);
    est.seed = rng.seed();
    out.push_back(est);
  }
  return out;
}

std::vector<EstimateWithCI> coupling_survival(const ModelParams& params,
                                              std::span<const std::int64_t> times,
                                              std::int64_t replicas, const RngStream& rng,
                                              int workers) {
  if (replicas < 1) throw ValidationError("replicas must be positive");
  const std::int64_t t_max = times.empty() ? 0 : *std::max_element(times.begin(), times.end());
  std::vector<std::int64_t> coalesce(static_cast<std::size_t>(replicas));
  parallel_for(coalesce.size(), workers, [&](std::size_t r) {
    RngStream stream = rng.substream(r);
    const auto tc = coalescence_time(params, stream, t_max);
    coalesce[r] = tc ? *tc : t_max + 1;
  });
  std::vector<EstimateWithCI> out;
  for (std::int64_t t : times) {
    const auto alive = std::count_if(coalesce.begin(), coalesce.end(),
                                     [t](std::int64_t c) { return c > t; });
    const double p = static_cast<double>(alive) / static_cast<double>(replicas);
    out.push_back({p, std::sqrt(p * (1.0 - p) / static_cast<double>(replicas)), replicas,
                   rng.seed()});
  }
  return out;
}

EstimateWithCI mc_coupling_upper_bound(const ModelParams& params, std::int64_t t,
                                       std::int64_t replicas, const RngStream& rng,
                                       int workers) {
  const std::int64_t times[] = {t};
  return coupling_survival(params, times, replicas, rng, workers).front();
}

double fixed_point_s_star(double beta) {
  if (!(beta > 1.0)) throw ValidationError("s* is defined only for beta > 1");
  auto f = [beta](double s) { return std::tanh(beta * s) - s; };
  double lo = 0.5;
  while (f(lo) <= 0.0 && lo > 1e-300) lo *= 0.5;
  double hi = 1.0;
  for (int i = 0; i < 2000 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return std::abs(f(lo)) <= std::abs(f(hi)) ? lo : hi;
}

namespace {

HittingRecord run_hitting(const ModelParams& params, HittingKind kind, double alpha,
                          RngStream& rng, std::int64_t t_max) {
  if (params.mode != Mode::restricted) {
    throw ValidationError("hitting times are defined for the restricted dynamics");
  }
  const double threshold = fixed_point_s_star(params.beta) + alpha / std::sqrt(params.n);
  const MagChainSampler sampler(params);
  const int n = params.n;
  int m = kind == HittingKind::above ? n : (n + 1) / 2;
  auto reached = [&](int plus) {
    const double s = magnetization_of(plus, n);
    return kind == HittingKind::above ? s <= threshold : s >= threshold;
  };
  HittingRecord rec{0, threshold, false, t_max};
  for (std::int64_t t = 0;; ++t) {
    if (reached(m)) {
      rec.tau = t;
      rec.hit = true;
      return rec;
    }
    if (t == t_max) break;
    m = sampler.step(m, rng);
  }
  rec.tau = t_max;
  return rec;
}

}  // namespace

HittingRecord hitting_time_tau_star_above(const ModelParams& params, double alpha,
                                          RngStream& rng, std::int64_t t_max) {
  return run_hitting(params, HittingKind::above, alpha, rng, t_max);
}

HittingRecord hitting_time_tau_star_below(const ModelParams& params, double alpha,
                                          RngStream& rng, std::int64_t t_max) {
  return run_hitting(params, HittingKind::below, alpha, rng, t_max);
}

HittingSummary hitting_time_summary(const ModelParams& params, HittingKind kind, double alpha,
                                    std::int64_t replicas, std::int64_t t_max,
                                    const RngStream& rng, int workers) {
  if (replicas < 1) throw ValidationError("replicas must be positive");
  HittingSummary s;
  s.records.resize(static_cast<std::size_t>(replicas));
  parallel_for(s.records.size(), workers, [&](std::size_t r) {
    RngStream stream = rng.substream(r);
    s.records[r] = run_hitting(params, kind, alpha, stream, t_max);
  });
  std::vector<double> taus;
  taus.reserve(s.records.size());
  for (const auto& rec : s.records) {
    taus.push_back(static_cast<double>(rec.tau));
    s.timeouts += !rec.hit;
  }
  const MeanSe ms = mean_se(taus);
  s.mean = {ms.mean, ms.se, replicas, rng.seed()};
  std::vector<double> sorted = taus;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t h = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
  return s;
}

PowerLawFit fit_power_law(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ValidationError("x and y lengths differ");
  if (xs.size() < 3) throw ValidationError("power-law fit needs at least 3 points");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
      throw ValidationError("power-law fit needs positive values");
    }
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  const double N = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / N;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / N;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw ValidationError("power-law fit needs distinct x values");
  PowerLawFit fit;
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - (fit.intercept + fit.exponent * lx[i]);
    sse += e * e;
  }
  fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  fit.exponent_se = std::sqrt(sse / (N - 2.0) / sxx);
  return fit;
}

ChiSquareResult chi_square_gof(std::span<const std::int64_t> counts,
                               std::span<const double> probs, double min_expected) {
  if (counts.size() != probs.size()) throw ValidationError("counts and probabilities differ");
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(),
                                                           std::int64_t{0}));
  ChiSquareResult res;
  std::vector<double> obs;
  std::vector<double> exp;
  double o = 0.0;
  double e = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    o += static_cast<double>(counts[i]);
    e += probs[i] * total;
    if (e >= min_expected) {
      obs.push_back(o);
      exp.push_back(e);
      o = 0.0;
      e = 0.0;
    }
  }
  // Leftover tail joins the last pooled bin.
  if (o > 0.0 || e > 0.0) {
    if (obs.empty()) {
      obs.push_back(o);
      exp.push_back(e);
    } else {
      obs.back() += o;
      exp.back() += e;
    }
  }
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (exp[i] > 0.0) {
      res.statistic += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
    } else if (obs[i] > 0.0) {
      res.statistic = INFINITY;
    }
  }
  const int bins = static_cast<int>(obs.size());
  res.dof = std::max(1, bins - 1);
  if (!std::isfinite(res.statistic)) {
    res.p_value = 0.0;
  } else {
    boost::math::chi_squared dist(res.dof);
    res.p_value = boost::math::cdf(boost::math::complement(dist, res.statistic));
  }
  return res;
}

double hamming_contraction_rate(const ModelParams& params) {
  const double b = params.beta;
  if (b == 0.0) return 1.0 - static_cast<double>(params.k) / params.n;
  return (1.0 + (b - 1.0) * std::pow(1.0 + b / params.n, params.k)) / b;
}

bool ContractionReport::passed() const {
  return std::all_of(rows.begin(), rows.end(),
                     [](const ContractionRow& r) { return r.dist_ok && r.gap_ok; });
}

ContractionReport contraction_test(const ModelParams& params,
                                   std::span<const std::int64_t> t_grid, std::int64_t replicas,
                                   const RngStream& rng, int workers) {
  if (params.mode != Mode::standard) throw ValidationError("contraction test expects standard mode");
  if (replicas < 2) throw ValidationError("contraction test needs at least 2 replicas");
  const int n = params.n;
  const std::size_t G = t_grid.size();
  const std::int64_t t_max = G ? *std::max_element(t_grid.begin(), t_grid.end()) : 0;
  const auto R = static_cast<std::size_t>(replicas);
  std::vector<double> dist(R * G);
  std::vector<double> gap(R * G);
  parallel_for(R, workers, [&](std::size_t r) {
    RngStream stream = rng.substream(r);
    GrandCoupler coupler(params);
    SpinConfig a = SpinConfig::random(n, stream);
    SpinConfig b = a;
    const auto v = static_cast<int>(stream.below(static_cast<std::uint64_t>(n)));
    b.set(v, static_cast<std::int8_t>(-a[v]));
    SpinConfig top = SpinConfig::all_plus(n);
    SpinConfig bottom = SpinConfig::all_minus(n);
    for (std::int64_t t = 0; t <= t_max; ++t) {
      for (std::size_t g = 0; g < G; ++g) {
        if (t_grid[g] != t) continue;
        dist[r * G + g] = hamming(a, b);
        gap[r * G + g] = std::abs(magnetization(top) - magnetization(bottom));
      }
      if (t == t_max) break;
      coupler.step(a, b, stream);
      coupler.step(top, bottom, stream);
    }
  });

  ContractionReport rep;
  rep.rho_hamming = hamming_contraction_rate(params);
  rep.rho = 1.0 - params.k * (1.0 - params.beta) / n;
  std::vector<double> col(R);
  for (std::size_t g = 0; g < G; ++g) {
    ContractionRow row;
    row.t = t_grid[g];
    for (std::size_t r = 0; r < R; ++r) col[r] = dist[r * G + g];
    const MeanSe d = mean_se(col);
    for (std::size_t r = 0; r < R; ++r) col[r] = gap[r * G + g];
    const MeanSe s = mean_se(col);
    const auto t = static_cast<double>(row.t);
    row.mean_dist = d.mean;
    row.se_dist = d.se;
    row.dist_bound = std::pow(rep.rho_hamming, t);
    if (params.beta < 1.0) row.dist_bound = std::min(row.dist_bound, std::pow(rep.rho, t));
    row.mean_gap = s.mean;
    row.se_gap = s.se;
    row.gap_bound = 2.0 * std::pow(rep.rho, t);
    row.dist_ok = row.mean_dist <= row.dist_bound + 3.0 * row.se_dist;
    row.gap_ok = params.beta >= 1.0 || row.mean_gap <= row.gap_bound + 3.0 * row.se_gap;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace scanmix
