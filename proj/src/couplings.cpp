#include "couplings.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace scanmix {

std::string_view to_string(CouplingRule rule) {
  switch (rule) {
    case CouplingRule::grand_monotone: return "grand_monotone";
    case CouplingRule::rematched_monotone: return "rematched_monotone";
    case CouplingRule::independent: return "independent";
    case CouplingRule::two_coord_closing: return "two_coord_closing";
  }
  return "unknown";
}

CoupledPair CoupledPair::identity(SpinConfig x, SpinConfig x_tilde, CouplingRule rule) {
  if (x.n() != x_tilde.n()) throw ValidationError("coupled configurations differ in size");
  CoupledPair p{std::move(x), std::move(x_tilde), {}, rule};
  p.matching = identity_matching(p.x.n());
  return p;
}

bool CoupledPair::matching_is_bijection() const {
  if (matching.size() != static_cast<std::size_t>(x.n())) return false;
  std::vector<char> seen(matching.size(), 0);
  for (int w : matching) {
    if (w < 0 || w >= x.n() || seen[static_cast<std::size_t>(w)]) return false;
    seen[static_cast<std::size_t>(w)] = 1;
  }
  return true;
}

int hamming(const SpinConfig& x, const SpinConfig& x_tilde, std::span<const int> matching) {
  if (x.n() != x_tilde.n()) throw ValidationError("configurations differ in size");
  if (!matching.empty() && matching.size() != static_cast<std::size_t>(x.n())) {
    throw ValidationError("matching size does not match n");
  }
  int d = 0;
  for (int v = 0; v < x.n(); ++v) {
    const int w = matching.empty() ? v : matching[static_cast<std::size_t>(v)];
    d += x[v] != x_tilde[w];
  }
  return d;
}

std::vector<int> identity_matching(int n) {
  std::vector<int> m(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) m[static_cast<std::size_t>(v)] = v;
  return m;
}

GrandCoupler::GrandCoupler(const ModelParams& params)
    : params_(params), rule_(params), sampler_(params.n) {}

void GrandCoupler::step(std::span<SpinConfig> configs, RngStream& rng) {
  sampler_.sample(params_.k, rng, order_);
  for (int v : order_) {
    const double u = rng.uniform();
    for (auto& c : configs) rule_.apply(c, v, u);
  }
}

void GrandCoupler::step(SpinConfig& a, SpinConfig& b, RngStream& rng) {
  sampler_.sample(params_.k, rng, order_);
  for (int v : order_) {
    const double u = rng.uniform();
    rule_.apply(a, v, u);
    rule_.apply(b, v, u);
  }
}

void grand_coupling_step(const ModelParams& params, std::span<SpinConfig> configs,
                         RngStream& rng) {
  for (const auto& c : configs) {
    if (c.n() != params.n) throw ValidationError("configuration size does not match n");
  }
  GrandCoupler(params).step(configs, rng);
}

CoupledPair rematch_by_spin(const CoupledPair& pair) {
  if (pair.x.n() != pair.x_tilde.n()) throw ValidationError("configurations differ in size");
  if (pair.x.plus_count() != pair.x_tilde.plus_count()) {
    throw PreconditionError("rematch requires equal magnetizations");
  }
  const int n = pair.x.n();
  CoupledPair out{pair.x, pair.x_tilde, identity_matching(n), pair.rule};
  std::vector<int> plus_minus;
  std::vector<int> minus_plus;
  for (int v = 0; v < n; ++v) {
    if (pair.x[v] == pair.x_tilde[v]) continue;
    (pair.x[v] == 1 ? plus_minus : minus_plus).push_back(v);
  }
  for (std::size_t i = 0; i < plus_minus.size(); ++i) {
    out.matching[static_cast<std::size_t>(plus_minus[i])] = minus_plus[i];
    out.matching[static_cast<std::size_t>(minus_plus[i])] = plus_minus[i];
  }
  return out;
}

CouplingStats pair_stats(const CoupledPair& pair) {
  CouplingStats s;
  s.hamming = hamming(pair.x, pair.x_tilde);
  s.mag_gap = std::abs(magnetization(pair.x) - magnetization(pair.x_tilde));
  s.coalesced = s.hamming == 0;
  s.rule = pair.rule;
  return s;
}

CoupledStep rematched_monotone_step(const ModelParams& params, const CoupledPair& pair,
                                    RngStream& rng) {
  if (pair.x.n() != params.n) throw ValidationError("configuration size does not match n");
  CoupledStep out{rematch_by_spin(pair), {}, {}, {}, {}};
  out.pair.rule = CouplingRule::rematched_monotone;
  const UpdateRule rule(params);
  ScanSampler sampler(params.n);
  const StepDraws draws = draw_step(params, sampler, rng);
  for (std::size_t i = 0; i < draws.uniforms.size(); ++i) {
    const int v = draws.order.vertices[i];
    rule.apply(out.pair.x, v, draws.uniforms[i]);
    rule.apply(out.pair.x_tilde, out.pair.matching[static_cast<std::size_t>(v)],
               draws.uniforms[i]);
  }
  out.stats = pair_stats(out.pair);
  return out;
}

TwoCoordState two_coordinate(const SpinConfig& sigma0, const SpinConfig& sigma) {
  if (sigma0.n() != sigma.n()) throw ValidationError("configurations differ in size");
  TwoCoordState s;
  s.u0 = sigma0.plus_count();
  s.v0 = sigma0.n() - s.u0;
  for (int v = 0; v < sigma.n(); ++v) {
    if (sigma[v] != sigma0[v]) continue;
    (sigma0[v] == 1 ? s.u : s.v) += 1;
  }
  return s;
}

bool in_xi1(const TwoCoordState& s, int n) {
  const int lo = std::min({s.u, s.u0 - s.u, s.v, s.v0 - s.v});
  return 16 * lo >= n;
}

namespace {

int r_of(const SpinConfig& sigma0, const SpinConfig& x, const SpinConfig& x_tilde) {
  return two_coordinate(sigma0, x_tilde).u - two_coordinate(sigma0, x).u;
}

// Uniform vertex among available ones (optionally restricted to spin `want`).
int pick_available(const SpinConfig& c, const std::vector<char>& used, int want, RngStream& rng) {
  int count = 0;
  for (int v = 0; v < c.n(); ++v) {
    count += !used[static_cast<std::size_t>(v)] && (want == 0 || c[v] == want);
  }
  if (count == 0) return -1;
  auto idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(count)));
  for (int v = 0; v < c.n(); ++v) {
    if (used[static_cast<std::size_t>(v)] || (want != 0 && c[v] != want)) continue;
    if (idx-- == 0) return v;
  }
  return -1;
}

}  // namespace

CoupledStep two_coord_closing_step(const ModelParams& params, const CoupledPair& pair,
                                   const SpinConfig& sigma0, RngStream& rng) {
  const int n = params.n;
  if (pair.x.n() != n || pair.x_tilde.n() != n || sigma0.n() != n) {
    throw ValidationError("configuration size does not match n");
  }
  if (pair.x.plus_count() != pair.x_tilde.plus_count()) {
    throw PreconditionError("two-coordinate coupling requires equal magnetizations");
  }
  int r = r_of(sigma0, pair.x, pair.x_tilde);
  if (r <= 0) {
    throw PreconditionError("two-coordinate coupling requires U(x_tilde) - U(x) > 0");
  }
  CoupledStep out{pair, {}, {}, {}, {}};
  out.pair.rule = CouplingRule::two_coord_closing;
  const UpdateRule rule(params);
  std::vector<char> used_x(static_cast<std::size_t>(n), 0);
  std::vector<char> used_t(static_cast<std::size_t>(n), 0);
  int stops = 0;
  bool independent = false;
  out.r_trace.push_back(r);
  for (int i = 0; i < params.k; ++i) {
    const bool interior = in_xi1(two_coordinate(sigma0, out.pair.x), n) &&
                          in_xi1(two_coordinate(sigma0, out.pair.x_tilde), n);
    const int v = pick_available(out.pair.x, used_x, 0, rng);
    int w = -1;
    if (!independent) {
      w = pick_available(out.pair.x_tilde, used_t, out.pair.x[v], rng);
      if (w < 0) {
        independent = true;
        ++stops;
      }
    }
    const double u = rng.uniform();
    rule.apply(out.pair.x, v, u);
    used_x[static_cast<std::size_t>(v)] = 1;
    double u_tilde = u;
    if (independent) {
      w = pick_available(out.pair.x_tilde, used_t, 0, rng);
      u_tilde = rng.uniform();
    }
    rule.apply(out.pair.x_tilde, w, u_tilde);
    used_t[static_cast<std::size_t>(w)] = 1;
    const int r_next = r_of(sigma0, out.pair.x, out.pair.x_tilde);
    out.interior.push_back(interior ? 1 : 0);
    out.moved.push_back(r_next != r ? 1 : 0);
    r = r_next;
    out.r_trace.push_back(r);
  }
  out.stats = pair_stats(out.pair);
  out.stats.r_value = r;
  out.stats.stop_events = stops;
  if (stops > 0) out.pair.rule = CouplingRule::independent;
  return out;
}

CoupledStep independent_step(const ModelParams& params, const CoupledPair& pair,
                             RngStream& rng) {
  CoupledStep out{pair, {}, {}, {}, {}};
  out.pair.rule = CouplingRule::independent;
  const UpdateRule rule(params);
  ScanSampler sampler(params.n);
  for (SpinConfig* c : {&out.pair.x, &out.pair.x_tilde}) {
    const StepDraws d = draw_step(params, sampler, rng);
    apply_scan(rule, *c, d);
  }
  out.stats = pair_stats(out.pair);
  return out;
}

std::optional<std::int64_t> coalescence_time(const ModelParams& params, RngStream& rng,
                                             std::int64_t t_max) {
  if (params.mode != Mode::standard) {
    throw ValidationError("coalescence_time expects standard mode");
  }
  SpinConfig top = SpinConfig::all_plus(params.n);
  SpinConfig bottom = SpinConfig::all_minus(params.n);
  GrandCoupler coupler(params);
  // The grand coupling keeps top >= bottom coordinatewise, so equal plus-counts
  // means identical configurations.
  for (std::int64_t t = 1; t <= t_max; ++t) {
    coupler.step(top, bottom, rng);
    if (top.plus_count() == bottom.plus_count()) return t;
  }
  return std::nullopt;
}

}  // namespace scanmix
