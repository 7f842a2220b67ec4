#include "model.hpp"

#include <cmath>
#include <string>

#include "errors.hpp"

namespace scanmix {

std::string_view to_string(Mode mode) {
  return mode == Mode::standard ? "standard" : "restricted";
}

Mode parse_mode(std::string_view text) {
  if (text == "standard") return Mode::standard;
  if (text == "restricted") return Mode::restricted;
  throw ValidationError("unknown mode '" + std::string(text) + "'");
}

ModelParams make_params(int n, int k, double beta, Mode mode) {
  if (n < 2) throw ValidationError("n must be at least 2 (got " + std::to_string(n) + ")");
  if (k < 1) throw ValidationError("k must be at least 1 (got " + std::to_string(k) + ")");
  if (k > n) {
    throw ValidationError("k exceeds n (k=" + std::to_string(k) + ", n=" + std::to_string(n) +
                          ")");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ValidationError("beta must be a finite non-negative number");
  }
  ModelParams p;
  p.n = n;
  p.k = k;
  p.beta = beta;
  p.mode = mode;
  p.restricted_warning = mode == Mode::restricted && beta <= 1.0;
  return p;
}

double update_prob_plus(double beta, double x) { return 0.5 * (1.0 + std::tanh(beta * x)); }

SpinConfig::SpinConfig(std::vector<std::int8_t> spins) : spins_(std::move(spins)) {
  for (auto s : spins_) {
    if (s != 1 && s != -1) throw ValidationError("spins must be +1 or -1");
    plus_ += s == 1;
  }
}

SpinConfig SpinConfig::all_plus(int n) { return with_plus_count(n, n); }
SpinConfig SpinConfig::all_minus(int n) { return with_plus_count(n, 0); }

SpinConfig SpinConfig::with_plus_count(int n, int plus) {
  if (plus < 0 || plus > n) throw ValidationError("plus count out of range");
  std::vector<std::int8_t> s(static_cast<std::size_t>(n), -1);
  for (int v = 0; v < plus; ++v) s[static_cast<std::size_t>(v)] = 1;
  return SpinConfig(std::move(s));
}

SpinConfig SpinConfig::random(int n, RngStream& rng) {
  std::vector<std::int8_t> s(static_cast<std::size_t>(n));
  for (auto& x : s) x = (rng.next_u64() >> 63) ? 1 : -1;
  return SpinConfig(std::move(s));
}

void SpinConfig::set(int v, std::int8_t s) {
  auto& cur = spins_[static_cast<std::size_t>(v)];
  plus_ += (s == 1) - (cur == 1);
  cur = s;
}

void SpinConfig::flip_all() {
  for (auto& s : spins_) s = static_cast<std::int8_t>(-s);
  plus_ = n() - plus_;
}

SpinConfig SpinConfig::flipped() const {
  SpinConfig c = *this;
  c.flip_all();
  return c;
}

bool SpinConfig::consistent() const {
  int count = 0;
  for (auto s : spins_) count += s == 1;
  return count == plus_;
}

double magnetization(const SpinConfig& config) {
  return magnetization_of(config.plus_count(), config.n());
}

UpdateRule::UpdateRule(const ModelParams& params)
    : n_(params.n), table_(static_cast<std::size_t>(2 * params.n + 3)) {
  for (int m = 0; m <= params.n; ++m) {
    for (int s : {-1, 1}) {
      const int field = params.self_in_field ? 2 * m - params.n : 2 * m - params.n - s;
      table_[static_cast<std::size_t>(2 * m - s + 1)] =
          update_prob_plus(params.beta, static_cast<double>(field) / params.n);
    }
  }
}

ScanSampler::ScanSampler(int n) : index_(static_cast<std::size_t>(n)) {
  for (int i = 0; i < n; ++i) index_[static_cast<std::size_t>(i)] = i;
}

void ScanSampler::sample(int k, RngStream& rng, std::vector<int>& out) {
  const auto n = index_.size();
  out.resize(static_cast<std::size_t>(k));
  swaps_.resize(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(index_[i], index_[j]);
    swaps_[i] = static_cast<int>(j);
    out[i] = index_[i];
  }
  for (std::size_t i = out.size(); i-- > 0;) {
    std::swap(index_[i], index_[static_cast<std::size_t>(swaps_[i])]);
  }
}

StepDraws draw_step(const ModelParams& params, ScanSampler& sampler, RngStream& rng) {
  StepDraws d;
  sampler.sample(params.k, rng, d.order.vertices);
  d.uniforms.resize(static_cast<std::size_t>(params.k));
  for (auto& u : d.uniforms) u = rng.uniform();
  return d;
}

SpinConfig single_site_update(const ModelParams& params, const SpinConfig& config, int v,
                              double u) {
  if (config.n() != params.n) throw ValidationError("configuration size does not match n");
  if (v < 0 || v >= params.n) throw ValidationError("vertex index out of range");
  SpinConfig out = config;
  UpdateRule(params).apply(out, v, u);
  return out;
}

ScanOrder sample_scan_order(const ModelParams& params, RngStream& rng) {
  ScanSampler sampler(params.n);
  return sampler.sample(params.k, rng);
}

IntermediateTrace apply_scan(const UpdateRule& rule, SpinConfig& config, const StepDraws& draws) {
  IntermediateTrace trace;
  trace.order = draws.order;
  trace.states.reserve(draws.uniforms.size() + 1);
  trace.states.push_back(config.plus_count());
  for (std::size_t i = 0; i < draws.uniforms.size(); ++i) {
    rule.apply(config, draws.order.vertices[i], draws.uniforms[i]);
    trace.states.push_back(config.plus_count());
  }
  return trace;
}

StepResult scan_step(const ModelParams& params, const SpinConfig& config, RngStream& rng) {
  if (config.n() != params.n) throw ValidationError("configuration size does not match n");
  ScanSampler sampler(params.n);
  const StepDraws draws = draw_step(params, sampler, rng);
  StepResult r{config, {}};
  r.trace = apply_scan(UpdateRule(params), r.config, draws);
  return r;
}

StepResult restricted_scan_step(const ModelParams& params, const SpinConfig& config,
                                RngStream& rng) {
  if (2 * config.plus_count() < config.n()) {
    throw ValidationError("restricted dynamics requires a non-negative magnetization");
  }
  StepResult r = scan_step(params, config, rng);
  if (2 * r.config.plus_count() < r.config.n()) r.config.flip_all();
  return r;
}

}  // namespace scanmix
