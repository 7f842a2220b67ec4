#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "model.hpp"

namespace scanmix {

enum class CouplingRule { grand_monotone, rematched_monotone, independent, two_coord_closing };

std::string_view to_string(CouplingRule rule);

/// Two configurations evolved jointly; matching[v] is the vertex of x_tilde paired with v of x.
struct CoupledPair {
  SpinConfig x;
  SpinConfig x_tilde;
  std::vector<int> matching;
  CouplingRule rule = CouplingRule::grand_monotone;

  static CoupledPair identity(SpinConfig x, SpinConfig x_tilde, CouplingRule rule);
  bool matching_is_bijection() const;
};

/// Agreement counts with a reference configuration sigma0 on its plus (u) and minus (v) sites.
struct TwoCoordState {
  int u = 0;
  int v = 0;
  int u0 = 0;
  int v0 = 0;
};

struct CouplingStats {
  int hamming = 0;       // positional disagreements
  double mag_gap = 0.0;  // |S(x) - S(x_tilde)|
  int r_value = 0;       // U(x_tilde) - U(x), when a reference configuration is in play
  bool coalesced = false;
  std::int64_t step = 0;
  int stop_events = 0;   // sub-updates that fell back to independent updates
  CouplingRule rule = CouplingRule::grand_monotone;
};

/// Disagreements between x(v) and x_tilde(matching[v]); an empty matching means identity.
int hamming(const SpinConfig& x, const SpinConfig& x_tilde, std::span<const int> matching = {});

std::vector<int> identity_matching(int n);

/// Advances every configuration with one shared scan order and shared uniforms.
void grand_coupling_step(const ModelParams& params, std::span<SpinConfig> configs, RngStream& rng);

/// Reusable grand coupler for hot loops (no per-step allocation).
class GrandCoupler {
 public:
  explicit GrandCoupler(const ModelParams& params);
  void step(std::span<SpinConfig> configs, RngStream& rng);
  void step(SpinConfig& a, SpinConfig& b, RngStream& rng);
  const UpdateRule& rule() const { return rule_; }

 private:
  ModelParams params_;
  UpdateRule rule_;
  ScanSampler sampler_;
  std::vector<int> order_;
};

/// Pairs equal spins positionally and (+,-) disagreements with (-,+) disagreements in
/// ascending index order. Requires S(x) = S(x_tilde).
CoupledPair rematch_by_spin(const CoupledPair& pair);

struct CoupledStep {
  CoupledPair pair;
  CouplingStats stats;
  std::vector<int> r_trace;       // R after each sub-update (k + 1 entries), two-coordinate rule
  std::vector<char> interior;     // pre-update state inside Xi_1, per sub-update
  std::vector<char> moved;        // R changed at this sub-update
};

/// Rematches at the step boundary, then updates matched vertices with shared uniforms.
/// Magnetizations stay equal; D = hamming / 2 is a supermartingale.
CoupledStep rematched_monotone_step(const ModelParams& params, const CoupledPair& pair,
                                    RngStream& rng);

TwoCoordState two_coordinate(const SpinConfig& sigma0, const SpinConfig& sigma);

/// min(U, u0 - U, V, v0 - V) >= n / 16.
bool in_xi1(const TwoCoordState& s, int n);

/**
 * One scan step of the two-coordinate closing coupling relative to sigma0.
 * x updates a uniform available vertex; x_tilde updates a uniform available vertex
 * carrying the same current spin, and both receive the same new spin. Requires
 * S(x) = S(x_tilde) and R = U(x_tilde) - U(x) > 0.
 */
CoupledStep two_coord_closing_step(const ModelParams& params, const CoupledPair& pair,
                                   const SpinConfig& sigma0, RngStream& rng);

/// Advances a pair under independent scan steps.
CoupledStep independent_step(const ModelParams& params, const CoupledPair& pair, RngStream& rng);

/// First t <= t_max at which grand-coupled all-plus and all-minus chains agree.
std::optional<std::int64_t> coalescence_time(const ModelParams& params, RngStream& rng,
                                             std::int64_t t_max);

CouplingStats pair_stats(const CoupledPair& pair);

}  // namespace scanmix
