#include <algorithm>
#include <cmath>
#include <vector>

#include "couplings.hpp"
#include "doctest.h"
#include "errors.hpp"

using namespace scanmix;

namespace {

SpinConfig from(std::initializer_list<int> s) {
  std::vector<std::int8_t> v;
  for (int x : s) v.push_back(static_cast<std::int8_t>(x));
  return SpinConfig(std::move(v));
}

bool dominates(const SpinConfig& a, const SpinConfig& b) {
  for (int v = 0; v < a.n(); ++v) {
    if (a[v] < b[v]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("hamming") {
  CHECK(hamming(from({1, 1, -1, -1}), from({1, -1, 1, -1})) == 2);
  CHECK(hamming(SpinConfig::all_plus(7), SpinConfig::all_minus(7)) == 7);
  CHECK(hamming(from({1, -1}), from({-1, 1}), std::vector<int>{1, 0}) == 0);
  CHECK_THROWS_AS(hamming(from({1, -1}), from({1, -1, 1})), ValidationError);
}

TEST_CASE("rematch by spin") {
  const auto pair = CoupledPair::identity(from({1, 1, -1, -1}), from({1, -1, 1, -1}),
                                          CouplingRule::grand_monotone);
  const auto re = rematch_by_spin(pair);
  CHECK(hamming(re.x, re.x_tilde) / 2 == 1);
  CHECK(re.matching[1] == 2);
  CHECK(re.matching[2] == 1);
  CHECK(re.matching[0] == 0);
  CHECK(re.matching[3] == 3);
  CHECK(re.matching_is_bijection());
  CHECK(hamming(re.x, re.x_tilde, re.matching) == 0);

  const auto bad = CoupledPair::identity(from({1, 1, -1, -1}), from({1, 1, 1, -1}),
                                         CouplingRule::grand_monotone);
  CHECK_THROWS_AS(rematch_by_spin(bad), PreconditionError);
}

TEST_CASE("grand coupling preserves order") {
  const auto p = make_params(60, 5, 1.3);
  RngStream rng(7, 1);
  std::vector<SpinConfig> cs{SpinConfig::all_plus(60), SpinConfig::random(60, rng),
                             SpinConfig::all_minus(60)};
  for (int t = 0; t < 300; ++t) {
    grand_coupling_step(p, cs, rng);
    REQUIRE(dominates(cs[0], cs[1]));
    REQUIRE(dominates(cs[1], cs[2]));
  }
}

TEST_CASE("rematched step keeps magnetizations equal and never increases D on average") {
  const auto p = make_params(100, 4, 0.5);
  RngStream rng(3, 9);
  double sum_delta = 0.0;
  const int N = 4000;
  for (int i = 0; i < N; ++i) {
    SpinConfig x = SpinConfig::random(100, rng);
    std::vector<std::int8_t> s(x.spins().begin(), x.spins().end());
    for (int j = 99; j > 0; --j) std::swap(s[j], s[rng.below(static_cast<std::uint64_t>(j + 1))]);
    const auto pair = CoupledPair::identity(x, SpinConfig(s), CouplingRule::grand_monotone);
    const int d0 = hamming(pair.x, pair.x_tilde) / 2;
    const auto step = rematched_monotone_step(p, pair, rng);
    REQUIRE(step.pair.x.plus_count() == step.pair.x_tilde.plus_count());
    REQUIRE(step.pair.matching_is_bijection());
    sum_delta += hamming(step.pair.x, step.pair.x_tilde) / 2 - d0;
  }
  CHECK(sum_delta / N < 0.0);
}

TEST_CASE("two-coordinate statistics") {
  const auto sigma0 = from({1, 1, -1, -1});
  const auto s = two_coordinate(sigma0, from({1, -1, -1, 1}));
  CHECK(s.u == 1);
  CHECK(s.v == 1);
  CHECK(s.u0 == 2);
  CHECK(s.v0 == 2);
  CHECK(in_xi1(TwoCoordState{10, 10, 20, 20}, 160));
  CHECK_FALSE(in_xi1(TwoCoordState{9, 10, 20, 20}, 160));
}

TEST_CASE("two-coordinate closing step") {
  const auto p = make_params(40, 3, 0.5);
  const auto sigma0 = SpinConfig::with_plus_count(40, 20);
  RngStream rng(11, 2);
  // x agrees with sigma0 on 10 plus sites, x_tilde on 12; equal plus-counts.
  std::vector<std::int8_t> a(40, -1), b(40, -1);
  for (int v = 0; v < 10; ++v) a[v] = 1;
  for (int v = 20; v < 30; ++v) a[v] = 1;
  for (int v = 0; v < 12; ++v) b[v] = 1;
  for (int v = 20; v < 28; ++v) b[v] = 1;
  const auto pair = CoupledPair::identity(SpinConfig(a), SpinConfig(b), CouplingRule::two_coord_closing);
  for (int i = 0; i < 200; ++i) {
    const auto step = two_coord_closing_step(p, pair, sigma0, rng);
    CHECK(step.r_trace.size() == 4);
    CHECK(step.r_trace.front() == 2);
    if (step.stats.stop_events == 0) {
      CHECK(step.pair.x.plus_count() == step.pair.x_tilde.plus_count());
    }
    for (std::size_t j = 1; j < step.r_trace.size(); ++j) {
      CHECK(std::abs(step.r_trace[j] - step.r_trace[j - 1]) <= 1);
    }
  }
  const auto equal = CoupledPair::identity(SpinConfig(a), SpinConfig(a), CouplingRule::two_coord_closing);
  CHECK_THROWS_AS(two_coord_closing_step(p, equal, sigma0, rng), PreconditionError);
  const auto unequal = CoupledPair::identity(SpinConfig(a), SpinConfig::all_plus(40),
                                             CouplingRule::two_coord_closing);
  CHECK_THROWS_AS(two_coord_closing_step(p, unequal, sigma0, rng), PreconditionError);
}

TEST_CASE("coalescence") {
  SUBCASE("beta = 0 and k = n coalesce in one step") {
    RngStream rng(5, 5);
    for (int i = 0; i < 20; ++i) CHECK(coalescence_time(make_params(30, 30, 0.0), rng, 10) == 1);
  }
  SUBCASE("beta = 0 and k = 1 behaves like coupon collection") {
    const int n = 50;
    double h = 0.0;
    for (int i = 1; i <= n; ++i) h += 1.0 / i;
    std::vector<std::int64_t> times;
    RngStream rng(5, 6);
    for (int i = 0; i < 401; ++i) {
      const auto t = coalescence_time(make_params(n, 1, 0.0), rng, 100000);
      REQUIRE(t.has_value());
      times.push_back(*t);
    }
    std::nth_element(times.begin(), times.begin() + 200, times.end());
    const double median = static_cast<double>(times[200]);
    CHECK(median >= n * h / 3.0);
    CHECK(median <= n * h * 3.0);
  }
  SUBCASE("restricted mode is rejected") {
    RngStream rng(1, 1);
    CHECK_THROWS_AS(coalescence_time(make_params(10, 1, 1.5, Mode::restricted), rng, 10),
                    ValidationError);
  }
}

TEST_CASE("independent step") {
  const auto p = make_params(20, 2, 0.4);
  RngStream rng(2, 2);
  const auto pair = CoupledPair::identity(SpinConfig::all_plus(20), SpinConfig::all_minus(20),
                                          CouplingRule::grand_monotone);
  const auto step = independent_step(p, pair, rng);
  CHECK(step.pair.rule == CouplingRule::independent);
  CHECK(step.pair.x.consistent());
  CHECK(step.pair.x_tilde.consistent());
  CHECK(hamming(step.pair.x, pair.x) <= 2);
}
