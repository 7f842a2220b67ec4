#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "errors.hpp"
#include "estimators.hpp"
#include "kernels.hpp"

using namespace scanmix;

TEST_CASE("fixed point s*") {
  // mpmath findroot at 40 digits.
  CHECK(fixed_point_s_star(1.2) == doctest::Approx(0.65856966040575405).epsilon(1e-14));
  CHECK(fixed_point_s_star(1.5) == doctest::Approx(0.85855963664011036).epsilon(1e-14));
  CHECK(fixed_point_s_star(2.0) == doctest::Approx(0.95750402407726874).epsilon(1e-14));
  CHECK(fixed_point_s_star(3.0) == doctest::Approx(0.99490152845262894).epsilon(1e-14));
  const double s = fixed_point_s_star(1.01);
  CHECK(std::tanh(1.01 * s) == doctest::Approx(s).epsilon(1e-12));
  CHECK_THROWS_AS(fixed_point_s_star(1.0), ValidationError);
  CHECK_THROWS_AS(fixed_point_s_star(0.5), ValidationError);
}

TEST_CASE("power-law fit") {
  const std::vector<double> xs{1, 2, 4, 8, 16};
  const auto lin = fit_power_law(xs, xs);
  CHECK(lin.exponent == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lin.r2 == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<double> sq;
  for (double x : xs) sq.push_back(3.0 * x * x);
  const auto q = fit_power_law(xs, sq);
  CHECK(q.exponent == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::exp(q.intercept) == doctest::Approx(3.0).epsilon(1e-12));

  std::vector<double> noisy;
  const double wiggle[] = {1.03, 0.98, 1.01, 0.97, 1.02};
  for (std::size_t i = 0; i < xs.size(); ++i) noisy.push_back(std::pow(xs[i], 1.5) * wiggle[i]);
  const auto f = fit_power_law(xs, noisy);
  CHECK(f.exponent == doctest::Approx(1.5).epsilon(0.02));
  CHECK(f.r2 > 0.99);
  CHECK(f.exponent_se > 0.0);

  CHECK_THROWS_AS(fit_power_law(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ValidationError);
  CHECK_THROWS_AS(fit_power_law(std::vector<double>{1, 2, -3}, std::vector<double>{1, 2, 3}),
                  ValidationError);
}

TEST_CASE("chi-square goodness of fit") {
  // scipy.stats.chisquare reference.
  const std::vector<std::int64_t> counts{18, 25, 31, 14, 12};
  const std::vector<double> probs{0.2, 0.25, 0.3, 0.15, 0.1};
  const auto r = chi_square_gof(counts, probs);
  CHECK(r.statistic == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(r.dof == 4);
  CHECK(r.p_value == doctest::Approx(0.9513289211202631).epsilon(1e-10));

  // The last two bins expect 2 and 1; they are pooled.
  const std::vector<std::int64_t> c2{50, 44, 4, 2};
  const std::vector<double> p2{0.5, 0.44, 0.04, 0.02};
  const auto pooled = chi_square_gof(c2, p2);
  CHECK(pooled.dof == 2);
  CHECK(pooled.statistic == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(chi_square_gof(counts, p2), ValidationError);
}

TEST_CASE("fast path matches the exact kernel") {
  for (Mode mode : {Mode::standard, Mode::restricted}) {
    const auto p = make_params(8, 3, 0.9, mode);
    const MagKernel K = build_kernel(p);
    const int m0 = 8;
    const std::int64_t t = 2;
    const auto exact = evolve(Distribution::point_mass(9, m0), K, t);
    std::vector<std::int64_t> counts(9, 0);
    const RngStream base(21, mode == Mode::standard ? 1 : 2);
    for (int i = 0; i < 50000; ++i) {
      RngStream r = base.substream(static_cast<std::uint64_t>(i));
      ++counts[static_cast<std::size_t>(sample_mag_chain(p, m0, t, r))];
    }
    const auto res = chi_square_gof(counts, exact.weights);
    CHECK(res.p_value > 0.001);
    if (mode == Mode::restricted) {
      for (int m = 0; m < 4; ++m) CHECK(counts[static_cast<std::size_t>(m)] == 0);
    }
  }
}

TEST_CASE("tv lower bound") {
  const auto p = make_params(200, 2, 0.5);
  const RngStream rng(4, 4);
  const auto at0 = mc_tv_lower_bound(p, 200, 0, 2000, rng);
  CHECK(at0.value >= 0.99);

  const auto mix = build_mag_kernel(p);
  const std::int64_t times[] = {0, 200, 2000, 20000};
  const auto exact = exact_d_profile(mix, 200, times);
  const auto grid = mc_tv_lower_bound_grid(p, 200, times, 3000, rng);
  REQUIRE(grid.size() == 4);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(grid[i].value <= exact[i].d + 3.0 * grid[i].std_error + 1e-12);
  }
  CHECK(grid[3].value <= 0.05);

  const auto single = mc_tv_lower_bound(p, 200, 2000, 3000, rng);
  CHECK(single.value == grid[2].value);
}

TEST_CASE("coupling upper bound") {
  const auto p = make_params(100, 2, 0.5);
  const RngStream rng(8, 8);
  const std::int64_t times[] = {0, 50, 5000};
  const auto s = coupling_survival(p, times, 500, rng);
  CHECK(s[0].value == 1.0);
  CHECK(s[2].value == 0.0);
  const auto exact = exact_d_profile(build_mag_kernel(p), 100, times);
  CHECK(s[1].value + 3.0 * s[1].std_error >= exact[1].d);
}

TEST_CASE("restricted hitting times") {
  SUBCASE("a start already past the threshold gives 0") {
    // s*(2) + 1/sqrt(400) > 1, so all-plus is already below it.
    const int n = 400;
    const int k = 2;
    const auto p = make_params(n, k, 2.0, Mode::restricted);
    const auto t_max = static_cast<std::int64_t>(20.0 * n * std::log(n) / k);
    const auto s = hitting_time_summary(p, HittingKind::above, 1.0, 1000, t_max, RngStream(12, 1));
    CHECK(s.timeouts <= 50);
    CHECK(s.mean.value == 0.0);
  }
  SUBCASE("beta = 2 from all-plus hits within 20 n log n / k") {
    const int n = 400;
    const int k = 2;
    const auto p = make_params(n, k, 2.0, Mode::restricted);
    const auto t_max = static_cast<std::int64_t>(20.0 * n * std::log(n) / k);
    const auto s = hitting_time_summary(p, HittingKind::above, 0.1, 1000, t_max, RngStream(12, 2));
    CHECK(s.timeouts <= 50);
    CHECK(s.median > 0.0);
  }
  SUBCASE("median tau from all-plus grows with n") {
    std::vector<double> medians;
    for (int n : {100, 200, 400, 800}) {
      const auto p = make_params(n, 1, 1.5, Mode::restricted);
      const auto t_max = static_cast<std::int64_t>(50.0 * n * std::log(n));
      medians.push_back(
          hitting_time_summary(p, HittingKind::above, 0.5, 201, t_max, RngStream(12, 3)).median);
    }
    for (std::size_t i = 1; i < medians.size(); ++i) CHECK(medians[i] > medians[i - 1]);
  }
  SUBCASE("beta = 1.5 from zero scales like n log n over k") {
    auto mean_of = [](int n, int k) {
      const auto p = make_params(n, k, 1.5, Mode::restricted);
      const auto t_max = static_cast<std::int64_t>(50.0 * n * std::log(n) / k);
      const auto s = hitting_time_summary(p, HittingKind::below, 0.5, 400, t_max, RngStream(12, 4));
      CHECK(s.timeouts == 0);
      return s.mean.value;
    };
    std::vector<double> ratios;
    for (int n : {128, 256, 512}) ratios.push_back(mean_of(n, 1) / (n * std::log(n)));
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    CHECK(*hi / *lo <= 4.0);
    const double halving = mean_of(256, 1) / mean_of(256, 2);
    CHECK(halving >= 1.5);
    CHECK(halving <= 3.0);
  }
  SUBCASE("records") {
    const auto p = make_params(100, 1, 1.5, Mode::restricted);
    RngStream r(1, 1);
    const auto rec = hitting_time_tau_star_above(p, 0.5, r, 100000);
    CHECK(rec.hit);
    CHECK(rec.threshold == doctest::Approx(fixed_point_s_star(1.5) + 0.05));
    RngStream a(9, 9);
    RngStream b(9, 9);
    CHECK(hitting_time_tau_star_below(p, 0.5, a, 100000) ==
          hitting_time_tau_star_below(p, 0.5, b, 100000));
    CHECK_THROWS_AS(hitting_time_tau_star_above(make_params(100, 1, 1.5), 0.5, r, 10),
                    ValidationError);
    CHECK_THROWS_AS(hitting_time_tau_star_above(make_params(100, 1, 0.9, Mode::restricted), 0.5, r, 10),
                    ValidationError);
  }
}

TEST_CASE("contraction") {
  const auto p = make_params(200, 4, 0.5);
  const std::int64_t grid[] = {1, 10, 50};
  const auto rep = contraction_test(p, grid, 2000, RngStream(6, 6));
  CHECK(rep.passed());
  CHECK(rep.rho == doctest::Approx(1.0 - 4 * 0.5 / 200));
  CHECK(hamming_contraction_rate(p) < 1.0);
}
