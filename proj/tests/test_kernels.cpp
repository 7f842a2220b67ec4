#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "errors.hpp"
#include "kernels.hpp"

using namespace scanmix;

namespace {

// Brute-force enumeration references, see tests/oracles/generate.py.
constexpr double kLumped_5_2_07[6][6] = {
    {0.56849898453233222, 0.34206423827061157, 0.089436777197056211, 0, 0, 0},
    {0.20967540369198057, 0.38904699139357826, 0.29221336699891108, 0.1090642379155301, 0, 0},
    {0.047987803392757063, 0.25578495291196292, 0.34169512473751497, 0.2590642379155301,
     0.095467881042234951, 0},
    {0, 0.095467881042234951, 0.2590642379155301, 0.34169512473751497, 0.25578495291196292,
     0.047987803392757063},
    {0, 0, 0.1090642379155301, 0.29221336699891108, 0.38904699139357826, 0.20967540369198057},
    {0, 0, 0, 0.089436777197056211, 0.34206423827061157, 0.56849898453233222},
};

constexpr double kLumped_6_3_13_row3[7] = {0.02138702706184188, 0.14463839008209938,
                                           0.21785403679711969, 0.2322410921178781,
                                           0.21785403679711969, 0.14463839008209938,
                                           0.02138702706184188};
constexpr double kLumped_6_3_13_row0[7] = {0.72225572501847024, 0.21868296528864656,
                                           0.050403023535386698, 8.658286157496507e-3, 0, 0, 0};

constexpr double kRestricted_5_2_15[3][3] = {
    {0.49761153968004879, 0.43192800982665156, 0.070460450493299645},
    {0.2601884330450884, 0.43077620507746723, 0.30903536187744437},
    {0.019252417927901177, 0.14017527761787344, 0.84057230445422539},
};

constexpr double kStationary_7_06[8] = {
    0.042523470412412962, 0.10642014471138006, 0.16082115224965634, 0.19023523262655064,
    0.19023523262655064,  0.16082115224965634, 0.10642014471138006, 0.042523470412412962};

}  // namespace

TEST_CASE("lumped kernel matches brute-force enumeration") {
  const MagKernel K = build_mag_kernel(make_params(5, 2, 0.7));
  for (int m = 0; m <= 5; ++m) {
    for (int m2 = 0; m2 <= 5; ++m2) {
      CHECK(K.entry(m, m2) == doctest::Approx(kLumped_5_2_07[m][m2]).epsilon(1e-13));
    }
  }
  const MagKernel K3 = build_mag_kernel(make_params(6, 3, 1.3));
  for (int m2 = 0; m2 <= 6; ++m2) {
    CHECK(K3.entry(3, m2) == doctest::Approx(kLumped_6_3_13_row3[m2]).epsilon(1e-13));
    CHECK(K3.entry(0, m2) == doctest::Approx(kLumped_6_3_13_row0[m2]).epsilon(1e-13));
  }
}

TEST_CASE("lumped kernel hand example and row sums") {
  const MagKernel K = build_mag_kernel(make_params(2, 1, 0.0));
  CHECK(K.entry(2, 1) == 0.5);
  CHECK(K.entry(2, 2) == 0.5);
  CHECK(K.entry(2, 0) == 0.0);
  for (int n : {7, 40, 301}) {
    for (int k : {1, 3, 7}) {
      for (double beta : {0.0, 0.8, 1.0, 2.5}) {
        const MagKernel M = build_mag_kernel(make_params(n, k, beta));
        CHECK(M.width() == std::min(2 * k + 1, n + 1));
        for (int m = 0; m <= n; ++m) {
          CHECK(M.row_sum(m) == doctest::Approx(1.0).epsilon(1e-13));
          for (double x : M.row_band(m)) CHECK(x >= 0.0);
        }
      }
    }
  }
}

TEST_CASE("lumped kernel equals the projected full kernel") {
  const auto p = make_params(6, 2, 0.8);
  double defect = 1.0;
  const auto proj = project_to_plus_counts(full_config_kernel(p), &defect);
  const MagKernel K = build_mag_kernel(p);
  double worst = 0.0;
  for (int m = 0; m <= 6; ++m) {
    for (int m2 = 0; m2 <= 6; ++m2) {
      worst = std::max(worst, std::abs(proj[static_cast<std::size_t>(m * 7 + m2)] - K.entry(m, m2)));
    }
  }
  CHECK(worst < 1e-12);
  CHECK(defect < 1e-12);
}

TEST_CASE("restricted kernel") {
  const MagKernel R = build_restricted_mag_kernel(make_params(5, 2, 1.5, Mode::restricted));
  for (int m = 3; m <= 5; ++m) {
    for (int m2 = 0; m2 <= 2; ++m2) CHECK(R.entry(m, m2) == 0.0);
    for (int m2 = 3; m2 <= 5; ++m2) {
      CHECK(R.entry(m, m2) == doctest::Approx(kRestricted_5_2_15[m - 3][m2 - 3]).epsilon(1e-13));
    }
  }
  // beta = 0, n = 4, k = 1: fold the unfolded rows by hand.
  const MagKernel S = build_mag_kernel(make_params(4, 1, 0.0));
  const MagKernel F = build_restricted_mag_kernel(make_params(4, 1, 0.0, Mode::restricted));
  for (int m = 2; m <= 4; ++m) {
    CHECK(F.row_sum(m) == doctest::Approx(1.0));
    CHECK(F.entry(m, 2) == doctest::Approx(S.entry(m, 2)));
    CHECK(F.entry(m, 3) == doctest::Approx(S.entry(m, 3) + S.entry(m, 1)));
    CHECK(F.entry(m, 4) == doctest::Approx(S.entry(m, 4) + S.entry(m, 0)));
  }
  CHECK_THROWS_AS(build_mag_kernel(make_params(5, 2, 1.5, Mode::restricted)), ValidationError);
  CHECK_THROWS_AS(build_restricted_mag_kernel(make_params(5, 2, 1.5)), ValidationError);
}

TEST_CASE("stationary law") {
  const auto mu2 = stationary_magnetization(make_params(2, 1, 1.0));
  const double e = std::exp(1.0);
  CHECK(mu2.weights[0] == doctest::Approx(e / (2 * e + 2)).epsilon(1e-15));
  CHECK(mu2.weights[1] == doctest::Approx(2 / (2 * e + 2)).epsilon(1e-15));
  CHECK(mu2.weights[2] == doctest::Approx(e / (2 * e + 2)).epsilon(1e-15));

  const auto mu7 = stationary_magnetization(make_params(7, 1, 0.6));
  for (int m = 0; m <= 7; ++m) CHECK(mu7.weights[m] == doctest::Approx(kStationary_7_06[m]).epsilon(1e-14));

  const auto mu0 = stationary_magnetization(make_params(10, 1, 0.0));
  for (int m = 0; m <= 10; ++m) {
    CHECK(mu0.weights[m] == doctest::Approx(std::tgamma(11.0) / std::tgamma(m + 1.0) /
                                            std::tgamma(11.0 - m) / 1024.0).epsilon(1e-13));
  }

  for (double beta : {0.5, 1.0, 1.5}) {
    const auto p = make_params(100, 3, beta);
    const auto mu = stationary_magnetization(p);
    CHECK(tv_distance(build_mag_kernel(p).step(mu), mu) < 1e-10);
    const auto q = make_params(100, 3, beta, Mode::restricted);
    const auto mu_plus = stationary_magnetization(q);
    for (int m = 0; m < 50; ++m) CHECK(mu_plus.weights[m] == 0.0);
    CHECK(tv_distance(build_restricted_mag_kernel(q).step(mu_plus), mu_plus) < 1e-10);
  }

  // Large n stays finite in log space.
  const auto big = stationary_magnetization(make_params(2000, 1, 3.0));
  CHECK(big.total() == doctest::Approx(1.0));
}

TEST_CASE("full kernel and Gibbs measure") {
  for (double beta : {0.0, 0.4, 1.0, 1.7, 3.0}) {
    const auto p = make_params(4, 1, beta);
    CHECK(detailed_balance_residual(single_site_kernel(p), gibbs_full(p)) < 1e-12);
  }
  const auto p = make_params(6, 2, 0.9);
  const auto pi = gibbs_full(p);
  CHECK(tv_distance(full_config_kernel(p).step(pi), pi) < 1e-12);
  CHECK_THROWS_AS(full_config_kernel(make_params(11, 2, 0.5)), BudgetError);

  auto faulty = make_params(4, 1, 1.0);
  faulty.self_in_field = true;
  CHECK(detailed_balance_residual(single_site_kernel(faulty), gibbs_full(faulty)) > 1e-6);
}

TEST_CASE("evolve and tv") {
  const auto p = make_params(30, 2, 0.7);
  const MagKernel K = build_mag_kernel(p);
  const auto start = Distribution::point_mass(31, 30);
  CHECK(tv_distance(evolve(start, K, 0), start) == 0.0);
  const auto mu = stationary_magnetization(p);
  CHECK(tv_distance(evolve(mu, K, 1000), mu) < 1e-10);

  const MagKernel F = build_mag_kernel(make_params(12, 12, 0.0));
  const auto one = evolve(Distribution::point_mass(13, 12), F, 1);
  CHECK(tv_distance(one, stationary_magnetization(make_params(12, 12, 0.0))) < 1e-14);

  CHECK(tv_distance(Distribution{{0.5, 0.5}}, Distribution{{0.75, 0.25}}) == doctest::Approx(0.25));
  CHECK(tv_distance(Distribution{{1.0, 0.0}}, Distribution{{0.0, 1.0}}) == 1.0);
  CHECK(tv_distance(start, start) == 0.0);
  CHECK_THROWS_AS(tv_distance(Distribution{{1.0}}, Distribution{{0.5, 0.5}}), ValidationError);
}

TEST_CASE("profiles and mixing times") {
  const std::vector<ProfilePoint> prof{{0, 1.0}, {1, 0.5}, {2, 0.2}};
  CHECK(mixing_time_from_profile(prof, 0.25) == 2);
  CHECK(mixing_time_from_profile(prof, 0.6) == 1);
  CHECK_THROWS_AS(mixing_time_from_profile(prof, 0.1), ValidationError);

  const MagKernel F = build_mag_kernel(make_params(10, 10, 0.0));
  CHECK(exact_mixing_time(F, 0.25, 10) == 1);
  const std::int64_t t1[] = {1};
  CHECK(exact_d_profile(F, 10, t1).front().d < 1e-14);

  const MagKernel K = build_mag_kernel(make_params(50, 2, 0.5));
  const std::int64_t times[] = {0, 100000};
  const auto d = exact_d_profile(K, 50, times);
  CHECK(d[0].d >= 0.99);
  CHECK(d[1].d < 1e-6);

  // Independent references: birth-death chain (k = 1) and brute-force lumped kernels.
  CHECK(exact_mixing_time(build_mag_kernel(make_params(20, 1, 0.5)), 0.25, 10000) == 62);
  CHECK(exact_mixing_time(build_mag_kernel(make_params(20, 1, 1.0)), 0.25, 10000) == 140);
  CHECK(exact_mixing_time(build_mag_kernel(make_params(12, 3, 0.5)), 0.25, 10000) == 10);
  CHECK(exact_mixing_time(build_kernel(make_params(12, 2, 1.5, Mode::restricted)), 0.25, 10000) == 17);
  CHECK_THROWS_AS(exact_mixing_time(build_mag_kernel(make_params(20, 1, 1.0)), 0.25, 50),
                  BudgetError);

  const auto series = exact_d_series(K, extremal_starts(K), 400);
  for (std::size_t i = 1; i < series.size(); ++i) CHECK(series[i].d <= series[i - 1].d + 1e-15);
}

TEST_CASE("extremal starts") {
  CHECK(extremal_starts(build_mag_kernel(make_params(9, 1, 0.5))) == std::vector<int>{9});
  CHECK(extremal_starts(build_kernel(make_params(9, 1, 1.5, Mode::restricted))) ==
        std::vector<int>{5, 9});
}

TEST_CASE("moments") {
  const MagKernel K = build_mag_kernel(make_params(100, 3, 1.2));
  CHECK(std::abs(one_step_moments(K, 50).mean) < 1e-15);
  for (int k = 1; k <= 5; ++k) {
    for (double beta : {0.5, 1.0, 1.5}) {
      const MagKernel M = build_mag_kernel(make_params(100, k, beta));
      const double kn = k / 100.0;
      for (int m = 0; m <= 100; ++m) {
        const double s = (2.0 * m - 100) / 100;
        const double dev = std::abs(one_step_moments(M, m).mean - (1 - kn) * s - kn * std::tanh(beta * s));
        CHECK(dev <= 2 * kn * std::tanh(beta * 2 * kn) + 1e-15);
      }
    }
  }
  for (int n : {50, 100, 200}) {
    for (int k : {1, 2, 4}) {
      const double v = one_step_moments(build_mag_kernel(make_params(n, k, 0.5)), n / 2).variance;
      CHECK(v * n * n / k >= 0.5);
      CHECK(v * n * n / k <= 8.0);
    }
  }
}

TEST_CASE("kernel export round trip") {
  const MagKernel K = build_kernel(make_params(17, 3, 1.25, Mode::restricted));
  std::stringstream ss;
  export_kernel(K, ss);
  const std::string text = ss.str();
  CHECK(text.rfind("# scanmix magnetization kernel\n", 0) == 0);
  const MagKernel L = import_kernel(ss);
  CHECK(L.n() == 17);
  CHECK(L.k() == 3);
  CHECK(L.beta() == 1.25);
  CHECK(L.mode() == Mode::restricted);
  for (int m = 0; m <= 17; ++m) {
    for (int m2 = 0; m2 <= 17; ++m2) CHECK(L.entry(m, m2) == K.entry(m, m2));
  }
  std::stringstream again;
  export_kernel(L, again);
  CHECK(again.str() == text);

  std::stringstream bad("# scanmix magnetization kernel\nn 3\n");
  CHECK_THROWS_AS(import_kernel(bad), ValidationError);
}

TEST_CASE("budget") {
  CHECK_THROWS_AS(build_mag_kernel(make_params(5000, 1, 0.5)), BudgetError);
  CHECK_THROWS_AS(build_mag_kernel(make_params(2000, 20, 0.5)), BudgetError);
}
