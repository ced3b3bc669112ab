#include "redps/inference.hpp"

#include "redps/special.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace redps;

TEST_CASE("empirical-bernstein half-width arithmetic") {
  // Zero-variance case: only the additive term remains.
  CHECK(eb_halfwidth(0.0, 101, 0.05, 1.0) ==
        doctest::Approx(7.0 * std::log(80.0) / 300.0).epsilon(1e-15));
  // Doubling the bound doubles only the second term.
  const double base = eb_halfwidth(1.0, 101, 0.05, 1.0);
  const double doubled = eb_halfwidth(1.0, 101, 0.05, 2.0);
  CHECK(doubled - base ==
        doctest::Approx(7.0 * std::log(80.0) / 300.0).epsilon(1e-12));
  // Leading coefficient sqrt(2 log 80) ~ 2.96.
  const double lead = eb_halfwidth(1.0, 1000000, 0.05, 0.0) * 1000.0;
  CHECK(lead == doctest::Approx(std::sqrt(2.0 * std::log(80.0))).epsilon(1e-9));
  CHECK(lead == doctest::Approx(2.96).epsilon(1e-3));
  CHECK_THROWS_AS(eb_halfwidth(1.0, 100, 0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(eb_halfwidth(1.0, 100, 1.0, 1.0), ConfigError);
}

TEST_CASE("clt half-width arithmetic") {
  CHECK(clt_halfwidth(0.0, 100, 0.05) == 0.0);
  CHECK(clt_halfwidth(100.0, 100, 0.05) ==
        doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(clt_halfwidth(100.0, 100, 0.05) == doctest::Approx(1.96).epsilon(1e-3));
  CHECK_THROWS_AS(clt_halfwidth(1.0, 100, -0.1), ConfigError);
}

TEST_CASE("interval ordering: bernstein at least as wide as clt") {
  for (double v : {0.0, 1e-8, 1e-3, 0.5, 3.0}) {
    for (std::uint64_t n : {10ull, 100ull, 100000ull}) {
      const double bound_m = std::sqrt(v) + 0.5;
      CHECK(eb_halfwidth(v, n, 0.05, bound_m) >= clt_halfwidth(v, n, 0.05));
    }
  }
}

TEST_CASE("relative error") {
  EstimationReport rep;
  rep.p_hat = 0.0;
  rep.v_n = 1.0;
  CHECK_FALSE(relative_error(rep).has_value());
  rep.p_hat = 0.02;
  rep.v_n = 0.0;  // all outputs equal
  CHECK(relative_error(rep).value() == 0.0);
  rep.v_n = 4e-4;
  CHECK(relative_error(rep).value() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("asymptotic efficiency ratio") {
  CHECK(asym_eff_ratio(1e-8, 1e-4) == doctest::Approx(2.0).epsilon(1e-12));
  // Lemma-1 family: ratio strictly below 2 and decreasing in gamma.
  double prev = 2.0;
  for (double gamma : {1.5, 2.0, 2.5, 3.0}) {
    const double second = second_moment_exact_two_tail(gamma, 2.0);
    const double p = normal_tail(gamma) + normal_tail(2.0 * gamma);
    const double ratio = asym_eff_ratio(second, p);
    CHECK(ratio < 2.0);
    CHECK(ratio < prev);
    prev = ratio;
  }
  // k_tail = 3: approaches 2 from below as gamma grows.
  double last = -10.0;
  for (double gamma : {2.0, 3.0, 4.0}) {
    const double second = second_moment_exact_two_tail(gamma, 3.0);
    const double p = normal_tail(gamma) + normal_tail(3.0 * gamma);
    const double ratio = asym_eff_ratio(second, p);
    CHECK(ratio > last);
    CHECK(ratio < 2.0);
    last = ratio;
  }
  CHECK(last > 1.7);
  CHECK_THROWS_AS(asym_eff_ratio(0.0, 0.5), ConfigError);
  CHECK_THROWS_AS(asym_eff_ratio(1.0, 1.5), ConfigError);
}

TEST_CASE("second moment closed form against direct quadrature") {
  // Ztilde-second-moment of the single-tilt N(gamma,1) estimator:
  // integrate L(x)^2 under the IS density over both tails.
  using quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  for (double gamma : {1.5, 2.0, 2.5}) {
    for (double k_tail : {1.5, 2.0, 3.0}) {
      const auto integrand = [&](double x) {
        const double log_l = -gamma * x + 0.5 * gamma * gamma;
        return std::exp(2.0 * log_l) * normal_pdf(x - gamma);
      };
      double e1 = 0.0, e2 = 0.0;
      const double right = quad::integrate(integrand, gamma, gamma + 60.0, 15, 1e-12, &e1);
      const double left = quad::integrate(integrand, -k_tail * gamma - 80.0,
                                          -k_tail * gamma, 15, 1e-12, &e2);
      const double closed = second_moment_exact_two_tail(gamma, k_tail);
      CHECK(closed == doctest::Approx(right + left).epsilon(1e-8));
    }
  }
  // Lemma-1 identity at k_tail = 2: e^{gamma^2}(Phibar(gamma)+Phibar(2 gamma)).
  for (double gamma : {1.0, 2.0, 3.0}) {
    CHECK(second_moment_exact_two_tail(gamma, 2.0) ==
          doctest::Approx(std::exp(gamma * gamma) *
                          (normal_tail(gamma) + normal_tail(2.0 * gamma)))
              .epsilon(1e-13));
  }
}

TEST_CASE("blow-up trend matches the (3/2) gamma^2 + log gamma law") {
  const auto log_ratio = [](double gamma) {
    const double p = normal_tail(gamma) + normal_tail(2.0 * gamma);
    return std::log(second_moment_exact_two_tail(gamma, 2.0)) - 2.0 * std::log(p);
  };
  const double gammas[] = {1.5, 2.0, 2.5, 3.0};
  for (int i = 0; i + 1 < 4; ++i) {
    const double diff = log_ratio(gammas[i + 1]) - log_ratio(gammas[i]);
    const double predicted =
        1.5 * (gammas[i + 1] * gammas[i + 1] - gammas[i] * gammas[i]) +
        std::log(gammas[i + 1] / gammas[i]);
    CHECK(std::abs(diff / predicted - 1.0) < 0.05);
  }
}

TEST_CASE("delta_empirical order statistics") {
  std::vector<double> all_exact(40, 0.02);
  const DiscrepancyEstimate zero = delta_empirical(all_exact, 0.02, 0.05);
  CHECK(zero.delta_hat == 0.0);
  CHECK(zero.replications == 40);

  // 100 values with known discrepancies 0.01..1.00: the 0.95-quantile with
  // the higher convention is the 95th smallest.
  std::vector<double> ph;
  const double p = 1.0;
  for (int i = 1; i <= 100; ++i) ph.push_back(p * (1.0 + 0.01 * i));
  const DiscrepancyEstimate d = delta_empirical(ph, p, 0.05);
  CHECK(d.delta_hat == doctest::Approx(0.95).epsilon(1e-12));

  // Monotone non-increasing in epsilon.
  double prev = 1e300;
  for (double eps : {0.01, 0.05, 0.1}) {
    const double cur = delta_empirical(ph, p, eps).delta_hat;
    CHECK(cur <= prev + 1e-15);
    prev = cur;
  }

  CHECK_THROWS_AS(delta_empirical(std::vector<double>(5, 1.0), 1.0, 0.05), ConfigError);
  CHECK_THROWS_AS(delta_empirical(ph, 0.0, 0.05), ConfigError);
}

TEST_CASE("theorem-1 bound reduces to chebyshev when the tail vanishes") {
  const DeltaBound b = theorem1_delta_bound(2.5e-9, 1000, 3e-5, 0.0, 3e-5, 0.0, 0.05);
  CHECK_FALSE(b.vacuous);
  CHECK(b.tail_term == 0.0);
  CHECK(b.total == doctest::Approx(std::sqrt(2.5e-9 / (1000.0 * 9e-10 * 0.05)))
                       .epsilon(1e-12));
}

TEST_CASE("theorem-1 bound on the underestimation example") {
  const double gamma = 4.0;
  const double k_tail = 1.01;
  const double p1 = normal_tail(gamma);
  const double p2 = normal_tail(k_tail * gamma);
  const double p = p1 + p2;
  const double p_tilde_2 = normal_tail((k_tail + 1.0) * gamma);
  const std::uint64_t n = 1000;

  // n * p2_tilde = 1000 * Phibar(8.04) ~ 4.4e-13.
  CHECK(n * p_tilde_2 > 4.2e-13);
  CHECK(n * p_tilde_2 < 4.7e-13);
  // Additive term p2/p ~ 0.84/1.84.
  CHECK(p2 / p1 == doctest::Approx(0.84).epsilon(0.01));

  const double var_z1 = std::exp(gamma * gamma) * normal_tail(2.0 * gamma) - p1 * p1;
  const DeltaBound b = theorem1_delta_bound(var_z1, n, p1, p2, p, p_tilde_2, 0.05);
  CHECK_FALSE(b.vacuous);
  CHECK(b.tail_term == doctest::Approx(0.457).epsilon(0.01));
  CHECK(b.total > b.tail_term);

  // Vacuous regime is signaled, not computed.
  const DeltaBound v = theorem1_delta_bound(var_z1, n, p1, p2, p, 1e-4, 0.05);
  CHECK(v.vacuous);
}

TEST_CASE("variance upper bound") {
  CHECK(variance_upper_bound(1.0, 0.0) == 1.0);
  CHECK(variance_upper_bound(0.2, 4.0) ==
        doctest::Approx(25.0 * std::exp(-8.0)).epsilon(1e-13));
  CHECK_THROWS_AS(variance_upper_bound(0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(variance_upper_bound(0.5, -1.0), ConfigError);
}

TEST_CASE("ci spec validation") {
  CiSpec bad;
  bad.alpha = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CiSpec eb;
  eb.method = CiMethod::empirical_bernstein;
  eb.bound_m = 0.0;
  CHECK_THROWS_AS(eb.validate(), ConfigError);
  eb.bound_m = 0.5;
  CHECK_NOTHROW(eb.validate());
  CHECK(halfwidth(eb, 1e-4, 1000) ==
        doctest::Approx(eb_halfwidth(1e-4, 1000, 0.05, 0.5)).epsilon(1e-15));
}
