#pragma once

#include "redps/sampling.hpp"
#include "redps/types.hpp"

#include <cstdint>
#include <optional>
#include <span>

namespace redps {

enum class CiMethod { empirical_bernstein, clt };

/// Confidence-interval request: alpha is the level complement, bound_M the
/// per-sample upper bound k e^{-I(a_1)} required by the Bernstein method.
struct CiSpec {
  double alpha = 0.05;
  CiMethod method = CiMethod::clt;
  double bound_m = 0.0;

  void validate() const;
};

/// Empirical-Bernstein half-width for outputs in [0, bound_m]:
/// sqrt(2 v_n log(4/alpha) / n) + 7 log(4/alpha) bound_m / (3 (n - 1)).
double eb_halfwidth(double v_n, std::uint64_t n, double alpha, double bound_m);

/// Normal-approximation half-width z_{1-alpha/2} sqrt(v_n / n).
double clt_halfwidth(double v_n, std::uint64_t n, double alpha);

double halfwidth(const CiSpec& spec, double v_n, std::uint64_t n);

/// sqrt(v_n)/p_hat; absent (not an error) when p_hat is zero.
std::optional<double> relative_error(const EstimationReport& report);

/// log(second_moment)/log(p); approaches 2 from below for asymptotically
/// efficient schemes.
double asym_eff_ratio(double second_moment, double p);

/// Exact second moment of the single-tilt N(gamma,1) estimator of
/// P(X >= gamma or X <= -k_tail gamma), X ~ N(0,1):
///   e^{gamma^2} (Phibar(2 gamma) + Phibar((k_tail - 1) gamma)).
/// For k_tail = 2 this is the classic two-dominating-point blow-up value.
double second_moment_exact_two_tail(double gamma, double k_tail);

struct DiscrepancyEstimate {
  double epsilon = 0.0;
  double delta_hat = 0.0;
  std::uint64_t replications = 0;
  double true_p = 0.0;
};

/// Empirical minimal relative discrepancy: the (1-epsilon) quantile of
/// |p_hat_j - p|/p across replications, higher-order-statistic convention.
DiscrepancyEstimate delta_empirical(std::span<const double> p_hats, double true_p,
                                    double epsilon);

struct DeltaBound {
  double total = 0.0;
  double variance_term = 0.0;  // sqrt(Var(Z1) / (n p1^2 (eps - n p2_tilde)))
  double tail_term = 0.0;      // p2 / p
  bool vacuous = false;        // eps <= n p2_tilde: no bound available
};

/// The discrepancy bound delta_eps <= sqrt(Var(Z1)/(n p1^2 (eps - n p2~)))
/// + p2/p. In the weak-efficiency reading the tail term plays the role of
/// the limit gap 1 - c; both terms are exposed separately for that purpose.
DeltaBound theorem1_delta_bound(double var_z1, std::uint64_t n, double p1, double p2,
                                double p, double p_tilde_2, double epsilon);

/// Variance bound (1/min alpha)^2 e^{-2 rate_1} for the truncated mixture.
double variance_upper_bound(double min_alpha, double rate_1);

}  // namespace redps
