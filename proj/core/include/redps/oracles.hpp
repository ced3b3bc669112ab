#pragma once

#include "redps/rate_model.hpp"
#include "redps/types.hpp"

namespace redps {

enum class OracleMethod {
  closed_form_tail,
  gamma_normal_quadrature,
  walk_recursion,
  crude_mc_reference,
};

struct OracleValue {
  double p_exact = 0.0;
  OracleMethod method = OracleMethod::closed_form_tail;
  double est_abs_error = 0.0;
};

/// P(X >= gamma or X <= -k_tail gamma) for X ~ N(0,1):
/// Phibar(gamma) + Phibar(k_tail gamma), evaluated through erfc.
OracleValue oracle_two_tail(double gamma, double k_tail);

/// P(|S_m| >= a m) for the increment-sum model, by 1-D adaptive quadrature
/// over the gamma density of the exponential part:
///   S_m = N(m mu_A, sd_A sqrt(m)) - G,  G ~ Gamma(m, rate_B).
/// Refined until est_abs_error / p <= 1e-6.
OracleValue oracle_iid_sum(const RateModel& increment_sum_model, double a);

/// P(max_{m<=T} S_m >= a) for a Gaussian walk with step deviation sigma.
/// Survival-density recursion on a grid, accumulating the first-crossing
/// mass each step (no 1-minus cancellation); refined until the relative
/// change between grid levels is below 1e-5.
OracleValue oracle_overshoot(int horizon, double a, double sigma);

}  // namespace redps
