#pragma once

#include <span>

namespace redps {

/// Standard normal CDF Phi(x).
double normal_cdf(double x);

/// Standard normal tail Phibar(x) = 1 - Phi(x), accurate in the far tail
/// (computed through erfc, relative error ~1e-15 down to ~1e-300).
double normal_tail(double x);

/// Standard normal density phi(x).
double normal_pdf(double x);

/// Inverse standard normal CDF (Wichura's PPND16 rational approximation,
/// relative error below 1e-15 across (0,1)).
double inverse_normal_cdf(double p);

/// log(sum_i exp(v_i)), stable against overflow. Empty input -> -inf.
double log_sum_exp(std::span<const double> values);

}  // namespace redps
