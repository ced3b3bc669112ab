#pragma once

#include "redps/rng.hpp"
#include "redps/types.hpp"

#include <memory>

namespace redps {

/// Input law for the rare-event problem: exposes the cumulant generating
/// function mu(x) = log E exp(x^T X), its Legendre transform I(y) (the rate
/// function), the tilt solve s_y with grad mu(s_y) = y, and sampling from the
/// exponentially tilted law with density proportional to exp(s^T x) f(x).
///
/// Two kinds are built in:
///  - gaussian(mean, cov): X ~ N(mean, cov), all maps in closed form;
///  - normal_minus_exp_sum(m, mu_a, sd_a, rate_b): the 1-D law of
///    S_m = sum of m i.i.d. increments A - B with A ~ N(mu_a, sd_a^2) and
///    B ~ Exp(rate_b). Tilt solves use safeguarded Newton on the strictly
///    increasing derivative of the increment cgf.
class RateModel {
 public:
  enum class Kind { gaussian, normal_minus_exp_sum };

  static RateModel gaussian(Vector mean, Matrix cov);
  static RateModel normal_minus_exp_sum(int summands, double mean_a, double sd_a,
                                        double rate_b);

  Kind kind() const { return kind_; }
  int dimension() const { return dim_; }

  double cgf(const Vector& x) const;
  Vector cgf_grad(const Vector& x) const;
  double rate(const Vector& y) const;
  Vector tilt_param(const Vector& y) const;
  Vector sample_tilted(const Vector& s, Philox& rng) const;

  /// log of the single-tilt likelihood ratio f(x)/f_s(x) = -(s^T x - mu(s)).
  double log_lr_single(const Vector& s, const Vector& x) const;

  // Gaussian accessors (throw ConfigError for other kinds).
  const Vector& mean() const;
  const Matrix& cov() const;
  /// Lower-triangular Cholesky factor L with cov = L L^T.
  const Matrix& chol_lower() const;

  // Increment-model accessors.
  int summands() const;
  double increment_mean_a() const;
  double increment_sd_a() const;
  double increment_rate_b() const;

  static constexpr double kNewtonTol = 1e-12;
  static constexpr int kNewtonMaxIter = 100;

 private:
  RateModel() = default;

  double increment_cgf(double theta) const;
  double increment_cgf_prime(double theta) const;
  double increment_cgf_second(double theta) const;
  void check_increment_domain(double theta) const;
  double solve_increment_tilt(double target_mean) const;

  Kind kind_ = Kind::gaussian;
  int dim_ = 0;

  // gaussian
  Vector mean_;
  Matrix cov_;
  Matrix chol_lower_;

  // normal_minus_exp_sum
  int summands_ = 0;
  double mean_a_ = 0.0;
  double sd_a_ = 1.0;
  double rate_b_ = 1.0;
};

}  // namespace redps
