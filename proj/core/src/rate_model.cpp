#include "redps/rate_model.hpp"

#include <cmath>
#include <sstream>

namespace redps {

namespace {
// Margin below which a tilt is rejected as outside D(mu) for the exponential
// component: theta <= -rate_b + kDomainGuard is an error, not infinity.
constexpr double kDomainGuard = 1e-9;
}  // namespace

RateModel RateModel::gaussian(Vector mean, Matrix cov) {
  if (mean.size() == 0 || cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw ConfigError("gaussian model: mean/covariance dimensions inconsistent");
  }
  RateModel m;
  m.kind_ = Kind::gaussian;
  m.dim_ = static_cast<int>(mean.size());
  m.mean_ = std::move(mean);
  m.cov_ = std::move(cov);
  Eigen::LLT<Matrix> llt(m.cov_);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("gaussian model: covariance is not positive definite");
  }
  m.chol_lower_ = llt.matrixL();
  return m;
}

RateModel RateModel::normal_minus_exp_sum(int summands, double mean_a, double sd_a,
                                          double rate_b) {
  if (summands < 1) throw ConfigError("increment model: summands must be >= 1");
  if (!(sd_a > 0.0)) throw ConfigError("increment model: sd_a must be > 0");
  if (!(rate_b > 0.0)) throw ConfigError("increment model: rate_b must be > 0");
  RateModel m;
  m.kind_ = Kind::normal_minus_exp_sum;
  m.dim_ = 1;
  m.summands_ = summands;
  m.mean_a_ = mean_a;
  m.sd_a_ = sd_a;
  m.rate_b_ = rate_b;
  return m;
}

void RateModel::check_increment_domain(double theta) const {
  if (theta <= -rate_b_ + kDomainGuard) {
    std::ostringstream os;
    os << "tilt " << theta << " outside cgf domain (requires theta > " << -rate_b_
       << ")";
    throw OutOfDomainError(os.str(), theta + rate_b_);
  }
}

double RateModel::increment_cgf(double theta) const {
  check_increment_domain(theta);
  return mean_a_ * theta + 0.5 * sd_a_ * sd_a_ * theta * theta -
         std::log1p(theta / rate_b_);
}

double RateModel::increment_cgf_prime(double theta) const {
  check_increment_domain(theta);
  return mean_a_ + sd_a_ * sd_a_ * theta - 1.0 / (rate_b_ + theta);
}

double RateModel::increment_cgf_second(double theta) const {
  const double d = rate_b_ + theta;
  return sd_a_ * sd_a_ + 1.0 / (d * d);
}

double RateModel::cgf(const Vector& x) const {
  if (x.size() != dim_) throw ConfigError("cgf: dimension mismatch");
  if (kind_ == Kind::gaussian) {
    return mean_.dot(x) + 0.5 * x.dot(cov_ * x);
  }
  return summands_ * increment_cgf(x[0]);
}

Vector RateModel::cgf_grad(const Vector& x) const {
  if (x.size() != dim_) throw ConfigError("cgf_grad: dimension mismatch");
  if (kind_ == Kind::gaussian) {
    return mean_ + cov_ * x;
  }
  Vector g(1);
  g[0] = summands_ * increment_cgf_prime(x[0]);
  return g;
}

// Safeguarded Newton on mu'(theta) = target. mu' is strictly increasing
// (strict convexity of mu), so a sign-bracket exists and bisection is a safe
// fallback whenever the Newton step leaves the bracket.
double RateModel::solve_increment_tilt(double target_mean) const {
  double lo = -rate_b_ + kDomainGuard;
  double hi = 1.0;
  while (increment_cgf_prime(hi) < target_mean) {
    hi = 2.0 * hi + 1.0;
    if (hi > 1e12) throw NumericalError("tilt solve: no upper bracket", hi);
  }
  // Walk toward the domain boundary until below target; mu' -> -inf there.
  double lo_probe = std::min(0.0, hi - 1.0);
  while (increment_cgf_prime(lo_probe) > target_mean) {
    lo_probe = lo + 0.5 * (lo_probe - lo);
    if (lo_probe - lo < 1e-300) {
      throw NumericalError("tilt solve: no lower bracket", lo_probe);
    }
  }
  lo = lo_probe;

  double theta = 0.5 * (lo + hi);
  double resid = 0.0;
  const double tol = kNewtonTol * (1.0 + std::abs(target_mean));
  for (int it = 0; it < kNewtonMaxIter; ++it) {
    resid = increment_cgf_prime(theta) - target_mean;
    if (std::abs(resid) <= tol) return theta;
    if (resid > 0.0) {
      hi = theta;
    } else {
      lo = theta;
    }
    double step = resid / increment_cgf_second(theta);
    double next = theta - step;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    theta = next;
  }
  std::ostringstream os;
  os << "tilt solve did not converge: last theta=" << theta << " residual=" << resid;
  throw NumericalError(os.str(), resid);
}

Vector RateModel::tilt_param(const Vector& y) const {
  if (y.size() != dim_) throw ConfigError("tilt_param: dimension mismatch");
  if (kind_ == Kind::gaussian) {
    // s_y = cov^{-1} (y - mean) through the Cholesky factor.
    Vector rhs = y - mean_;
    chol_lower_.triangularView<Eigen::Lower>().solveInPlace(rhs);
    chol_lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(rhs);
    return rhs;
  }
  Vector s(1);
  s[0] = solve_increment_tilt(y[0] / summands_);
  return s;
}

double RateModel::rate(const Vector& y) const {
  if (y.size() != dim_) throw ConfigError("rate: dimension mismatch");
  if (kind_ == Kind::gaussian) {
    Vector r = y - mean_;
    chol_lower_.triangularView<Eigen::Lower>().solveInPlace(r);
    return 0.5 * r.squaredNorm();
  }
  const Vector s = tilt_param(y);
  return s[0] * y[0] - cgf(s);
}

Vector RateModel::sample_tilted(const Vector& s, Philox& rng) const {
  if (s.size() != dim_) throw ConfigError("sample_tilted: dimension mismatch");
  if (kind_ == Kind::gaussian) {
    Vector z(dim_);
    for (int i = 0; i < dim_; ++i) z[i] = rng.normal();
    return mean_ + cov_ * s + chol_lower_ * z;
  }
  check_increment_domain(s[0]);
  const double theta = s[0];
  const double tilted_mean_a = mean_a_ + sd_a_ * sd_a_ * theta;
  const double tilted_rate_b = rate_b_ + theta;
  double sum = 0.0;
  for (int i = 0; i < summands_; ++i) {
    const double part_a = tilted_mean_a + sd_a_ * rng.normal();
    const double part_b = rng.exponential(tilted_rate_b);
    sum += part_a - part_b;
  }
  Vector out(1);
  out[0] = sum;
  return out;
}

double RateModel::log_lr_single(const Vector& s, const Vector& x) const {
  if (s.size() != dim_ || x.size() != dim_) {
    throw ConfigError("log_lr_single: dimension mismatch");
  }
  return -(s.dot(x) - cgf(s));
}

const Vector& RateModel::mean() const {
  if (kind_ != Kind::gaussian) throw ConfigError("mean(): gaussian models only");
  return mean_;
}

const Matrix& RateModel::cov() const {
  if (kind_ != Kind::gaussian) throw ConfigError("cov(): gaussian models only");
  return cov_;
}

const Matrix& RateModel::chol_lower() const {
  if (kind_ != Kind::gaussian) throw ConfigError("chol_lower(): gaussian models only");
  return chol_lower_;
}

int RateModel::summands() const {
  if (kind_ != Kind::normal_minus_exp_sum) {
    throw ConfigError("summands(): increment models only");
  }
  return summands_;
}

double RateModel::increment_mean_a() const {
  if (kind_ != Kind::normal_minus_exp_sum) {
    throw ConfigError("increment_mean_a(): increment models only");
  }
  return mean_a_;
}

double RateModel::increment_sd_a() const {
  if (kind_ != Kind::normal_minus_exp_sum) {
    throw ConfigError("increment_sd_a(): increment models only");
  }
  return sd_a_;
}

double RateModel::increment_rate_b() const {
  if (kind_ != Kind::normal_minus_exp_sum) {
    throw ConfigError("increment_rate_b(): increment models only");
  }
  return rate_b_;
}

}  // namespace redps
