#include "redps/oracles.hpp"

#include "redps/special.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <sstream>
#include <vector>

namespace redps {

OracleValue oracle_two_tail(double gamma, double k_tail) {
  if (!(gamma > 0.0)) throw ConfigError("oracle_two_tail: gamma must be > 0");
  if (!(k_tail >= 1.0)) throw ConfigError("oracle_two_tail: k_tail must be >= 1");
  OracleValue v;
  v.method = OracleMethod::closed_form_tail;
  v.p_exact = normal_tail(gamma) + normal_tail(k_tail * gamma);
  v.est_abs_error = 1e-14 * v.p_exact;
  return v;
}

namespace {

double log_gamma_pdf(double g, double shape, double rate) {
  return (shape - 1.0) * std::log(g) - rate * g + shape * std::log(rate) -
         std::lgamma(shape);
}

}  // namespace

OracleValue oracle_iid_sum(const RateModel& model, double a) {
  if (model.kind() != RateModel::Kind::normal_minus_exp_sum) {
    throw ConfigError("oracle_iid_sum: requires the increment-sum model");
  }
  if (!(a > 0.0)) throw ConfigError("oracle_iid_sum: a must be > 0");
  const auto m = static_cast<double>(model.summands());
  const double mu_a = model.increment_mean_a();
  const double sd_a = model.increment_sd_a();
  const double rate_b = model.increment_rate_b();

  const double sd = sd_a * std::sqrt(m);
  const auto right = [&](double g) {
    return std::exp(log_gamma_pdf(g, m, rate_b)) *
           normal_tail((a * m - mu_a * m + g) / sd);
  };
  const auto left = [&](double g) {
    return std::exp(log_gamma_pdf(g, m, rate_b)) *
           normal_cdf((-a * m - mu_a * m + g) / sd);
  };

  using quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double upper =
      m / rate_b + 60.0 * std::sqrt(m) / rate_b + (a + std::abs(mu_a)) * m + 100.0 * sd;
  double err_r = 0.0, err_l = 0.0;
  const double p_right = quad::integrate(right, 0.0, upper, 15, 1e-10, &err_r);
  const double p_left = quad::integrate(left, 0.0, upper, 15, 1e-10, &err_l);

  OracleValue v;
  v.method = OracleMethod::gamma_normal_quadrature;
  v.p_exact = p_right + p_left;
  v.est_abs_error = err_r + err_l;
  if (!(v.p_exact > 0.0) || v.est_abs_error / v.p_exact > 1e-6) {
    std::ostringstream os;
    os << "oracle_iid_sum: quadrature did not reach relative error 1e-6 (achieved "
       << v.est_abs_error / v.p_exact << ")";
    throw NumericalError(os.str(), v.est_abs_error);
  }
  return v;
}

namespace {

// One grid level of the first-crossing recursion. Grid spans [lo, a]
// inclusive with spacing h; the Gaussian step kernel is truncated at
// kernel_halfwidth * sigma.
double overshoot_on_grid(int horizon, double a, double sigma, double h, double lo) {
  // Exactly uniform spacing ending at a: snap the (arbitrary) lower edge so
  // the trapezoid weights stay consistent on every cell.
  const auto n = static_cast<std::size_t>(std::ceil((a - lo) / h)) + 1;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = a - h * static_cast<double>(n - 1 - i);
  }

  constexpr double kKernelHalfwidth = 10.0;
  const auto win = static_cast<std::ptrdiff_t>(std::ceil(kKernelHalfwidth * sigma / h));
  std::vector<double> kernel(2 * win + 1);
  for (std::ptrdiff_t j = -win; j <= win; ++j) {
    kernel[static_cast<std::size_t>(j + win)] =
        normal_pdf(static_cast<double>(j) * h / sigma) / sigma;
  }

  // Trapezoid weights: half at both ends of the survival interval.
  const auto integrate = [&](const std::vector<double>& f) {
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < n; ++i) s += f[i];
    return s * h;
  };

  std::vector<double> q(n), next(n), crossing(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = normal_pdf(grid[i] / sigma) / sigma;
  double p = normal_tail(a / sigma);

  for (int step = 2; step <= horizon; ++step) {
    for (std::size_t i = 0; i < n; ++i) {
      crossing[i] = q[i] * normal_tail((a - grid[i]) / sigma);
    }
    p += integrate(crossing);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<std::ptrdiff_t>(i);
      double acc = 0.0;
      const std::ptrdiff_t j_lo = std::max<std::ptrdiff_t>(0, ii - win);
      const std::ptrdiff_t j_hi =
          std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1, ii + win);
      for (std::ptrdiff_t j = j_lo; j <= j_hi; ++j) {
        double wq = q[static_cast<std::size_t>(j)];
        if (j == 0 || j + 1 == static_cast<std::ptrdiff_t>(n)) wq *= 0.5;
        acc += wq * kernel[static_cast<std::size_t>(ii - j + win)];
      }
      next[i] = acc * h;
    }
    std::swap(q, next);
  }
  return p;
}

}  // namespace

OracleValue oracle_overshoot(int horizon, double a, double sigma) {
  if (horizon < 1 || horizon > 50) {
    throw ConfigError("oracle_overshoot: horizon must be in [1, 50]");
  }
  if (!(a > 0.0) || !(sigma > 0.0)) {
    throw ConfigError("oracle_overshoot: a and sigma must be > 0");
  }
  OracleValue v;
  v.method = OracleMethod::walk_recursion;
  if (horizon == 1) {
    v.p_exact = normal_tail(a / sigma);
    v.est_abs_error = 1e-14 * v.p_exact;
    return v;
  }
  // Fixed domain, refined spacing: trapezoid error is O(h^2), so Richardson
  // extrapolation across consecutive levels certifies the target accuracy.
  const double lo = -(a + 12.0 * sigma * std::sqrt(static_cast<double>(horizon)));
  double h = sigma / 100.0;
  double prev = overshoot_on_grid(horizon, a, sigma, h, lo);
  for (int level = 0; level < 4; ++level) {
    h *= 0.5;
    const double cur = overshoot_on_grid(horizon, a, sigma, h, lo);
    const double change = std::abs(cur - prev);
    if (change <= 1.5e-5 * std::abs(cur)) {
      v.p_exact = (4.0 * cur - prev) / 3.0;
      v.est_abs_error = std::max(change / 3.0, 1e-12 * std::abs(cur));
      return v;
    }
    prev = cur;
  }
  throw NumericalError("oracle_overshoot: grid refinement did not converge", prev);
}

}  // namespace redps
