#include "redps/inference.hpp"

#include "redps/special.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace redps {

void CiSpec::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("CiSpec: alpha must be in (0,1)");
  if (method == CiMethod::empirical_bernstein && !(bound_m > 0.0)) {
    throw ConfigError("CiSpec: empirical_bernstein needs bound_M > 0");
  }
}

double eb_halfwidth(double v_n, std::uint64_t n, double alpha, double bound_m) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("eb_halfwidth: alpha in (0,1)");
  if (n < 2) throw ConfigError("eb_halfwidth: n must be >= 2");
  const double la = std::log(4.0 / alpha);
  return std::sqrt(2.0 * v_n * la / static_cast<double>(n)) +
         7.0 * la * bound_m / (3.0 * static_cast<double>(n - 1));
}

double clt_halfwidth(double v_n, std::uint64_t n, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("clt_halfwidth: alpha in (0,1)");
  if (n < 2) throw ConfigError("clt_halfwidth: n must be >= 2");
  return inverse_normal_cdf(1.0 - 0.5 * alpha) * std::sqrt(v_n / static_cast<double>(n));
}

double halfwidth(const CiSpec& spec, double v_n, std::uint64_t n) {
  spec.validate();
  return spec.method == CiMethod::clt
             ? clt_halfwidth(v_n, n, spec.alpha)
             : eb_halfwidth(v_n, n, spec.alpha, spec.bound_m);
}

std::optional<double> relative_error(const EstimationReport& report) {
  if (!(report.p_hat > 0.0)) return std::nullopt;
  return std::sqrt(report.v_n) / report.p_hat;
}

double asym_eff_ratio(double second_moment, double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("asym_eff_ratio: p must be in (0,1)");
  if (!(second_moment > 0.0)) {
    throw ConfigError("asym_eff_ratio: second moment must be positive");
  }
  return std::log(second_moment) / std::log(p);
}

double second_moment_exact_two_tail(double gamma, double k_tail) {
  if (!(gamma > 0.0)) throw ConfigError("second_moment_exact_two_tail: gamma > 0");
  if (!(k_tail > 1.0)) throw ConfigError("second_moment_exact_two_tail: k_tail > 1");
  return std::exp(gamma * gamma) *
         (normal_tail(2.0 * gamma) + normal_tail((k_tail - 1.0) * gamma));
}

DiscrepancyEstimate delta_empirical(std::span<const double> p_hats, double true_p,
                                    double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ConfigError("delta_empirical: epsilon must be in (0,1)");
  }
  if (!(true_p > 0.0)) throw ConfigError("delta_empirical: true_p must be positive");
  const std::size_t r = p_hats.size();
  const auto min_needed = static_cast<std::size_t>(std::ceil(1.0 / epsilon));
  if (r < min_needed) {
    std::ostringstream os;
    os << "delta_empirical: need at least " << min_needed << " replications for epsilon="
       << epsilon << ", got " << r;
    throw ConfigError(os.str());
  }
  std::vector<double> discrepancies;
  discrepancies.reserve(r);
  for (double ph : p_hats) discrepancies.push_back(std::abs(ph - true_p) / true_p);
  std::sort(discrepancies.begin(), discrepancies.end());
  // Higher order statistic: smallest m with m/r >= 1 - epsilon.
  auto m = static_cast<std::size_t>(
      std::ceil((1.0 - epsilon) * static_cast<double>(r)));
  m = std::clamp<std::size_t>(m, 1, r);
  DiscrepancyEstimate est;
  est.epsilon = epsilon;
  est.delta_hat = discrepancies[m - 1];
  est.replications = r;
  est.true_p = true_p;
  return est;
}

DeltaBound theorem1_delta_bound(double var_z1, std::uint64_t n, double p1, double p2,
                                double p, double p_tilde_2, double epsilon) {
  if (!(p1 > 0.0) || !(p > 0.0)) {
    throw ConfigError("theorem1_delta_bound: p1 and p must be positive");
  }
  if (var_z1 < 0.0 || p2 < 0.0 || p_tilde_2 < 0.0) {
    throw ConfigError("theorem1_delta_bound: negative inputs");
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ConfigError("theorem1_delta_bound: epsilon must be in (0,1)");
  }
  DeltaBound b;
  const double slack = epsilon - static_cast<double>(n) * p_tilde_2;
  if (!(slack > 0.0)) {
    b.vacuous = true;
    return b;
  }
  b.variance_term = std::sqrt(var_z1 / (static_cast<double>(n) * p1 * p1 * slack));
  b.tail_term = p2 / p;
  b.total = b.variance_term + b.tail_term;
  return b;
}

double variance_upper_bound(double min_alpha, double rate_1) {
  if (!(min_alpha > 0.0 && min_alpha <= 1.0)) {
    throw ConfigError("variance_upper_bound: min_alpha must be in (0,1]");
  }
  if (rate_1 < 0.0) throw ConfigError("variance_upper_bound: rate_1 must be >= 0");
  const double inv = 1.0 / min_alpha;
  return inv * inv * std::exp(-2.0 * rate_1);
}

}  // namespace redps
