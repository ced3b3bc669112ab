#pragma once

#include "redps/event_set.hpp"
#include "redps/rate_model.hpp"
#include "redps/rng.hpp"
#include "redps/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace redps {

struct MixtureComponent {
  Vector tilt;
  double cgf_value = 0.0;  // cached mu(tilt)
  Vector point;            // the dominating point the tilt recenters to
};

/// Mixture of exponentially tilted components with weights alpha_i > 0,
/// sum alpha_i = 1. Produces samples and the stable log likelihood ratio
/// log L(x) = -logsumexp_i(log alpha_i + s_i^T x - mu(s_i)).
class MixtureSampler {
 public:
  MixtureSampler(const RateModel& model, std::vector<MixtureComponent> components,
                 Vector weights);

  /// Equal weights 1/k over the k most significant points of a dominating set.
  static MixtureSampler equal_weights(const RateModel& model,
                                      const std::vector<CutPoint>& cut_points);

  int component_count() const { return static_cast<int>(components_.size()); }
  const std::vector<MixtureComponent>& components() const { return components_; }
  const Vector& weights() const { return weights_; }
  const RateModel& model() const { return *model_; }

  double min_weight() const { return min_weight_; }
  /// min_i I(a_i) over the components, computed as s_i^T a_i - mu(s_i).
  double min_rate() const { return min_rate_; }

  std::pair<Vector, int> sample(Philox& rng) const;
  double log_likelihood_ratio(const Vector& x) const;

 private:
  const RateModel* model_;
  std::vector<MixtureComponent> components_;
  Vector weights_;
  std::vector<double> log_weights_;
  Vector weight_cdf_;
  double min_weight_ = 0.0;
  double min_rate_ = 0.0;
};

struct EstimationReport {
  double p_hat = 0.0;
  double v_n = 0.0;  // unbiased sample variance of the per-replication outputs
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  std::uint64_t hits_e1 = 0;
  std::uint64_t hits_e2 = 0;
  double max_log_lr_on_hit = -std::numeric_limits<double>::infinity();
  std::vector<std::uint64_t> per_component_draws;
  double wall_time = 0.0;
  /// Count of E1 outputs exceeding (1/min alpha) e^{-rate_1}; zero whenever
  /// the split and mixture come from the same truncated dominating set.
  std::uint64_t e1_bound_violations = 0;
  /// Raw per-replication outputs, captured only when requested.
  std::vector<double> outputs;
};

struct EstimationOptions {
  unsigned threads = 0;  // 0 -> hardware concurrency
  bool collect_outputs = false;
};

/// Mixture importance sampling of p = P(X in E): p_hat = mean of I_E(x) L(x)
/// over n independent replications, deterministic given (seed, n) at any
/// thread count. Hits are classified through the split into covered (E1) and
/// residual (E2) regions; E2 hits enter the estimate (unbiasedness) and are
/// counted so the report exposes missed-dominating-point behavior.
EstimationReport run_is_estimation(const RateModel& model, const PolyhedralUnion& set,
                                   const RegionSplit& split, const MixtureSampler& mix,
                                   std::uint64_t n, std::uint64_t seed,
                                   const EstimationOptions& options = {});

/// Frequency estimator under the input law; v_n = p(1-p) n/(n-1).
EstimationReport run_crude_mc(const RateModel& model, const PolyhedralUnion& set,
                              std::uint64_t n, std::uint64_t seed,
                              const EstimationOptions& options = {});

/// Single-tilt estimator of P(|S_m| >= a m) for the increment-sum model:
/// exp(-theta_a S + m mu(theta_a)) I{|S| >= a m} with S drawn under theta_a.
EstimationReport run_alpha_hat(const RateModel& increment_sum_model, double a,
                               std::uint64_t n, std::uint64_t seed,
                               const EstimationOptions& options = {});

/// Stratified two-tilt estimator: one draw under theta_a for the right-tail
/// term and an independent draw under theta_{-a} for the left-tail term,
/// summed per replication; unbiased for the two-sided probability.
EstimationReport run_beta_hat(const RateModel& increment_sum_model, double a,
                              std::uint64_t n, std::uint64_t seed,
                              const EstimationOptions& options = {});

}  // namespace redps
