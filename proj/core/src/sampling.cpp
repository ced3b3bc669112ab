#include "redps/sampling.hpp"

#include "redps/special.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <thread>

namespace redps {

MixtureSampler::MixtureSampler(const RateModel& model,
                               std::vector<MixtureComponent> components, Vector weights)
    : model_(&model), components_(std::move(components)), weights_(std::move(weights)) {
  if (components_.empty()) throw ConfigError("mixture needs at least one component");
  if (weights_.size() != static_cast<int>(components_.size())) {
    throw ConfigError("mixture weights/components size mismatch");
  }
  double sum = 0.0;
  for (int i = 0; i < weights_.size(); ++i) {
    if (!(weights_[i] > 0.0)) throw ConfigError("mixture weights must be positive");
    sum += weights_[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw ConfigError("mixture weights must sum to one");
  }
  min_weight_ = weights_.minCoeff();
  min_rate_ = std::numeric_limits<double>::infinity();
  log_weights_.reserve(components_.size());
  weight_cdf_.resize(weights_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    if (c.tilt.size() != model.dimension() || c.point.size() != model.dimension()) {
      throw ConfigError("mixture component dimension mismatch");
    }
    if (std::abs(c.cgf_value - model.cgf(c.tilt)) > 1e-10 * (1.0 + std::abs(c.cgf_value))) {
      throw ConfigError("mixture component cgf cache inconsistent with model");
    }
    log_weights_.push_back(std::log(weights_[static_cast<int>(i)]));
    acc += weights_[static_cast<int>(i)];
    weight_cdf_[static_cast<int>(i)] = acc;
    min_rate_ = std::min(min_rate_, c.tilt.dot(c.point) - c.cgf_value);
  }
  weight_cdf_[weight_cdf_.size() - 1] = 1.0;
}

MixtureSampler MixtureSampler::equal_weights(const RateModel& model,
                                             const std::vector<CutPoint>& cut_points) {
  if (cut_points.empty()) throw ConfigError("equal_weights: no cut points");
  std::vector<MixtureComponent> comps;
  comps.reserve(cut_points.size());
  for (const auto& cp : cut_points) {
    comps.push_back({cp.tilt, model.cgf(cp.tilt), cp.point});
  }
  const int k = static_cast<int>(comps.size());
  return MixtureSampler(model, std::move(comps),
                        Vector::Constant(k, 1.0 / static_cast<double>(k)));
}

std::pair<Vector, int> MixtureSampler::sample(Philox& rng) const {
  const double u = rng.uniform();
  int comp = 0;
  while (comp + 1 < weight_cdf_.size() && u > weight_cdf_[comp]) ++comp;
  return {model_->sample_tilted(components_[comp].tilt, rng), comp};
}

double MixtureSampler::log_likelihood_ratio(const Vector& x) const {
  std::vector<double> terms(components_.size());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    terms[i] = log_weights_[i] + components_[i].tilt.dot(x) - components_[i].cgf_value;
  }
  return -log_sum_exp(terms);
}

namespace {

constexpr std::uint64_t kBlockSize = 8192;

struct Accumulator {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  std::uint64_t hits_e1 = 0;
  std::uint64_t hits_e2 = 0;
  std::uint64_t bound_violations = 0;
  double max_log_lr = -std::numeric_limits<double>::infinity();
  std::vector<std::uint64_t> comp_draws;
  std::vector<double> outputs;

  void push(double z) {
    ++count;
    const double delta = z - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (z - mean);
  }

  // Pairwise merge; exact given a fixed merge order.
  void merge(const Accumulator& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(other.count);
    const double delta = other.mean - mean;
    const double total = na + nb;
    mean += delta * nb / total;
    m2 += other.m2 + delta * delta * na * nb / total;
    count += other.count;
    hits_e1 += other.hits_e1;
    hits_e2 += other.hits_e2;
    bound_violations += other.bound_violations;
    max_log_lr = std::max(max_log_lr, other.max_log_lr);
    if (comp_draws.size() < other.comp_draws.size()) {
      comp_draws.resize(other.comp_draws.size(), 0);
    }
    for (std::size_t i = 0; i < other.comp_draws.size(); ++i) {
      comp_draws[i] += other.comp_draws[i];
    }
    outputs.insert(outputs.end(), other.outputs.begin(), other.outputs.end());
  }
};

// Runs n replications split into fixed-size blocks. Block b covers
// replications [b*kBlockSize, ...) and is processed by whichever worker gets
// there first; per-replication RNG streams plus an index-ordered merge make
// the result independent of the worker count.
template <typename PerReplication>
Accumulator run_blocks(std::uint64_t n, unsigned threads, int component_count,
                       bool collect_outputs, PerReplication per_rep) {
  const std::uint64_t n_blocks = (n + kBlockSize - 1) / kBlockSize;
  std::vector<Accumulator> blocks(n_blocks);
  unsigned n_threads = threads == 0 ? std::thread::hardware_concurrency() : threads;
  if (n_threads == 0) n_threads = 1;
  n_threads = static_cast<unsigned>(
      std::min<std::uint64_t>(n_threads, std::max<std::uint64_t>(n_blocks, 1)));

  std::atomic<std::uint64_t> next_block{0};
  const auto worker = [&]() {
    while (true) {
      const std::uint64_t b = next_block.fetch_add(1);
      if (b >= n_blocks) break;
      Accumulator& acc = blocks[b];
      acc.comp_draws.assign(static_cast<std::size_t>(component_count), 0);
      if (collect_outputs) acc.outputs.reserve(kBlockSize);
      const std::uint64_t lo = b * kBlockSize;
      const std::uint64_t hi = std::min(n, lo + kBlockSize);
      for (std::uint64_t j = lo; j < hi; ++j) {
        per_rep(j, acc);
      }
    }
  };

  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  Accumulator total;
  for (const auto& b : blocks) total.merge(b);
  return total;
}

EstimationReport finalize(const Accumulator& acc, std::uint64_t n, std::uint64_t seed,
                          double elapsed_seconds) {
  EstimationReport rep;
  rep.p_hat = acc.mean;
  rep.v_n = n >= 2 ? acc.m2 / static_cast<double>(n - 1) : 0.0;
  rep.n = n;
  rep.seed = seed;
  rep.hits_e1 = acc.hits_e1;
  rep.hits_e2 = acc.hits_e2;
  rep.max_log_lr_on_hit = acc.max_log_lr;
  rep.per_component_draws = acc.comp_draws;
  rep.wall_time = elapsed_seconds;
  rep.e1_bound_violations = acc.bound_violations;
  rep.outputs = acc.outputs;
  return rep;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(clock::now() - start_).count();
  }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point start_ = clock::now();
};

}  // namespace

EstimationReport run_is_estimation(const RateModel& model, const PolyhedralUnion& set,
                                   const RegionSplit& split, const MixtureSampler& mix,
                                   std::uint64_t n, std::uint64_t seed,
                                   const EstimationOptions& options) {
  if (n < 2) throw ConfigError("run_is_estimation: n must be >= 2");
  if (split.cut_points().size() != mix.components().size()) {
    throw ConfigError("run_is_estimation: split and mixture must use the same points");
  }
  if (model.dimension() != set.dimension() ||
      model.dimension() != mix.model().dimension()) {
    throw ConfigError("run_is_estimation: model/set/mixture dimension mismatch");
  }
  Stopwatch timer;
  // Output bound on the covered region: L(x) <= (1/min alpha) e^{-rate_1}.
  const double log_bound = -std::log(mix.min_weight()) - mix.min_rate() + 1e-9;
  const Accumulator acc = run_blocks(
      n, options.threads, mix.component_count(), options.collect_outputs,
      [&](std::uint64_t j, Accumulator& a) {
        Philox rng(seed, j);
        auto [x, comp] = mix.sample(rng);
        ++a.comp_draws[static_cast<std::size_t>(comp)];
        double z = 0.0;
        if (set.contains(x)) {
          const double log_lr = mix.log_likelihood_ratio(x);
          z = std::exp(log_lr);
          a.max_log_lr = std::max(a.max_log_lr, log_lr);
          if (split.covered(x)) {
            ++a.hits_e1;
            if (log_lr > log_bound) ++a.bound_violations;
          } else {
            ++a.hits_e2;
          }
        }
        a.push(z);
        if (options.collect_outputs) a.outputs.push_back(z);
      });
  return finalize(acc, n, seed, timer.seconds());
}

EstimationReport run_crude_mc(const RateModel& model, const PolyhedralUnion& set,
                              std::uint64_t n, std::uint64_t seed,
                              const EstimationOptions& options) {
  if (n < 2) throw ConfigError("run_crude_mc: n must be >= 2");
  Stopwatch timer;
  const Vector zero_tilt = Vector::Zero(model.dimension());
  const Accumulator acc = run_blocks(
      n, options.threads, 1, options.collect_outputs,
      [&](std::uint64_t j, Accumulator& a) {
        Philox rng(seed, j);
        const Vector x = model.sample_tilted(zero_tilt, rng);
        ++a.comp_draws[0];
        double z = 0.0;
        if (set.contains(x)) {
          z = 1.0;
          ++a.hits_e1;
          a.max_log_lr = std::max(a.max_log_lr, 0.0);
        }
        a.push(z);
        if (options.collect_outputs) a.outputs.push_back(z);
      });
  EstimationReport rep = finalize(acc, n, seed, timer.seconds());
  // Closed-form unbiased variance of the frequency estimator.
  rep.v_n = rep.p_hat * (1.0 - rep.p_hat) * static_cast<double>(n) /
            static_cast<double>(n - 1);
  return rep;
}

namespace {

struct TailTilt {
  double theta = 0.0;
  double total_cgf = 0.0;
};

TailTilt solve_tail(const RateModel& model, double level_mean) {
  Vector y(1);
  y[0] = level_mean * model.summands();
  TailTilt t;
  Vector s = model.tilt_param(y);
  t.theta = s[0];
  t.total_cgf = model.cgf(s);
  return t;
}

}  // namespace

EstimationReport run_alpha_hat(const RateModel& model, double a, std::uint64_t n,
                               std::uint64_t seed, const EstimationOptions& options) {
  if (model.kind() != RateModel::Kind::normal_minus_exp_sum) {
    throw ConfigError("run_alpha_hat: requires the increment-sum model");
  }
  if (n < 2) throw ConfigError("run_alpha_hat: n must be >= 2");
  Stopwatch timer;
  const double am = a * model.summands();
  const TailTilt tilt = solve_tail(model, a);
  Vector s(1);
  s[0] = tilt.theta;
  const Accumulator acc = run_blocks(
      n, options.threads, 1, options.collect_outputs,
      [&](std::uint64_t j, Accumulator& a_) {
        Philox rng(seed, j);
        const Vector x = model.sample_tilted(s, rng);
        ++a_.comp_draws[0];
        double z = 0.0;
        if (std::abs(x[0]) >= am) {
          const double log_lr = -(tilt.theta * x[0] - tilt.total_cgf);
          z = std::exp(log_lr);
          a_.max_log_lr = std::max(a_.max_log_lr, log_lr);
          // Right tail is the covered region of the single tilt at theta_a.
          if (x[0] >= am) {
            ++a_.hits_e1;
          } else {
            ++a_.hits_e2;
          }
        }
        a_.push(z);
        if (options.collect_outputs) a_.outputs.push_back(z);
      });
  return finalize(acc, n, seed, timer.seconds());
}

EstimationReport run_beta_hat(const RateModel& model, double a, std::uint64_t n,
                              std::uint64_t seed, const EstimationOptions& options) {
  if (model.kind() != RateModel::Kind::normal_minus_exp_sum) {
    throw ConfigError("run_beta_hat: requires the increment-sum model");
  }
  if (n < 2) throw ConfigError("run_beta_hat: n must be >= 2");
  Stopwatch timer;
  const double am = a * model.summands();
  const TailTilt right = solve_tail(model, a);
  const TailTilt left = solve_tail(model, -a);
  Vector s_right(1), s_left(1);
  s_right[0] = right.theta;
  s_left[0] = left.theta;
  const Accumulator acc = run_blocks(
      n, options.threads, 2, options.collect_outputs,
      [&](std::uint64_t j, Accumulator& a_) {
        Philox rng(seed, j);
        const Vector xr = model.sample_tilted(s_right, rng);
        const Vector xl = model.sample_tilted(s_left, rng);
        ++a_.comp_draws[0];
        ++a_.comp_draws[1];
        double z = 0.0;
        bool hit = false;
        if (xr[0] >= am) {
          const double log_lr = -(right.theta * xr[0] - right.total_cgf);
          z += std::exp(log_lr);
          hit = true;
          a_.max_log_lr = std::max(a_.max_log_lr, log_lr);
        }
        if (xl[0] <= -am) {
          const double log_lr = -(left.theta * xl[0] - left.total_cgf);
          z += std::exp(log_lr);
          hit = true;
          a_.max_log_lr = std::max(a_.max_log_lr, log_lr);
        }
        if (hit) ++a_.hits_e1;
        a_.push(z);
        if (options.collect_outputs) a_.outputs.push_back(z);
      });
  return finalize(acc, n, seed, timer.seconds());
}

}  // namespace redps
