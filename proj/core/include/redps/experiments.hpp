#pragma once

#include "redps/dominating.hpp"
#include "redps/inference.hpp"
#include "redps/oracles.hpp"
#include "redps/sampling.hpp"
#include "redps/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace redps {

enum class ExperimentKind {
  iid_sum,
  overshoot,
  two_tail,
  custom_polyhedral,
  ci_coverage,
  delta_sweep,
};

enum class EstimatorKind { crude, is_k, is_all, alpha_hat, beta_hat };

std::string to_string(ExperimentKind kind);
std::string to_string(EstimatorKind kind);
ExperimentKind experiment_from_string(const std::string& name);
EstimatorKind estimator_from_string(const std::string& name);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::two_tail;

  // iid_sum increments A - B, A ~ N(mean, sd), B ~ Exp(rate).
  double increment_mean_a = 1.5;
  double increment_sd_a = 1.0;
  double increment_rate_b = 1.0;
  std::vector<int> m_values{10};
  double level_a = 1.5;  // |S_m| >= a m; also the overshoot threshold

  // overshoot walk
  int horizon = 10;
  std::vector<double> sigmas{0.3};

  // two_tail / sweeps
  std::vector<double> gammas{4.0};
  double k_tail = 2.0;
  /// delta_sweep: n per gamma becomes round(n * gamma^2) when set.
  bool n_scales_with_gamma_sq = false;

  // custom polyhedral set
  std::string set_file;
  double model_sigma = 1.0;  // N(0, sigma^2 I) input for custom sets
  int synthetic_dim = 0;     // > 0 generates the random half-space benchmark
  int synthetic_count = 0;
  double synthetic_rate_lo = 2.0;
  double synthetic_rate_hi = 6.0;
  std::uint64_t synthetic_seed = 1;
  std::uint64_t oracle_crude_n = 0;  // crude-MC reference oracle sample count

  EstimatorKind estimator = EstimatorKind::is_all;
  std::vector<int> k_values;  // is_k: which prefixes to run
  std::uint64_t n = 100000;
  std::vector<std::uint64_t> seeds{1};
  double threshold_c = 1.5;
  double ci_alpha = 0.05;
  std::uint64_t replications = 1;
  double epsilon = 0.05;
  bool theorem1_bound = false;
  int max_points = 1000;

  std::string out_path;
  unsigned threads = 0;

  void validate() const;  // throws ConfigError with a field path
};

/// One CSV row: an experiment cell aggregated over its seeds/replications.
struct RowResult {
  std::string experiment;
  std::string params;  // canonical key=value list; with seed, enough to re-run
  int k_used = 0;
  int r_found = 0;
  std::string stop_reason;
  std::uint64_t n = 0;
  double p_hat = 0.0;
  double v_n = 0.0;
  std::optional<double> rel_err;
  double eb_lo = 0.0;
  double eb_hi = 0.0;
  double clt_lo = 0.0;
  double clt_hi = 0.0;
  std::uint64_t hits_e2 = 0;
  std::optional<double> oracle_p;
  std::uint64_t seed_count = 0;
  double wall_time = 0.0;
  std::uint64_t config_hash = 0;
  std::string seed_echo;

  // carried for diagnostics/tests, not part of the CSV schema
  std::uint64_t hits_e1 = 0;
  std::uint64_t e1_bound_violations = 0;
  double max_log_lr_on_hit = -std::numeric_limits<double>::infinity();
  std::vector<double> replication_p_hats;
};

std::string csv_header();
std::string csv_row(const RowResult& row);

struct ProfilePoint {
  double gamma = 0.0;
  std::uint64_t n = 0;
  std::uint64_t replications = 0;
  double delta_hat = 0.0;
  double rel_err = 0.0;
  double ae_ratio = 0.0;
  double oracle_p = 0.0;
  double p_hat = 0.0;
};

struct ProfileSummary {
  std::vector<ProfilePoint> points;
  bool ae_consistent = false;
  bool pe_consistent = false;
  /// Reported limit gap 1 - c with c = min over the grid of p1/p (weak form).
  double limit_gap = 0.0;
  std::string text;
};

/// Trend flags over a gamma grid: AE-consistent when the plug-in log ratio
/// increases toward 2 with a shrinking gap, PE-consistent when delta_hat
/// decreases across the grid.
ProfileSummary report_efficiency_profile(std::span<const ProfilePoint> points);

struct ExperimentResult {
  std::vector<RowResult> rows;
  std::string summary;  // attribute-value text for stdout
  std::optional<ProfileSummary> profile;
  bool vacuous_bound = false;  // a requested Theorem-1 bound was vacuous
};

ExperimentResult run_experiment(const ExperimentConfig& config);

/// Attribute-value rendering of a dominating set (rates, tilts, stop reason).
std::string format_dominating_set(const DominatingSet& dom);

/// Runs the dominating-point search for the configured experiment's model/set.
DominatingSet dominating_for_config(const ExperimentConfig& config);

// --- configuration and file formats ---

/// Flat key = value file with [experiment] section headers.
ExperimentConfig parse_config_file(const std::string& path);
/// Applies `key=value` overrides on top of a parsed config.
void apply_override(ExperimentConfig& config, const std::string& key,
                    const std::string& value);

/// Polyhedral set file: repeated [piece] sections, one "w1 ... wd >= b" row
/// per line.
PolyhedralUnion parse_set_file(const std::string& path, double gamma = 0.0);
std::string format_set_file(const PolyhedralUnion& set);

/// Union of `count` random unit-normal half-spaces in dimension `dim` whose
/// standalone rates spread linearly over [rate_lo, rate_hi]; the desk-scale
/// stand-in for a many-dominating-point problem.
PolyhedralUnion synthetic_halfspace_union(int dim, int count, double rate_lo,
                                          double rate_hi, std::uint64_t seed);

std::uint64_t fnv1a_hash(std::string_view text);

}  // namespace redps
