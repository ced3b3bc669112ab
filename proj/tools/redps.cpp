// redps: rare-event probability estimation with dominating-point mixture IS.
//
// Subcommands:
//   redps dominating  emit the dominating set for a configured problem
//   redps run         run an experiment, write CSV rows, print a summary
//   redps oracle      print independent oracle values
//   redps profile     gamma-sweep efficiency profile (delta_hat, AE/PE flags)
//
// Exit codes: 0 success, 2 config error, 3 numerical failure,
// 4 vacuous Theorem-1 bound when one was explicitly requested.

#include "redps/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

namespace {

using redps::ExperimentConfig;

struct FlagCapture {
  CLI::App* app;
  std::vector<std::pair<std::string, std::string>>* overrides;

  void add(const std::string& flag, const std::string& key, const std::string& help) {
    auto holder = std::make_shared<std::string>();
    auto* opt = app->add_option(flag, *holder, help);
    auto* captured = overrides;
    opt->each([holder, key, captured](const std::string& value) {
      (void)holder;
      captured->emplace_back(key, value);
    });
  }
};

void add_common_flags(CLI::App* cmd, std::string* config_path,
                      std::vector<std::pair<std::string, std::string>>* overrides) {
  cmd->add_option("--config", *config_path, "configuration file (key = value)");
  FlagCapture f{cmd, overrides};
  f.add("--experiment", "experiment",
        "iid_sum|overshoot|two_tail|custom_polyhedral|ci_coverage|delta_sweep");
  f.add("--estimator", "estimator", "crude|is_k|is_all|alpha_hat|beta_hat");
  f.add("--m", "m", "iid_sum summand counts (list)");
  f.add("--a", "a", "level a (iid_sum |S_m| >= a m; overshoot threshold)");
  f.add("--mu-a", "mu_a", "iid_sum increment normal mean");
  f.add("--sd-a", "sd_a", "iid_sum increment normal sd");
  f.add("--rate-b", "rate_b", "iid_sum increment exponential rate");
  f.add("--T", "T", "overshoot horizon");
  f.add("--sigma", "sigma", "overshoot step sd (list)");
  f.add("--gamma", "gamma", "two_tail/sweep gamma values (list)");
  f.add("--k-tail", "k_tail", "two_tail left-tail multiplier");
  f.add("--k", "k", "dominating points used: single, list, or lo..hi range");
  f.add("--n", "n", "samples per estimation");
  f.add("--seed", "seed", "seeds (list)");
  f.add("--C", "C", "stopping threshold C > 1 (default 1.5; 'inf' disables)");
  f.add("--alpha", "alpha", "CI level complement (default 0.05)");
  f.add("--replications", "replications", "replications per cell");
  f.add("--epsilon", "epsilon", "delta_eps tolerance (default 0.05)");
  f.add("--set", "set", "polyhedral set file ([piece] sections)");
  f.add("--model-sigma", "model_sigma", "custom set input N(0, sigma^2 I)");
  f.add("--synthetic-dim", "synthetic_dim", "synthetic benchmark dimension");
  f.add("--synthetic-count", "synthetic_count", "synthetic half-space count");
  f.add("--synthetic-i0", "synthetic_i0", "synthetic base rate I0 (spread to 3 I0)");
  f.add("--synthetic-seed", "synthetic_seed", "synthetic generator seed");
  f.add("--oracle-crude-n", "oracle_crude_n", "crude-MC reference oracle sample count");
  f.add("--theorem1-bound", "theorem1_bound", "report the Theorem-1 delta bound (k=1)");
  f.add("--n-gamma-sq", "n_gamma_sq", "delta_sweep: scale n by gamma^2");
  f.add("--max-points", "max_points", "dominating search cap");
  f.add("--out", "out", "output path (CSV for run, text otherwise)");
  f.add("--threads", "threads", "worker threads (0 = hardware)");
}

ExperimentConfig build_config(
    const std::string& config_path,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  ExperimentConfig config;
  if (!config_path.empty()) config = redps::parse_config_file(config_path);
  for (const auto& [key, value] : overrides) {
    redps::apply_override(config, key, value);
  }
  return config;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw redps::ConfigError("cannot open output path '" + path + "'");
  out << text;
}

int cmd_dominating(const ExperimentConfig& config) {
  const redps::DominatingSet dom = redps::dominating_for_config(config);
  write_text(config.out_path, redps::format_dominating_set(dom));
  return 0;
}

int cmd_run(const ExperimentConfig& config) {
  const redps::ExperimentResult result = redps::run_experiment(config);
  std::string csv = redps::csv_header() + "\n";
  for (const auto& row : result.rows) csv += redps::csv_row(row) + "\n";
  if (config.out_path.empty()) {
    std::cout << csv;
  } else {
    write_text(config.out_path, csv);
  }
  if (!result.summary.empty()) std::cout << result.summary;
  for (const auto& row : result.rows) {
    std::cout << "row " << row.experiment << " [" << row.params << "]"
              << " p_hat=" << row.p_hat << " clt_halfwidth="
              << 0.5 * (row.clt_hi - row.clt_lo) << " hits_e2=" << row.hits_e2 << "\n";
  }
  return result.vacuous_bound ? 4 : 0;
}

int cmd_oracle(const ExperimentConfig& config) {
  std::ostringstream os;
  switch (config.experiment) {
    case redps::ExperimentKind::two_tail:
    case redps::ExperimentKind::ci_coverage:
    case redps::ExperimentKind::delta_sweep: {
      for (double gamma : config.gammas) {
        const auto v = redps::oracle_two_tail(gamma, config.k_tail);
        os << "oracle two_tail gamma=" << gamma << " k_tail=" << config.k_tail
           << ": p=" << v.p_exact << " est_abs_error=" << v.est_abs_error << "\n";
      }
      break;
    }
    case redps::ExperimentKind::iid_sum: {
      for (int m : config.m_values) {
        const auto model = redps::RateModel::normal_minus_exp_sum(
            m, config.increment_mean_a, config.increment_sd_a, config.increment_rate_b);
        const auto v = redps::oracle_iid_sum(model, config.level_a);
        os << "oracle iid_sum m=" << m << " a=" << config.level_a << ": p=" << v.p_exact
           << " est_abs_error=" << v.est_abs_error << "\n";
      }
      break;
    }
    case redps::ExperimentKind::overshoot: {
      for (double sigma : config.sigmas) {
        const auto v = redps::oracle_overshoot(config.horizon, config.level_a, sigma);
        os << "oracle overshoot T=" << config.horizon << " a=" << config.level_a
           << " sigma=" << sigma << ": p=" << v.p_exact
           << " est_abs_error=" << v.est_abs_error << "\n";
      }
      break;
    }
    default:
      throw redps::ConfigError("oracle: no oracle for this experiment kind");
  }
  write_text(config.out_path, os.str());
  return 0;
}

int cmd_profile(ExperimentConfig config) {
  config.experiment = redps::ExperimentKind::delta_sweep;
  const redps::ExperimentResult result = redps::run_experiment(config);
  std::string text = result.profile ? result.profile->text : result.summary;
  if (result.profile) {
    text += "  limit_gap: " + std::to_string(result.profile->limit_gap) + "\n";
  }
  write_text(config.out_path, text);
  if (!config.out_path.empty()) std::cout << text;
  return result.vacuous_bound ? 4 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rare-event probability estimation via dominating-point mixture IS"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  auto* dominating = app.add_subcommand("dominating", "emit the dominating set");
  auto* run = app.add_subcommand("run", "run an experiment and write CSV");
  auto* oracle = app.add_subcommand("oracle", "print independent oracle values");
  auto* profile = app.add_subcommand("profile", "gamma-sweep efficiency profile");
  for (auto* cmd : {dominating, run, oracle, profile}) {
    add_common_flags(cmd, &config_path, &overrides);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const ExperimentConfig config = build_config(config_path, overrides);
    if (dominating->parsed()) return cmd_dominating(config);
    if (run->parsed()) return cmd_run(config);
    if (oracle->parsed()) return cmd_oracle(config);
    if (profile->parsed()) return cmd_profile(config);
    return 2;
  } catch (const redps::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const redps::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
