#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polgrad/config.hpp"
#include "polgrad/csv.hpp"
#include "polgrad/experiments.hpp"
#include "polgrad/oracle.hpp"
#include "polgrad/svg.hpp"

namespace polgrad {

namespace cli_detail {

inline std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return {v.begin(), v.end()};
}

/// Config echo for reports and CSV comments; output paths are dropped so that
/// identical experiments produce identical bytes wherever they are written.
inline nlohmann::json echo_settings(nlohmann::json config) {
  config.erase("out");
  config.erase("log");
  return config;
}

inline std::string settings_comment(const std::string& command, const nlohmann::json& config) {
  return command + " " + echo_settings(config).dump();
}

inline std::string out_path(const nlohmann::json& config) {
  const auto out = cfg::get_or<std::string>(config, "out", "");
  if (out.empty()) throw ConfigError("config field 'out' is required (or pass --out)");
  return out;
}

inline std::vector<double> gammas_from(const nlohmann::json& config,
                                       std::vector<double> fallback) {
  auto gammas = cfg::get_or<std::vector<double>>(config, "gammas", std::move(fallback));
  if (gammas.empty()) throw ConfigError("config field 'gammas' must not be empty");
  for (double g : gammas)
    if (!(g >= 0.0 && g < 1.0)) throw ConfigError("config field 'gammas' entries must lie in [0, 1)");
  return gammas;
}

}  // namespace cli_detail

/// `estimate`: one seeded gradient-estimation run against the exact gradient.
inline int cmd_estimate(const nlohmann::json& config) {
  const auto env = env_section(config);
  const auto algorithm = cfg::get_or<std::string>(config, "algorithm", "gpomdp");
  const double gamma = cfg::get_or<double>(config, "gamma", 0.99);
  const auto steps = cfg::get_or<long long>(config, "steps", 100'000);
  const auto seed = cfg::get_or<std::uint64_t>(config, "seed", 0);
  const auto log_path = cfg::get_or<std::string>(config, "log", "");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw ConfigError("config field 'gamma' must lie in [0, 1)");
  if (steps < 1) throw ConfigError("config field 'steps' must be >= 1");

  EstimatorConfig ecfg;
  ecfg.gamma = gamma;
  if (algorithm == "constant") {
    ecfg.baseline_mode = BaselineMode::kConstant;
    ecfg.baseline_b = cfg::require<double>(config, "b");
  } else {
    ecfg.baseline_mode = algorithm_baseline_mode(algorithm);
  }

  return with_tabular_system(env, [&](const TabularMdp& mdp, const auto& policy, int start) {
    const Eigen::VectorXd grad = exact_gradient(mdp, policy);
    RngStream rng = RngStream::replica(seed, 0);
    EstimatorState state(policy.param_dim());
    PolicyEvaluator eval(policy);
    Eigen::VectorXd zeta(policy.param_dim());

    std::ostringstream log;
    if (!log_path.empty()) {
      log << "# " << cli_detail::settings_comment("estimate", config) << "\n";
      log << "step,reward,baseline";
      for (Eigen::Index j = 0; j < policy.param_dim(); ++j) log << ",G_" << (j + 1);
      log << "\n";
    }

    int x = start;
    for (long long t = 1; t <= steps; ++t) {
      eval.compute(policy, x);
      const int a = eval.sample(rng);
      const int y = mdp.sample_next(x, a, rng);
      const double reward = mdp.reward(y);
      eval.score(a, zeta);
      estimator_update(state, reward, zeta, ecfg);
      x = y;
      if (!log_path.empty()) {
        log << t << ',' << format_g17(reward) << ',' << format_g17(state.baseline);
        for (Eigen::Index j = 0; j < state.estimate.size(); ++j)
          log << ',' << format_g17(state.estimate[j]);
        log << "\n";
      }
    }

    nlohmann::json report;
    report["command"] = "estimate";
    report["settings"] = cli_detail::echo_settings(config);
    report["algorithm"] = algorithm;
    report["gamma"] = gamma;
    report["steps"] = steps;
    report["seed"] = seed;
    report["estimate"] = cli_detail::to_vec(state.estimate);
    report["baseline_final"] = state.baseline;
    report["grad_true"] = cli_detail::to_vec(grad);
    report["relative_error"] = relative_error(state.estimate, grad);
    write_file(cli_detail::out_path(config), report.dump(2) + "\n");
    if (!log_path.empty()) write_file(log_path, log.str());
    std::cout << "wrote " << cli_detail::out_path(config) << "\n";
    return 0;
  });
}

/// `oracle`: exact quantities for a tabular environment.
inline int cmd_oracle(const nlohmann::json& config) {
  const auto env = env_section(config);
  const double gamma = cfg::get_or<double>(config, "gamma", 0.99);
  const double fd_step = cfg::get_or<double>(config, "fd_step", 1e-6);
  std::optional<long long> horizon;
  if (!config.contains("horizon") || config.at("horizon").is_number()) {
    horizon = cfg::get_or<long long>(config, "horizon", 100);
  } else if (config.at("horizon") != "infinite") {
    throw ConfigError("config field 'horizon' must be an integer or \"infinite\"");
  }

  return with_tabular_system(env, [&](const TabularMdp& mdp, const auto& policy, int) {
    const OracleResult oracle = compute_oracle(mdp, policy, fd_step);
    const OptimalBaselineResult bstar =
        optimal_constant_baseline(mdp, policy, gamma, 1, horizon);
    nlohmann::json report;
    report["command"] = "oracle";
    report["settings"] = cli_detail::echo_settings(config);
    report["stationary"] = cli_detail::to_vec(oracle.stationary);
    report["average_reward"] = oracle.average_reward;
    report["gradient"] = cli_detail::to_vec(oracle.gradient);
    report["optimal_baseline"] = {
        {"gamma", bstar.gamma},
        {"horizon", horizon ? nlohmann::json(*horizon) : nlohmann::json("infinite")},
        {"per_param", cli_detail::to_vec(bstar.per_param)},
        {"aggregate", bstar.aggregate}};
    write_file(cli_detail::out_path(config), report.dump(2) + "\n");
    std::cout << "wrote " << cli_detail::out_path(config) << "\n";
    return 0;
  });
}

/// `sweep`: constant-baseline sweep (fractions of the average reward).
inline int cmd_sweep(const nlohmann::json& config) {
  const auto env = env_section(config);
  BaselineSweepParams params;
  params.gammas = cli_detail::gammas_from(config, params.gammas);
  params.steps = cfg::get_or<long long>(config, "steps", params.steps);
  params.replicas = cfg::get_or<int>(config, "replicas", params.replicas);
  params.base_seed = cfg::get_or<std::uint64_t>(config, "seed", 0);
  params.jobs = cfg::get_or<int>(config, "jobs", 1);
  if (config.contains("grid")) {
    const auto& grid = config.at("grid");
    cfg::check_keys(grid, {"lo", "hi", "points"}, "grid");
    params.grid_lo = cfg::get_or<double>(grid, "lo", params.grid_lo);
    params.grid_hi = cfg::get_or<double>(grid, "hi", params.grid_hi);
    params.grid_points = cfg::get_or<int>(grid, "points", params.grid_points);
  }
  return with_tabular_system(env, [&](const TabularMdp& mdp, const auto& policy, int start) {
    const auto records = baseline_sweep(mdp, policy, start, params);
    std::ostringstream out;
    write_sweep_csv(out, records, cli_detail::settings_comment("sweep", config));
    write_file(cli_detail::out_path(config), out.str());
    std::cout << "wrote " << cli_detail::out_path(config) << "\n";
    return 0;
  });
}

/// `bias-variance`: relative-error curves against the iteration count.
inline int cmd_bias_variance(const nlohmann::json& config) {
  const auto env = env_section(config);
  BiasVarianceParams params;
  params.algorithms =
      cfg::get_or<std::vector<std::string>>(config, "algorithms", params.algorithms);
  params.gammas = cli_detail::gammas_from(config, params.gammas);
  params.t_max = cfg::get_or<long long>(config, "steps", params.t_max);
  params.replicas = cfg::get_or<int>(config, "replicas", params.replicas);
  params.base_seed = cfg::get_or<std::uint64_t>(config, "seed", 0);
  params.jobs = cfg::get_or<int>(config, "jobs", 1);
  params.checkpoints =
      cfg::get_or<std::vector<long long>>(config, "checkpoints", params.checkpoints);
  return with_tabular_system(env, [&](const TabularMdp& mdp, const auto& policy, int start) {
    const auto records = bias_variance_experiment(mdp, policy, start, params);
    std::ostringstream out;
    write_sweep_csv(out, records, cli_detail::settings_comment("bias-variance", config));
    write_file(cli_detail::out_path(config), out.str());
    std::cout << "wrote " << cli_detail::out_path(config) << "\n";
    return 0;
  });
}

/// `train`: online (olpomdp/olgarb) or batch-ascent (gpomdp/garb) training.
inline int cmd_train(const nlohmann::json& config) {
  const auto env = env_section(config);
  const auto algorithm = cfg::get_or<std::string>(config, "algorithm", "olgarb");
  const bool online = algorithm == "olpomdp" || algorithm == "olgarb";
  const bool batch = algorithm == "gpomdp" || algorithm == "garb";
  if (!online && !batch)
    throw ConfigError("config field 'algorithm' must be one of olpomdp, olgarb, gpomdp, garb");

  std::vector<TrainingCurve> curves;
  if (online) {
    TrainOnlineParams params;
    params.algorithm = algorithm;
    params.alpha = cfg::get_or<double>(config, "alpha", params.alpha);
    params.gamma = cfg::get_or<double>(config, "gamma", params.gamma);
    params.steps = cfg::get_or<long long>(config, "steps", params.steps);
    params.num_seeds = cfg::get_or<int>(config, "seeds", params.num_seeds);
    params.base_seed = cfg::get_or<std::uint64_t>(config, "seed", 0);
    params.theta_init_halfwidth =
        cfg::get_or<double>(config, "theta_init", params.theta_init_halfwidth);
    params.window = cfg::get_or<long long>(config, "window", params.window);
    params.jobs = cfg::get_or<int>(config, "jobs", 1);
    curves = with_train_setup(env, [&](const auto& tenv, const auto& policy) {
      return train_online(tenv, policy, params);
    });
  } else {
    TrainBatchParams params;
    params.estimator = algorithm;
    params.alpha = cfg::get_or<double>(config, "alpha", params.alpha);
    params.gamma = cfg::get_or<double>(config, "gamma", params.gamma);
    params.steps_per_estimate =
        cfg::get_or<long long>(config, "steps_per_estimate", params.steps_per_estimate);
    params.iterations = cfg::get_or<int>(config, "iterations", params.iterations);
    params.num_seeds = cfg::get_or<int>(config, "seeds", params.num_seeds);
    params.base_seed = cfg::get_or<std::uint64_t>(config, "seed", 0);
    params.theta_init_halfwidth =
        cfg::get_or<double>(config, "theta_init", params.theta_init_halfwidth);
    params.jobs = cfg::get_or<int>(config, "jobs", 1);
    curves = with_train_setup(env, [&](const auto& tenv, const auto& policy) {
      return train_batch_ascent(tenv, policy, params);
    });
  }

  int diverged = 0;
  for (const auto& c : curves) diverged += c.diverged;
  std::ostringstream out;
  write_curves_csv(out, curves, cli_detail::settings_comment("train", config));
  write_file(cli_detail::out_path(config), out.str());
  std::cout << "wrote " << cli_detail::out_path(config) << "\n";
  if (diverged > 0)
    std::cout << "warning: " << diverged << " of " << curves.size()
              << " runs diverged (flagged in the CSV)\n";
  return 0;
}

namespace cli_detail {

inline SvgChart chart_from_sweep(const std::vector<SweepRecord>& records,
                                 const std::string& xmode) {
  if (records.empty()) throw std::runtime_error("plot: CSV contains no data rows");
  bool all_steps_equal = true;
  bool any_b = false;
  for (const auto& r : records) {
    all_steps_equal &= r.steps == records.front().steps;
    any_b |= std::isfinite(r.b_over_rbar);
  }
  const bool use_b = xmode == "b" || (xmode == "auto" && any_b && all_steps_equal);
  if (use_b && !any_b) throw std::runtime_error("plot: records carry no b/rbar values");

  std::map<std::string, SvgSeries> groups;
  for (const auto& r : records) {
    std::ostringstream label;
    label << r.algorithm << " gamma=" << r.gamma;
    auto& series = groups[label.str()];
    series.label = label.str();
    series.x.push_back(use_b ? r.b_over_rbar : static_cast<double>(r.steps));
    series.y.push_back(r.mean_rel_error);
    series.band_lo.push_back(std::max(0.0, r.mean_rel_error - r.std_rel_error));
    series.band_hi.push_back(r.mean_rel_error + r.std_rel_error);
  }
  SvgChart chart;
  chart.title = use_b ? "relative error vs baseline" : "relative error vs iterations";
  chart.xlabel = use_b ? "b / rbar" : "t";
  chart.ylabel = "relative error";
  chart.log_x = !use_b;
  for (auto& [label, series] : groups) chart.series.push_back(std::move(series));
  return chart;
}

inline SvgChart chart_from_curves(const std::vector<TrainingCurve>& curves) {
  if (curves.empty()) throw std::runtime_error("plot: CSV contains no data rows");
  std::map<std::string, std::vector<TrainingCurve>> by_algo;
  for (const auto& c : curves)
    if (!c.points.empty()) by_algo[c.algorithm].push_back(c);
  if (by_algo.empty()) throw std::runtime_error("plot: no usable curve points");

  SvgChart chart;
  chart.title = "windowed average reward";
  chart.xlabel = "step";
  chart.ylabel = "average reward";
  for (auto& [algo, group] : by_algo) {
    SvgSeries series;
    series.label = algo;
    if (group.size() >= 2) {
      const auto stats = aggregate_stats(group);
      for (const auto& s : stats) {
        series.x.push_back(static_cast<double>(s.step));
        series.y.push_back(s.mean);
        series.band_lo.push_back(s.mean - s.std);
        series.band_hi.push_back(s.mean + s.std);
      }
    } else {
      for (const auto& [step, value] : group.front().points) {
        series.x.push_back(static_cast<double>(step));
        series.y.push_back(value);
      }
    }
    chart.series.push_back(std::move(series));
  }
  return chart;
}

}  // namespace cli_detail

/// `plot`: render a sweep/bias-variance/training CSV as an SVG line chart.
inline int cmd_plot(const std::string& csv_path, const std::string& out_path,
                    const std::string& xmode) {
  const std::string contents = read_file(csv_path);
  std::string header;
  {
    std::istringstream in(contents);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      header = line;
      break;
    }
  }
  SvgChart chart;
  if (header == kSweepHeader) {
    std::istringstream in(contents);
    chart = cli_detail::chart_from_sweep(read_sweep_csv(in), xmode);
  } else if (header == kCurveHeader) {
    std::istringstream in(contents);
    chart = cli_detail::chart_from_curves(read_curves_csv(in));
  } else {
    throw std::runtime_error("plot: unrecognized CSV schema in " + csv_path);
  }
  write_file(out_path, render_svg(chart));
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

/// Applies scalar flag overrides onto the (possibly empty) config document.
struct CliOverrides {
  std::optional<std::string> env;
  std::optional<double> gamma;
  std::optional<long long> steps;
  std::optional<int> replicas;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> algo;
  std::optional<std::string> out;
  std::optional<int> jobs;

  void apply(nlohmann::json& config) const {
    if (env) {
      if (config.contains("env") && config.at("env").is_object())
        config["env"]["name"] = *env;
      else
        config["env"] = *env;
    }
    if (gamma) {
      config["gamma"] = *gamma;
      config["gammas"] = {*gamma};
    }
    if (steps) config["steps"] = *steps;
    if (replicas) {
      config["replicas"] = *replicas;
      config["seeds"] = *replicas;
    }
    if (seed) config["seed"] = *seed;
    if (algo) config["algorithm"] = *algo;
    if (out) config["out"] = *out;
    if (jobs) config["jobs"] = *jobs;
  }
};

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"policy-gradient estimators, oracles, and experiments"};
  app.require_subcommand(1);

  struct SubSpec {
    CLI::App* sub = nullptr;
    std::string config_path;
    CliOverrides overrides;
  };
  std::map<std::string, SubSpec> subs;
  for (const auto& [name, desc] :
       std::initializer_list<std::pair<const char*, const char*>>{
           {"estimate", "run one gradient estimation and report its error"},
           {"sweep", "constant-baseline sweep over fractions of the average reward"},
           {"bias-variance", "relative-error curves over iteration counts"},
           {"train", "online or batch policy training"},
           {"oracle", "exact stationary distribution, gradient, and optimal baseline"}}) {
    SubSpec& spec = subs[name];
    spec.sub = app.add_subcommand(name, desc);
    spec.sub->add_option("config", spec.config_path, "JSON config file");
    spec.sub->add_option("--env", spec.overrides.env, "environment name");
    spec.sub->add_option("--gamma", spec.overrides.gamma, "discount factor");
    spec.sub->add_option("--steps", spec.overrides.steps, "steps / iterations budget");
    spec.sub->add_option("--replicas", spec.overrides.replicas, "replica or seed count");
    spec.sub->add_option("--seed", spec.overrides.seed, "base seed");
    spec.sub->add_option("--algo", spec.overrides.algo, "algorithm name");
    spec.sub->add_option("--out", spec.overrides.out, "output path");
    spec.sub->add_option("--jobs", spec.overrides.jobs, "max parallel replicas");
  }

  std::string plot_input, plot_out, plot_x = "auto";
  CLI::App* plot = app.add_subcommand("plot", "render an experiment CSV as SVG");
  plot->add_option("input", plot_input, "CSV produced by this tool")->required();
  plot->add_option("--out", plot_out, "output SVG path")->required();
  plot->add_option("--x", plot_x, "x axis: auto, b, or steps")
      ->check(CLI::IsMember({"auto", "b", "steps"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (plot->parsed()) return cmd_plot(plot_input, plot_out, plot_x);
    for (auto& [name, spec] : subs) {
      if (!spec.sub->parsed()) continue;
      nlohmann::json config =
          spec.config_path.empty() ? nlohmann::json::object() : load_config_file(spec.config_path);
      if (!config.is_object()) throw ConfigError("config file must contain a JSON object");
      spec.overrides.apply(config);
      if (name == "estimate") return cmd_estimate(config);
      if (name == "sweep") return cmd_sweep(config);
      if (name == "bias-variance") return cmd_bias_variance(config);
      if (name == "train") return cmd_train(config);
      if (name == "oracle") return cmd_oracle(config);
    }
    throw std::logic_error("no subcommand dispatched");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace polgrad
