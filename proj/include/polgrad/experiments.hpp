#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "polgrad/estimators.hpp"
#include "polgrad/mdp.hpp"
#include "polgrad/oracle.hpp"
#include "polgrad/policy.hpp"
#include "polgrad/rng.hpp"

namespace polgrad {

/// Runs fn(0..n-1) across at most `jobs` threads. Callers index results by k,
/// so the outcome is identical for any job count.
template <class Fn>
void run_parallel(int n, int jobs, Fn&& fn) {
  jobs = std::clamp(jobs, 1, std::max(1, n));
  if (jobs == 1) {
    for (int k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(jobs));
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const int k = next.fetch_add(1);
        if (k >= n) return;
        try {
          fn(k);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(err_mutex);
          if (!err) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (err) std::rethrow_exception(err);
}

/// Aggregated relative-error statistics for one estimator configuration.
struct SweepRecord {
  std::string algorithm;
  double gamma = 0.0;
  BaselineMode baseline_mode = BaselineMode::kNone;
  double baseline_b = 0.0;     // constant-baseline value when mode == kConstant
  double b_over_rbar = std::numeric_limits<double>::quiet_NaN();
  long long steps = 0;
  int replicas = 0;
  double mean_rel_error = 0.0;
  double std_rel_error = 0.0;  // sample standard deviation (n - 1)
};

/// Windowed-average-reward curve of one training run.
struct TrainingCurve {
  std::string algorithm;
  std::uint64_t seed = 0;  // replica index within the experiment
  std::vector<std::pair<long long, double>> points;
  bool diverged = false;
  long long diverged_at = 0;
  int zero_gradient_iterations = 0;  // batch ascent only
};

namespace detail {

/// Per-state action distributions and scores for a fixed tabular policy.
template <class Features>
struct FrozenPolicyTables {
  std::vector<Eigen::VectorXd> mu;
  std::vector<std::vector<Eigen::VectorXd>> zeta;

  FrozenPolicyTables(const TabularMdp& mdp, const SoftmaxPolicy<Features>& policy) {
    const int ns = mdp.n_states();
    const int na = mdp.n_actions();
    mu.resize(ns);
    zeta.resize(ns);
    for (int x = 0; x < ns; ++x) {
      mu[x] = policy.action_distribution(x);
      zeta[x].resize(na);
      for (int a = 0; a < na; ++a) zeta[x][a] = policy.score(x, a);
    }
  }
};

inline std::pair<double, double> mean_and_sample_std(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = xs.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var)};
}

}  // namespace detail

/// Log-spaced checkpoints 10^2, 10^2.5, ... clipped to t_max (always ending
/// at t_max itself).
inline std::vector<long long> default_checkpoints(long long t_max) {
  std::vector<long long> out;
  for (double e = 2.0;; e += 0.5) {
    const auto t = static_cast<long long>(std::llround(std::pow(10.0, e)));
    if (t > t_max) break;
    out.push_back(t);
  }
  if (out.empty() || out.back() != t_max) out.push_back(t_max);
  return out;
}

struct BiasVarianceParams {
  std::vector<std::string> algorithms = {"gpomdp", "garb"};
  std::vector<double> gammas = {0.4, 0.99};
  long long t_max = 10'000;
  int replicas = 300;
  std::uint64_t base_seed = 0;
  std::vector<long long> checkpoints;  // default_checkpoints(t_max) when empty
  int jobs = 1;
};

inline BaselineMode algorithm_baseline_mode(const std::string& algorithm) {
  if (algorithm == "gpomdp") return BaselineMode::kNone;
  if (algorithm == "garb") return BaselineMode::kAdaptiveAverage;
  throw std::invalid_argument("unknown estimation algorithm: " + algorithm);
}

/// Relative error of streaming gradient estimates against the exact gradient,
/// tracked over log-spaced checkpoints. Replica k draws its trajectory from
/// stream (base_seed, k); every (algorithm, gamma) pair consumes the same
/// trajectory, so algorithm comparisons are paired.
template <class Features>
std::vector<SweepRecord> bias_variance_experiment(const TabularMdp& mdp,
                                                  const SoftmaxPolicy<Features>& policy,
                                                  int start_state,
                                                  const BiasVarianceParams& params) {
  if (params.replicas < 2)
    throw std::invalid_argument("bias_variance_experiment: need at least 2 replicas");
  const std::vector<long long> checkpoints =
      params.checkpoints.empty() ? default_checkpoints(params.t_max) : params.checkpoints;
  for (std::size_t i = 1; i < checkpoints.size(); ++i)
    if (checkpoints[i] <= checkpoints[i - 1])
      throw std::invalid_argument("bias_variance_experiment: checkpoints must increase");
  if (checkpoints.back() > params.t_max)
    throw std::invalid_argument("bias_variance_experiment: checkpoint beyond t_max");

  const Eigen::VectorXd grad = exact_gradient(mdp, policy);
  const detail::FrozenPolicyTables<Features> tables(mdp, policy);

  struct Combo {
    std::string algorithm;
    double gamma;
  };
  std::vector<Combo> combos;
  for (const auto& algo : params.algorithms) {
    (void)algorithm_baseline_mode(algo);  // validate early
    for (double gamma : params.gammas) combos.push_back({algo, gamma});
  }

  // errors[k][combo][checkpoint]
  std::vector<std::vector<std::vector<double>>> errors(
      static_cast<std::size_t>(params.replicas),
      std::vector<std::vector<double>>(combos.size(),
                                       std::vector<double>(checkpoints.size())));

  run_parallel(params.replicas, params.jobs, [&](int k) {
    RngStream rng = RngStream::replica(params.base_seed, static_cast<std::uint64_t>(k));
    std::vector<EstimatorState> states;
    std::vector<EstimatorConfig> cfgs;
    for (const auto& combo : combos) {
      states.emplace_back(policy.param_dim());
      cfgs.push_back({combo.gamma, algorithm_baseline_mode(combo.algorithm), 0.0, 0.0});
    }
    int x = start_state;
    std::size_t next_cp = 0;
    for (long long t = 1; t <= checkpoints.back(); ++t) {
      const int a = rng.categorical(
          {tables.mu[x].data(), static_cast<std::size_t>(tables.mu[x].size())});
      const int y = mdp.sample_next(x, a, rng);
      const double reward = mdp.reward(y);
      const Eigen::VectorXd& zeta = tables.zeta[x][a];
      for (std::size_t c = 0; c < combos.size(); ++c)
        estimator_update(states[c], reward, zeta, cfgs[c]);
      x = y;
      if (t == checkpoints[next_cp]) {
        for (std::size_t c = 0; c < combos.size(); ++c)
          errors[static_cast<std::size_t>(k)][c][next_cp] =
              relative_error(states[c].estimate, grad);
        ++next_cp;
      }
    }
  });

  std::vector<SweepRecord> records;
  for (std::size_t c = 0; c < combos.size(); ++c) {
    for (std::size_t cp = 0; cp < checkpoints.size(); ++cp) {
      std::vector<double> errs(static_cast<std::size_t>(params.replicas));
      for (int k = 0; k < params.replicas; ++k)
        errs[static_cast<std::size_t>(k)] = errors[static_cast<std::size_t>(k)][c][cp];
      const auto [mean, sd] = detail::mean_and_sample_std(errs);
      SweepRecord rec;
      rec.algorithm = combos[c].algorithm;
      rec.gamma = combos[c].gamma;
      rec.baseline_mode = algorithm_baseline_mode(combos[c].algorithm);
      rec.steps = checkpoints[cp];
      rec.replicas = params.replicas;
      rec.mean_rel_error = mean;
      rec.std_rel_error = sd;
      records.push_back(std::move(rec));
    }
  }
  return records;
}

struct BaselineSweepParams {
  std::vector<double> gammas = {0.4, 0.8, 0.95, 0.99};
  double grid_lo = 0.1;   // fractions of rbar
  double grid_hi = 1.4;
  int grid_points = 14;
  long long steps = 100;
  int replicas = 300;
  std::uint64_t base_seed = 0;
  int jobs = 1;
};

/// Constant-baseline sweep over a grid of fractions of the average reward.
/// Each (gamma, b) pair sees the same per-replica trajectories, so the
/// std-vs-b curves are smooth in b and the reported minimizers are stable.
template <class Features>
std::vector<SweepRecord> baseline_sweep(const TabularMdp& mdp,
                                        const SoftmaxPolicy<Features>& policy, int start_state,
                                        const BaselineSweepParams& params) {
  if (params.replicas < 2)
    throw std::invalid_argument("baseline_sweep: need at least 2 replicas");
  if (params.grid_points < 1)
    throw std::invalid_argument("baseline_sweep: need at least one grid point");
  if (params.steps < 1) throw std::invalid_argument("baseline_sweep: steps must be >= 1");

  const Eigen::VectorXd grad = exact_gradient(mdp, policy);
  const double rbar = average_reward(mdp, policy);
  if (!(rbar > 0.0))
    throw std::runtime_error("baseline_sweep: the average reward must be positive to express "
                             "baselines as fractions of it");

  std::vector<double> fracs(static_cast<std::size_t>(params.grid_points));
  for (int i = 0; i < params.grid_points; ++i)
    fracs[static_cast<std::size_t>(i)] =
        params.grid_points == 1
            ? params.grid_lo
            : params.grid_lo + (params.grid_hi - params.grid_lo) * i / (params.grid_points - 1);

  const detail::FrozenPolicyTables<Features> tables(mdp, policy);
  const std::size_t n_combo = params.gammas.size() * fracs.size();

  // errors[k][gamma * fracs + frac]
  std::vector<std::vector<double>> errors(static_cast<std::size_t>(params.replicas),
                                          std::vector<double>(n_combo));

  run_parallel(params.replicas, params.jobs, [&](int k) {
    RngStream rng = RngStream::replica(params.base_seed, static_cast<std::uint64_t>(k));
    // Record the trajectory once, then evaluate every combination on it.
    std::vector<int> xs(static_cast<std::size_t>(params.steps));
    std::vector<int> as(static_cast<std::size_t>(params.steps));
    std::vector<double> rs(static_cast<std::size_t>(params.steps));
    int x = start_state;
    for (long long t = 0; t < params.steps; ++t) {
      const int a = rng.categorical(
          {tables.mu[x].data(), static_cast<std::size_t>(tables.mu[x].size())});
      const int y = mdp.sample_next(x, a, rng);
      xs[static_cast<std::size_t>(t)] = x;
      as[static_cast<std::size_t>(t)] = a;
      rs[static_cast<std::size_t>(t)] = mdp.reward(y);
      x = y;
    }
    const Eigen::Index dim = policy.param_dim();
    for (std::size_t gi = 0; gi < params.gammas.size(); ++gi) {
      const double gamma = params.gammas[gi];
      // G(b) is affine in b: G = U - b * W with U the zero-baseline estimate
      // and W the running mean of the trace.
      Eigen::VectorXd z = Eigen::VectorXd::Zero(dim);
      Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
      Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
      for (long long t = 0; t < params.steps; ++t) {
        const auto idx = static_cast<std::size_t>(t);
        z *= gamma;
        z += tables.zeta[xs[idx]][as[idx]];
        const double inv = 1.0 / static_cast<double>(t + 1);
        u += (rs[idx] * z - u) * inv;
        w += (z - w) * inv;
      }
      for (std::size_t fi = 0; fi < fracs.size(); ++fi) {
        const double b = fracs[fi] * rbar;
        errors[static_cast<std::size_t>(k)][gi * fracs.size() + fi] =
            relative_error(u - b * w, grad);
      }
    }
  });

  std::vector<SweepRecord> records;
  for (std::size_t gi = 0; gi < params.gammas.size(); ++gi) {
    for (std::size_t fi = 0; fi < fracs.size(); ++fi) {
      std::vector<double> errs(static_cast<std::size_t>(params.replicas));
      for (int k = 0; k < params.replicas; ++k)
        errs[static_cast<std::size_t>(k)] =
            errors[static_cast<std::size_t>(k)][gi * fracs.size() + fi];
      const auto [mean, sd] = detail::mean_and_sample_std(errs);
      SweepRecord rec;
      rec.algorithm = "constant";
      rec.gamma = params.gammas[gi];
      rec.baseline_mode = BaselineMode::kConstant;
      rec.baseline_b = fracs[fi] * rbar;
      rec.b_over_rbar = fracs[fi];
      rec.steps = params.steps;
      rec.replicas = params.replicas;
      rec.mean_rel_error = mean;
      rec.std_rel_error = sd;
      records.push_back(std::move(rec));
    }
  }
  return records;
}

/// b/rbar of the std-minimizing record at a given gamma.
inline double sweep_std_minimizer(const std::vector<SweepRecord>& records, double gamma) {
  const SweepRecord* best = nullptr;
  for (const auto& r : records) {
    if (r.gamma != gamma || r.baseline_mode != BaselineMode::kConstant) continue;
    if (!best || r.std_rel_error < best->std_rel_error) best = &r;
  }
  if (!best) throw std::invalid_argument("sweep_std_minimizer: no records at requested gamma");
  return best->b_over_rbar;
}

/// Tabular MDP adapted to the simulation-environment interface used by the
/// online trainers.
class TabularEnv {
 public:
  using Observation = int;

  TabularEnv(TabularMdp mdp, int start_state)
      : mdp_(std::move(mdp)), start_state_(start_state), state_(start_state) {}

  int num_actions() const { return mdp_.n_actions(); }
  void reset(RngStream& /*rng*/) { state_ = start_state_; }
  const Observation& observe() const { return state_; }
  double step(int action, RngStream& rng) {
    const int y = mdp_.sample_next(state_, action, rng);
    state_ = y;
    return mdp_.reward(y);
  }

 private:
  TabularMdp mdp_;
  int start_state_;
  int state_ = 0;
};

struct TrainOnlineParams {
  std::string algorithm = "olgarb";  // "olpomdp" or "olgarb"
  double alpha = 0.01;
  double gamma = 0.99;
  long long steps = 2'000'000;
  int num_seeds = 20;
  std::uint64_t base_seed = 0;
  double theta_init_halfwidth = 0.5;
  long long window = 10'000;
  int jobs = 1;
};

/// Online policy-gradient training; one curve per seed, each point the mean
/// reward over the trailing window. A run whose parameters stop being finite
/// is cut short and flagged instead of aborting the experiment.
template <class Env, class Features>
std::vector<TrainingCurve> train_online(const Env& env_proto,
                                        const SoftmaxPolicy<Features>& policy_proto,
                                        const TrainOnlineParams& params) {
  const bool use_baseline = [&] {
    if (params.algorithm == "olpomdp") return false;
    if (params.algorithm == "olgarb") return true;
    throw std::invalid_argument("train_online: unknown algorithm " + params.algorithm);
  }();
  if (!(params.alpha >= 0.0)) throw std::invalid_argument("train_online: alpha must be >= 0");
  if (params.steps < 1) throw std::invalid_argument("train_online: steps must be >= 1");
  if (params.window < 1) throw std::invalid_argument("train_online: window must be >= 1");

  std::vector<TrainingCurve> curves(static_cast<std::size_t>(params.num_seeds));
  run_parallel(params.num_seeds, params.jobs, [&](int k) {
    TrainingCurve& curve = curves[static_cast<std::size_t>(k)];
    curve.algorithm = params.algorithm;
    curve.seed = static_cast<std::uint64_t>(k);

    RngStream rng = RngStream::replica(params.base_seed, static_cast<std::uint64_t>(k));
    Env env = env_proto;
    env.reset(rng);
    SoftmaxPolicy<Features> policy = policy_proto;
    {
      Eigen::VectorXd theta(policy.param_dim());
      for (Eigen::Index j = 0; j < theta.size(); ++j)
        theta[j] = rng.uniform(-params.theta_init_halfwidth, params.theta_init_halfwidth);
      policy.set_theta(std::move(theta));
    }
    PolicyEvaluator<Features> eval(policy);
    Eigen::VectorXd trace = Eigen::VectorXd::Zero(policy.param_dim());
    Eigen::VectorXd zeta(policy.param_dim());
    double baseline = 0.0;
    long long baseline_steps = 0;
    double window_sum = 0.0;
    for (long long t = 1; t <= params.steps; ++t) {
      try {
        eval.compute(policy, env.observe());
        const int a = eval.sample(rng);
        const double reward = env.step(a, rng);
        eval.score(a, zeta);
        if (params.alpha == 0.0) {
          // Frozen-policy run: still tracks the reward curve.
        } else if (use_baseline) {
          olgarb_step(policy.mutable_theta(), trace, baseline, baseline_steps, reward, zeta,
                      params.alpha, params.gamma);
        } else {
          olpomdp_step(policy.mutable_theta(), trace, reward, zeta, params.alpha, params.gamma);
        }
        window_sum += reward;
      } catch (const std::exception&) {
        curve.diverged = true;
        curve.diverged_at = t;
        break;
      }
      if (t % params.window == 0) {
        curve.points.emplace_back(t, window_sum / static_cast<double>(params.window));
        window_sum = 0.0;
      }
    }
  });
  return curves;
}

struct TrainBatchParams {
  std::string estimator = "garb";  // "gpomdp" or "garb"
  double alpha = 1.0;              // ascent step along the normalized estimate
  double gamma = 0.95;
  long long steps_per_estimate = 10'000;
  int iterations = 50;
  int num_seeds = 10;
  std::uint64_t base_seed = 0;
  double theta_init_halfwidth = 0.5;
  int jobs = 1;
};

/// Batch gradient ascent: alternates a fresh gradient estimate over a window
/// of simulation with the update theta += alpha * G / ||G||. The environment
/// runs continuously across iterations. Iterations with a vanishing estimate
/// leave theta unchanged and are counted on the curve.
template <class Env, class Features>
std::vector<TrainingCurve> train_batch_ascent(const Env& env_proto,
                                              const SoftmaxPolicy<Features>& policy_proto,
                                              const TrainBatchParams& params) {
  const EstimatorConfig cfg{params.gamma, algorithm_baseline_mode(params.estimator), 0.0, 0.0};
  cfg.validate();
  if (params.steps_per_estimate < 1)
    throw std::invalid_argument("train_batch_ascent: steps_per_estimate must be >= 1");
  if (params.iterations < 0)
    throw std::invalid_argument("train_batch_ascent: iterations must be >= 0");

  std::vector<TrainingCurve> curves(static_cast<std::size_t>(params.num_seeds));
  run_parallel(params.num_seeds, params.jobs, [&](int k) {
    TrainingCurve& curve = curves[static_cast<std::size_t>(k)];
    curve.algorithm = params.estimator;
    curve.seed = static_cast<std::uint64_t>(k);

    RngStream rng = RngStream::replica(params.base_seed, static_cast<std::uint64_t>(k));
    Env env = env_proto;
    env.reset(rng);
    SoftmaxPolicy<Features> policy = policy_proto;
    {
      Eigen::VectorXd theta(policy.param_dim());
      for (Eigen::Index j = 0; j < theta.size(); ++j)
        theta[j] = rng.uniform(-params.theta_init_halfwidth, params.theta_init_halfwidth);
      policy.set_theta(std::move(theta));
    }
    PolicyEvaluator<Features> eval(policy);
    Eigen::VectorXd zeta(policy.param_dim());
    for (int it = 0; it < params.iterations; ++it) {
      EstimatorState state(policy.param_dim());
      double reward_sum = 0.0;
      try {
        for (long long t = 0; t < params.steps_per_estimate; ++t) {
          eval.compute(policy, env.observe());
          const int a = eval.sample(rng);
          const double reward = env.step(a, rng);
          eval.score(a, zeta);
          estimator_update(state, reward, zeta, cfg);
          reward_sum += reward;
        }
        const double norm = state.estimate.norm();
        if (norm > 0.0) {
          policy.mutable_theta() += (params.alpha / norm) * state.estimate;
        } else {
          ++curve.zero_gradient_iterations;
        }
        if (!policy.theta().allFinite())
          throw std::runtime_error("train_batch_ascent: non-finite parameters");
      } catch (const std::exception&) {
        curve.diverged = true;
        curve.diverged_at = static_cast<long long>(it + 1) * params.steps_per_estimate;
        break;
      }
      curve.points.emplace_back(static_cast<long long>(it + 1) * params.steps_per_estimate,
                                reward_sum / static_cast<double>(params.steps_per_estimate));
    }
  });
  return curves;
}

/// Pointwise mean and sample std across curves with identical step grids.
struct CurveStat {
  long long step = 0;
  double mean = 0.0;
  double std = 0.0;
};

inline std::vector<CurveStat> aggregate_stats(const std::vector<TrainingCurve>& curves) {
  if (curves.size() < 2)
    throw std::invalid_argument("aggregate_stats: need at least 2 curves");
  const auto& ref = curves.front().points;
  for (const auto& c : curves) {
    if (c.points.size() != ref.size())
      throw std::invalid_argument("aggregate_stats: curves have different lengths");
    for (std::size_t i = 0; i < ref.size(); ++i)
      if (c.points[i].first != ref[i].first)
        throw std::invalid_argument("aggregate_stats: curve steps are misaligned");
  }
  std::vector<CurveStat> out(ref.size());
  std::vector<double> vals(curves.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    for (std::size_t c = 0; c < curves.size(); ++c) vals[c] = curves[c].points[i].second;
    const auto [mean, sd] = detail::mean_and_sample_std(vals);
    out[i] = {ref[i].first, mean, sd};
  }
  return out;
}

}  // namespace polgrad
