#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "polgrad/trajectory.hpp"

namespace polgrad {

enum class BaselineMode { kNone, kConstant, kAdaptiveAverage };

inline std::string to_string(BaselineMode m) {
  switch (m) {
    case BaselineMode::kNone: return "none";
    case BaselineMode::kConstant: return "constant";
    case BaselineMode::kAdaptiveAverage: return "adaptive";
  }
  throw std::logic_error("unreachable");
}

struct EstimatorConfig {
  double gamma = 0.0;                           // discount factor in [0, 1)
  BaselineMode baseline_mode = BaselineMode::kNone;
  double baseline_b = 0.0;                      // used when mode == kConstant
  double step_size = 0.0;                       // alpha; online updates only

  void validate(bool online = false) const {
    if (!(gamma >= 0.0 && gamma < 1.0))
      throw std::invalid_argument("EstimatorConfig: gamma must lie in [0, 1)");
    if (online && !(step_size > 0.0))
      throw std::invalid_argument("EstimatorConfig: step_size must be positive for online updates");
  }
};

/// Streaming estimator state: eligibility trace Z, gradient estimate G, the
/// running average reward B, and the step counter.
struct EstimatorState {
  Eigen::VectorXd trace;     // Z
  Eigen::VectorXd estimate;  // G
  double baseline = 0.0;     // B
  long long steps = 0;       // t

  explicit EstimatorState(Eigen::Index dim)
      : trace(Eigen::VectorXd::Zero(dim)), estimate(Eigen::VectorXd::Zero(dim)) {}
};

namespace detail {
inline void check_dim(const EstimatorState& state, const Eigen::VectorXd& score) {
  if (score.size() != state.trace.size())
    throw std::invalid_argument("estimator update: score dimension mismatch");
}
}  // namespace detail

/// GPOMDP update:
///   Z_{t+1} = gamma * Z_t + zeta_{t+1}
///   G_{t+1} = G_t + (R_{t+1} * Z_{t+1} - G_t) / (t + 1)
inline void gpomdp_update(EstimatorState& state, double reward,
                          const Eigen::VectorXd& score, double gamma) {
  detail::check_dim(state, score);
  state.trace *= gamma;
  state.trace += score;
  state.steps += 1;
  state.estimate += (reward * state.trace - state.estimate) / static_cast<double>(state.steps);
}

/// GPOMDP with a fixed constant baseline b: the G update uses (R - b).
inline void constant_baseline_update(EstimatorState& state, double reward,
                                     const Eigen::VectorXd& score, double gamma, double b) {
  gpomdp_update(state, reward - b, score, gamma);
}

/// GARB update; the assignments run in this order:
///   B := B + (R_s - B) / s
///   Z := gamma * Z + zeta_s
///   G := G + ((R_s - B) * Z - G) / s
/// B is updated before it is used, so G sees the post-update baseline.
inline void garb_update(EstimatorState& state, double reward,
                        const Eigen::VectorXd& score, double gamma) {
  detail::check_dim(state, score);
  state.steps += 1;
  const double s = static_cast<double>(state.steps);
  state.baseline += (reward - state.baseline) / s;
  state.trace *= gamma;
  state.trace += score;
  state.estimate += ((reward - state.baseline) * state.trace - state.estimate) / s;
}

/// Dispatch on the configured baseline mode.
inline void estimator_update(EstimatorState& state, double reward,
                             const Eigen::VectorXd& score, const EstimatorConfig& cfg) {
  switch (cfg.baseline_mode) {
    case BaselineMode::kNone:
      gpomdp_update(state, reward, score, cfg.gamma);
      return;
    case BaselineMode::kConstant:
      constant_baseline_update(state, reward, score, cfg.gamma, cfg.baseline_b);
      return;
    case BaselineMode::kAdaptiveAverage:
      garb_update(state, reward, score, cfg.gamma);
      return;
  }
  throw std::logic_error("unreachable");
}

/// Batch evaluation of G_t = (1/t) sum_s (R_s - b) Z_s over a recorded
/// trajectory. With b = 0 this is exactly the GPOMDP estimate.
inline Eigen::VectorXd constant_baseline_estimate(std::span<const TrajectoryStep> trajectory,
                                                  double b, double gamma) {
  if (trajectory.empty())
    throw std::invalid_argument("constant_baseline_estimate: empty trajectory");
  EstimatorState state(trajectory.front().score.size());
  for (const auto& step : trajectory)
    constant_baseline_update(state, step.reward, step.score, gamma, b);
  return state.estimate;
}

/// Replays a recorded trajectory against a frozen per-step baseline sequence.
/// Feeding the baselines recorded from a streaming GARB run reproduces its
/// estimate exactly, which is how GARB is validated against the constant-
/// baseline form.
inline Eigen::VectorXd replay_estimate(std::span<const TrajectoryStep> trajectory,
                                       std::span<const double> baselines, double gamma) {
  if (trajectory.size() != baselines.size())
    throw std::invalid_argument("replay_estimate: one baseline per step required");
  if (trajectory.empty())
    throw std::invalid_argument("replay_estimate: empty trajectory");
  EstimatorState state(trajectory.front().score.size());
  for (std::size_t s = 0; s < trajectory.size(); ++s)
    constant_baseline_update(state, trajectory[s].reward, trajectory[s].score, gamma,
                             baselines[s]);
  return state.estimate;
}

/// OLPOMDP step: Z := gamma * Z + zeta, then theta += alpha * R * Z.
inline void olpomdp_step(Eigen::VectorXd& theta, Eigen::VectorXd& trace, double reward,
                         const Eigen::VectorXd& score, double alpha, double gamma) {
  if (!(alpha > 0.0)) throw std::invalid_argument("olpomdp_step: alpha must be positive");
  if (score.size() != theta.size() || trace.size() != theta.size())
    throw std::invalid_argument("olpomdp_step: dimension mismatch");
  trace *= gamma;
  trace += score;
  theta += (alpha * reward) * trace;
  if (!theta.allFinite()) throw std::runtime_error("olpomdp_step: non-finite parameter update");
}

/// OLGARB step; the assignments run in this order:
///   B := B + (R_s - B) / s        (s = steps + 1)
///   Z := gamma * Z + zeta_s
///   theta := theta + alpha * (R_s - B) * Z
/// B is updated first, so the very first step leaves theta unchanged
/// (R_1 - B equals zero once B has absorbed R_1).
inline void olgarb_step(Eigen::VectorXd& theta, Eigen::VectorXd& trace, double& baseline,
                        long long& steps, double reward, const Eigen::VectorXd& score,
                        double alpha, double gamma) {
  if (!(alpha > 0.0)) throw std::invalid_argument("olgarb_step: alpha must be positive");
  if (score.size() != theta.size() || trace.size() != theta.size())
    throw std::invalid_argument("olgarb_step: dimension mismatch");
  steps += 1;
  baseline += (reward - baseline) / static_cast<double>(steps);
  trace *= gamma;
  trace += score;
  theta += (alpha * (reward - baseline)) * trace;
  if (!theta.allFinite()) throw std::runtime_error("olgarb_step: non-finite parameter update");
}

}  // namespace polgrad
