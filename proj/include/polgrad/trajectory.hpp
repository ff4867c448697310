#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "polgrad/mdp.hpp"
#include "polgrad/policy.hpp"
#include "polgrad/rng.hpp"

namespace polgrad {

/// One step of the process X_t, A_t, R_t with the score zeta_t of the chosen
/// action. R_t = rho(X_{t+1}).
struct TrajectoryStep {
  int observation = 0;
  int action = 0;
  double reward = 0.0;
  Eigen::VectorXd score;
};

/// Samples a length-T trajectory. Pure function of (mdp, policy, start, rng
/// state): the same seed always yields the same trajectory.
template <class Features>
std::vector<TrajectoryStep> sample_trajectory(const TabularMdp& mdp,
                                              const SoftmaxPolicy<Features>& policy,
                                              int start_state, long long length,
                                              RngStream& rng) {
  if (length < 1) throw std::invalid_argument("sample_trajectory: length must be >= 1");
  if (start_state < 0 || start_state >= mdp.n_states())
    throw std::invalid_argument("sample_trajectory: start_state out of range");
  if (policy.num_actions() != mdp.n_actions())
    throw std::invalid_argument("sample_trajectory: policy/mdp action count mismatch");

  std::vector<TrajectoryStep> out(static_cast<std::size_t>(length));
  PolicyEvaluator<Features> eval(policy);
  int x = start_state;
  for (auto& step : out) {
    eval.compute(policy, x);
    const int a = eval.sample(rng);
    const int y = mdp.sample_next(x, a, rng);
    step.observation = x;
    step.action = a;
    step.reward = mdp.reward(y);
    step.score.resize(policy.param_dim());
    eval.score(a, step.score);
    x = y;
  }
  return out;
}

}  // namespace polgrad
