#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "polgrad/mdp.hpp"
#include "polgrad/policy.hpp"

namespace polgrad {

/// Reward distribution of one bandit arm: `mean` +/- `spread` with equal
/// probability (spread 0 gives a deterministic arm).
struct BanditArm {
  double mean = 0.0;
  double spread = 0.0;
};

struct BanditSystem {
  TabularMdp mdp;
  SoftmaxPolicy<ActionIndicatorFeatures> policy;
  int start_state = 0;
  BanditArm arm0, arm1;

  /// mu(a0) at the current parameters (state-independent by construction).
  double mu0() const { return policy.action_distribution(0)[0]; }
};

/// Two-armed bandit as a 4-state MDP. Rewards attach to successor states, so
/// each arm routes to two outcome states carrying mean -/+ spread; the policy
/// observes only the action features and is therefore blind to which outcome
/// state the chain sits in. Episodes are single steps: run estimators with
/// gamma = 0 and t = 1.
inline BanditSystem make_bandit(double mu0, BanditArm arm0, BanditArm arm1) {
  if (!(mu0 > 0.0 && mu0 < 1.0))
    throw std::invalid_argument("make_bandit: mu0 must lie strictly inside (0, 1)");
  // States 0/1: arm-0 outcomes (low/high); states 2/3: arm-1 outcomes.
  std::vector<double> p;
  p.reserve(4 * 2 * 4);
  for (int x = 0; x < 4; ++x) {
    const std::vector<double> arm0_row = {0.5, 0.5, 0.0, 0.0};
    const std::vector<double> arm1_row = {0.0, 0.0, 0.5, 0.5};
    p.insert(p.end(), arm0_row.begin(), arm0_row.end());
    p.insert(p.end(), arm1_row.begin(), arm1_row.end());
  }
  Eigen::VectorXd rho(4);
  rho << arm0.mean - arm0.spread, arm0.mean + arm0.spread,
         arm1.mean - arm1.spread, arm1.mean + arm1.spread;
  TabularMdp mdp(4, 2, std::move(p), std::move(rho));

  Eigen::VectorXd theta(2);
  theta << std::log(mu0), std::log(1.0 - mu0);
  SoftmaxPolicy<ActionIndicatorFeatures> policy(ActionIndicatorFeatures{2}, 2, theta);
  return {std::move(mdp), std::move(policy), 0, arm0, arm1};
}

}  // namespace polgrad
