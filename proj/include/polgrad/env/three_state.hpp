#pragma once

#include <vector>

#include <Eigen/Core>

#include "polgrad/mdp.hpp"
#include "polgrad/policy.hpp"

namespace polgrad {

/// Tabular system bundled with its policy and a start state.
struct ThreeStateSystem {
  TabularMdp mdp;
  TabularPolicy policy;
  int start_state = 0;
};

/// Default three-state, two-action benchmark system.
///
/// Action 0 pulls the chain toward state 0, action 1 toward state 2, each with
/// some stickiness and background noise; every transition entry is positive,
/// so the induced chain has a unique stationary distribution for any policy
/// parameters. Rewards are (-0.7, 0.3, 1.3): distinct per state and
/// antisymmetric about 0.3, which makes the average reward at theta = 0
/// exactly 0.3.
///
/// The shipped policy parameters lean toward action 0 in states 1 and 2,
/// away from the reward, so the gradient at the default point is strongly
/// nonzero and the average reward sits at a small positive value. All
/// quantitative experiment baselines refer to this instance's own oracle
/// values.
inline ThreeStateSystem default_three_state() {
  const std::vector<double> p = {
      // x = 0:  a = 0            a = 1
      0.92, 0.04, 0.04,   0.32, 0.04, 0.64,
      // x = 1
      0.64, 0.32, 0.04,   0.04, 0.32, 0.64,
      // x = 2
      0.64, 0.04, 0.32,   0.04, 0.04, 0.92,
  };
  Eigen::VectorXd rho(3);
  rho << -0.7, 0.3, 1.3;
  TabularMdp mdp(3, 2, p, rho);

  Eigen::VectorXd theta(6);
  theta << 0.0, 0.0, 0.3, -0.3, 0.6, -0.6;
  TabularPolicy policy(TabularFeatures{3, 2}, 2, theta);
  return {std::move(mdp), std::move(policy), 0};
}

}  // namespace polgrad
