#pragma once

// Independent oracles used by the tests. Everything here recomputes expected
// values by a route different from the implementation under test.

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "polgrad/env/acrobot.hpp"
#include "polgrad/policy.hpp"
#include "polgrad/trajectory.hpp"

namespace testutil {

/// Direct evaluation of Z_t = sum_{s<=t} gamma^{t-s} zeta_s.
inline Eigen::VectorXd direct_trace(std::span<const polgrad::TrajectoryStep> traj,
                                    double gamma) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(traj.front().score.size());
  const auto t = static_cast<double>(traj.size());
  for (std::size_t s = 0; s < traj.size(); ++s)
    z += std::pow(gamma, t - static_cast<double>(s + 1)) * traj[s].score;
  return z;
}

/// O(t^2) evaluation of G_t = (1/t) sum_s (R_s - b) Z_s with Z_s expanded as
/// the explicit power sum. Slow but assumption-free.
inline Eigen::VectorXd naive_estimate(std::span<const polgrad::TrajectoryStep> traj, double b,
                                      double gamma) {
  const Eigen::Index dim = traj.front().score.size();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
  for (std::size_t s = 0; s < traj.size(); ++s) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(dim);
    for (std::size_t u = 0; u <= s; ++u)
      z += std::pow(gamma, static_cast<double>(s - u)) * traj[u].score;
    g += (traj[s].reward - b) * z;
  }
  return g / static_cast<double>(traj.size());
}

/// Column-sum route: t * G_t = sum_s zeta_s * T_s with the discounted reward
/// tails T_s = sum_{i>=s} (R_i - b) gamma^{i-s} accumulated backwards.
inline Eigen::VectorXd backward_estimate(std::span<const polgrad::TrajectoryStep> traj, double b,
                                         double gamma) {
  const Eigen::Index dim = traj.front().score.size();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
  double tail = 0.0;
  for (std::size_t s = traj.size(); s-- > 0;) {
    tail = (traj[s].reward - b) + gamma * tail;
    g += tail * traj[s].score;
  }
  return g / static_cast<double>(traj.size());
}

/// Central finite difference of log mu(a|x, theta) in theta.
template <class Features>
Eigen::VectorXd fd_log_policy_gradient(const polgrad::SoftmaxPolicy<Features>& policy,
                                       const typename Features::Observation& x, int action,
                                       double h = 1e-6) {
  polgrad::SoftmaxPolicy<Features> probe = policy;
  const Eigen::VectorXd theta = policy.theta();
  Eigen::VectorXd grad(theta.size());
  Eigen::VectorXd t = theta;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    t[j] = theta[j] + h;
    probe.set_theta(t);
    const double up = std::log(probe.action_distribution(x)[action]);
    t[j] = theta[j] - h;
    probe.set_theta(t);
    const double down = std::log(probe.action_distribution(x)[action]);
    t[j] = theta[j];
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

/// Total mechanical energy of the acrobot (kinetic + gravitational), written
/// from the Lagrangian rather than from the equations of motion.
inline double acrobot_energy(const polgrad::AcrobotState& s,
                             const polgrad::AcrobotParams& p = {}) {
  const double c2 = std::cos(s.q2);
  const double d1 = p.m1 * p.lc1 * p.lc1 +
                    p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2 + 2.0 * p.l1 * p.lc2 * c2) + p.i1 + p.i2;
  const double d2 = p.m2 * (p.lc2 * p.lc2 + p.l1 * p.lc2 * c2) + p.i2;
  const double m22 = p.m2 * p.lc2 * p.lc2 + p.i2;
  const double kinetic = 0.5 * (d1 * s.q1dot * s.q1dot + 2.0 * d2 * s.q1dot * s.q2dot +
                                m22 * s.q2dot * s.q2dot);
  const double y1 = -p.lc1 * std::cos(s.q1);
  const double y2 = -p.l1 * std::cos(s.q1) - p.lc2 * std::cos(s.q1 + s.q2);
  const double potential = p.gravity * (p.m1 * y1 + p.m2 * y2);
  return kinetic + potential;
}

}  // namespace testutil
