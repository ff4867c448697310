#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polgrad/mdp.hpp"
#include "polgrad/policy.hpp"
#include "polgrad/trajectory.hpp"

namespace polgrad {

/// Policy-induced state chain P_theta[x][y] = sum_a mu(a|x) P[x][a][y].
template <class Features>
Eigen::MatrixXd policy_transition_matrix(const TabularMdp& mdp,
                                         const SoftmaxPolicy<Features>& policy) {
  const int ns = mdp.n_states();
  const int na = mdp.n_actions();
  Eigen::MatrixXd pt = Eigen::MatrixXd::Zero(ns, ns);
  for (int x = 0; x < ns; ++x) {
    const Eigen::VectorXd mu = policy.action_distribution(x);
    for (int a = 0; a < na; ++a)
      for (int y = 0; y < ns; ++y) pt(x, y) += mu[a] * mdp.transition(x, a, y);
  }
  return pt;
}

/// Stationary distribution of an n-state chain, via a dense least-squares
/// solve of (P^T - I) pi = 0 with the normalization row sum(pi) = 1 appended.
/// Requires a unique stationary distribution (single recurrent class); the
/// rank of P^T - I must be n - 1 and the fixed-point residual must close.
inline Eigen::VectorXd stationary_of_chain(const Eigen::MatrixXd& pt) {
  const Eigen::Index n = pt.rows();
  Eigen::MatrixXd a(n + 1, n);
  a.topRows(n) = pt.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.bottomRows(1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  rhs[n] = 1.0;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a.topRows(n));
  qr.setThreshold(1e-9);
  if (qr.rank() < n - 1)
    throw std::runtime_error(
        "stationary_distribution: chain is reducible (multiple recurrent classes); "
        "a unique stationary distribution is assumed");

  Eigen::VectorXd pi = a.colPivHouseholderQr().solve(rhs);

  constexpr double kTol = 1e-10;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pi[i] < -1e-12)
      throw std::runtime_error("stationary_distribution: negative mass; solve failed");
    if (pi[i] < 0.0) pi[i] = 0.0;
  }
  pi /= pi.sum();
  const double residual = (pt.transpose() * pi - pi).cwiseAbs().maxCoeff();
  if (!(residual <= kTol))
    throw std::runtime_error(
        "stationary_distribution: fixed-point residual " + std::to_string(residual) +
        " exceeds tolerance; the unique-stationary-distribution assumption is violated");
  return pi;
}

template <class Features>
Eigen::VectorXd stationary_distribution(const TabularMdp& mdp,
                                        const SoftmaxPolicy<Features>& policy) {
  return stationary_of_chain(policy_transition_matrix(mdp, policy));
}

/// Power-iteration route to the same fixed point; kept as an independent
/// cross-check of the linear solve.
inline Eigen::VectorXd stationary_by_power_iteration(const Eigen::MatrixXd& pt,
                                                     int max_iters = 200000,
                                                     double tol = 1e-13) {
  const Eigen::Index n = pt.rows();
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd next(n);
  for (int it = 0; it < max_iters; ++it) {
    next.noalias() = pt.transpose() * pi;
    next /= next.sum();
    const double delta = (next - pi).cwiseAbs().maxCoeff();
    pi = next;
    if (delta <= tol) return pi;
  }
  throw std::runtime_error("stationary_by_power_iteration: no convergence (periodic chain?)");
}

/// Long-term average reward r_bar = pi . rho.
template <class Features>
double average_reward(const TabularMdp& mdp, const SoftmaxPolicy<Features>& policy) {
  return stationary_distribution(mdp, policy).dot(mdp.rewards());
}

/// Central finite-difference gradient of r_bar(theta); truncation error O(h^2).
template <class Features>
Eigen::VectorXd exact_gradient(const TabularMdp& mdp, SoftmaxPolicy<Features> policy,
                               double h = 1e-6) {
  if (!(h > 0.0)) throw std::invalid_argument("exact_gradient: h must be positive");
  const Eigen::VectorXd theta = policy.theta();
  Eigen::VectorXd grad(theta.size());
  Eigen::VectorXd probe = theta;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    probe[j] = theta[j] + h;
    policy.set_theta(probe);
    const double up = average_reward(mdp, policy);
    probe[j] = theta[j] - h;
    policy.set_theta(probe);
    const double down = average_reward(mdp, policy);
    probe[j] = theta[j];
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

/// Exact oracle bundle for a tabular system.
struct OracleResult {
  Eigen::VectorXd stationary;
  double average_reward = 0.0;
  Eigen::VectorXd gradient;
};

template <class Features>
OracleResult compute_oracle(const TabularMdp& mdp, const SoftmaxPolicy<Features>& policy,
                            double fd_step = 1e-6) {
  OracleResult out;
  out.stationary = stationary_distribution(mdp, policy);
  out.average_reward = out.stationary.dot(mdp.rewards());
  out.gradient = exact_gradient(mdp, policy, fd_step);
  return out;
}

/// Variance-minimizing baseline for a binary immediate-reward problem:
/// b* = mu(a0) E[r|a1] + mu(a1) E[r|a0]. The cross-weighting is what
/// distinguishes it from the plain expected reward.
inline double dayan_optimal_baseline(double mu0, double r0, double r1) {
  if (!(mu0 > 0.0 && mu0 < 1.0))
    throw std::invalid_argument(
        "dayan_optimal_baseline: mu0 must lie strictly inside (0, 1); the score of an "
        "impossible action is undefined");
  return mu0 * r1 + (1.0 - mu0) * r0;
}

/// Relative error ||estimate - truth|| / ||truth||.
inline double relative_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  const double denom = truth.norm();
  if (!(denom > 0.0))
    throw std::invalid_argument("relative_error: truth vector must be nonzero");
  if (estimate.size() != truth.size())
    throw std::invalid_argument("relative_error: dimension mismatch");
  return (estimate - truth).norm() / denom;
}

/// Visits every length-`horizon` trajectory with its exact probability.
/// The visitor receives (probability, steps); the step buffer is reused
/// between calls. Start states are drawn from `start`: either a single state
/// index or a distribution over states.
template <class Features, class Visitor>
void enumerate_trajectories(const TabularMdp& mdp, const SoftmaxPolicy<Features>& policy,
                            const Eigen::VectorXd& start, int horizon, Visitor&& visit) {
  if (horizon < 1) throw std::invalid_argument("enumerate_trajectories: horizon must be >= 1");
  const int ns = mdp.n_states();
  const int na = mdp.n_actions();
  if (start.size() != ns)
    throw std::invalid_argument("enumerate_trajectories: start distribution has wrong size");
  const double branches = std::pow(static_cast<double>(ns) * na, horizon) * ns;
  if (branches > 2e7)
    throw std::invalid_argument("enumerate_trajectories: state-action trajectory count exceeds "
                                "the exact-enumeration bound");

  // Per-state action distributions and scores are policy constants.
  std::vector<Eigen::VectorXd> mu(ns);
  std::vector<std::vector<Eigen::VectorXd>> zeta(ns);
  for (int x = 0; x < ns; ++x) {
    mu[x] = policy.action_distribution(x);
    zeta[x].resize(na);
    for (int a = 0; a < na; ++a) zeta[x][a] = policy.score(x, a);
  }

  std::vector<TrajectoryStep> steps(static_cast<std::size_t>(horizon));
  std::function<void(int, int, double)> rec = [&](int depth, int x, double prob) {
    if (prob == 0.0) return;
    if (depth == horizon) {
      visit(prob, steps);
      return;
    }
    auto& step = steps[static_cast<std::size_t>(depth)];
    for (int a = 0; a < na; ++a) {
      const double pa = mu[x][a];
      if (pa == 0.0) continue;
      for (int y = 0; y < ns; ++y) {
        const double py = mdp.transition(x, a, y);
        if (py == 0.0) continue;
        step.observation = x;
        step.action = a;
        step.reward = mdp.reward(y);
        step.score = zeta[x][a];
        rec(depth + 1, y, prob * pa * py);
      }
    }
  };
  for (int x0 = 0; x0 < ns; ++x0)
    if (start[x0] > 0.0) rec(0, x0, start[x0]);
}

template <class Features, class Visitor>
void enumerate_trajectories(const TabularMdp& mdp, const SoftmaxPolicy<Features>& policy,
                            int start_state, int horizon, Visitor&& visit) {
  Eigen::VectorXd start = Eigen::VectorXd::Zero(mdp.n_states());
  start[start_state] = 1.0;
  enumerate_trajectories(mdp, policy, start, horizon,
                         std::forward<Visitor>(visit));
}

/// Variance-minimizing constant baseline from the optimality criterion
///   0 = E[zeta_s^2 * sum_{i=s}^t (b* - R_i) gamma^{i-s}],
/// solved as the ratio
///   b* = E[zeta_s^2 sum_i R_i gamma^{i-s}] / E[zeta_s^2 sum_i gamma^{i-s}].
///
/// zeta_s^2 is taken component-wise, giving one b* per parameter; an
/// aggregate weighted by ||zeta_s||^2 is also reported. The chain starts from
/// the stationary distribution, so the result does not depend on the step
/// index s beyond the remaining horizon t - s + 1.
///
/// The expectations factor over the Markov chain: conditioned on (X_s, A_s),
/// the discounted reward sum has a closed recursive form, so they are
/// evaluated exactly by dynamic programming over the horizon instead of by
/// materializing every trajectory. Components with E[zeta_j^2] = 0 (locally
/// deterministic policy directions) are reported as NaN.
struct OptimalBaselineResult {
  Eigen::VectorXd per_param;  // NaN where E[zeta_j^2] vanishes
  double aggregate = 0.0;
  double gamma = 0.0;
  std::optional<long long> horizon;  // nullopt = infinite horizon
};

template <class Features>
OptimalBaselineResult optimal_constant_baseline(const TabularMdp& mdp,
                                                const SoftmaxPolicy<Features>& policy,
                                                double gamma, long long s,
                                                std::optional<long long> horizon) {
  if (s < 1) throw std::invalid_argument("optimal_constant_baseline: step index s must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("optimal_constant_baseline: gamma must lie in [0, 1)");
  std::optional<long long> remaining;
  if (horizon) {
    if (*horizon < s)
      throw std::invalid_argument("optimal_constant_baseline: horizon must be >= s");
    remaining = *horizon - s + 1;
  }

  const int ns = mdp.n_states();
  const int na = mdp.n_actions();
  const Eigen::MatrixXd pt = policy_transition_matrix(mdp, policy);
  const Eigen::VectorXd pi = stationary_of_chain(pt);
  const Eigen::VectorXd& rho = mdp.rewards();

  // w(x) = E[sum_{i=1}^k gamma^{i-1} R_i | X_1 = x]; k = remaining horizon.
  Eigen::VectorXd w;
  double geo = 0.0;
  if (remaining) {
    const long long k = *remaining;
    w = Eigen::VectorXd::Zero(ns);
    for (long long i = 0; i < k - 1; ++i) w = pt * (rho + gamma * w);
    geo = gamma == 0.0 ? 1.0
                       : (1.0 - std::pow(gamma, static_cast<double>(k))) / (1.0 - gamma);
  } else {
    // Infinite horizon: w = (I - gamma P)^{-1} P rho.
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(ns, ns) - gamma * pt;
    w = a.colPivHouseholderQr().solve(pt * rho);
    geo = 1.0 / (1.0 - gamma);
  }

  const Eigen::Index dim = policy.param_dim();
  Eigen::VectorXd num = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(dim);
  double num_agg = 0.0;
  double den_agg = 0.0;
  for (int x = 0; x < ns; ++x) {
    const Eigen::VectorXd mu = policy.action_distribution(x);
    for (int a = 0; a < na; ++a) {
      if (mu[a] == 0.0) continue;
      // E[sum_i gamma^{i-1} R_i | X_1 = x, A_1 = a]
      double cond = 0.0;
      for (int y = 0; y < ns; ++y)
        cond += mdp.transition(x, a, y) * (rho[y] + gamma * w[y]);
      const double weight = pi[x] * mu[a];
      const Eigen::VectorXd zeta = policy.score(x, a);
      const Eigen::ArrayXd z2 = zeta.array().square();
      num.array() += weight * z2 * cond;
      den.array() += weight * z2 * geo;
      const double n2 = zeta.squaredNorm();
      num_agg += weight * n2 * cond;
      den_agg += weight * n2 * geo;
    }
  }

  OptimalBaselineResult out;
  out.gamma = gamma;
  out.horizon = horizon;
  out.per_param.resize(dim);
  for (Eigen::Index j = 0; j < dim; ++j)
    out.per_param[j] = den[j] > 0.0 ? num[j] / den[j]
                                    : std::numeric_limits<double>::quiet_NaN();
  if (!(den_agg > 0.0))
    throw std::runtime_error("optimal_constant_baseline: E[||zeta||^2] vanishes; the policy is "
                             "deterministic everywhere");
  out.aggregate = num_agg / den_agg;
  return out;
}

}  // namespace polgrad
