#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include <Eigen/Core>

#include "polgrad/rng.hpp"

namespace polgrad {

// Feature maps supply phi(x, a) columns for the softmax policy. Each map
// defines an Observation type, the parameter dimension, and a writer that
// fills a preallocated column.

/// One-hot feature per (state, action) pair; index = x * n_actions + a.
struct TabularFeatures {
  using Observation = int;
  int n_states = 0;
  int n_actions = 0;

  int dim() const { return n_states * n_actions; }
  void write(int x, int a, Eigen::Ref<Eigen::VectorXd> out) const {
    out.setZero();
    out[x * n_actions + a] = 1.0;
  }
};

/// One-hot feature on the action only; the observation is ignored. Gives a
/// state-blind policy (the same action distribution everywhere), which is the
/// immediate-reward setting.
struct ActionIndicatorFeatures {
  using Observation = int;
  int n_actions = 0;

  int dim() const { return n_actions; }
  void write(int /*x*/, int a, Eigen::Ref<Eigen::VectorXd> out) const {
    out.setZero();
    out[a] = 1.0;
  }
};

/// Dense state-feature vector copied into a per-action block:
/// phi(x, a) has f(x) in block a and zeros elsewhere. theta dimension is
/// n_actions * state_dim.
struct BlockActionFeatures {
  using Observation = Eigen::VectorXd;
  int n_actions = 0;
  int state_dim = 0;

  int dim() const { return n_actions * state_dim; }
  void write(const Eigen::VectorXd& f, int a, Eigen::Ref<Eigen::VectorXd> out) const {
    out.setZero();
    out.segment(static_cast<Eigen::Index>(a) * state_dim, state_dim) = f;
  }
};

/// Softmax (Gibbs) policy mu(a|x, theta) = exp(theta . phi(x,a)) / sum_a' exp(...).
///
/// Logits are shifted by their maximum before exponentiation so that large
/// parameter values cannot overflow; the shift leaves mu unchanged.
template <class Features>
class SoftmaxPolicy {
 public:
  using Observation = typename Features::Observation;

  SoftmaxPolicy(Features features, int n_actions, Eigen::VectorXd theta)
      : features_(std::move(features)), n_actions_(n_actions), theta_(std::move(theta)) {
    if (n_actions_ < 1) throw std::invalid_argument("SoftmaxPolicy: need at least one action");
    if (theta_.size() != features_.dim())
      throw std::invalid_argument("SoftmaxPolicy: theta dimension does not match feature map");
  }

  int num_actions() const { return n_actions_; }
  Eigen::Index param_dim() const { return theta_.size(); }
  const Features& features() const { return features_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  void set_theta(Eigen::VectorXd theta) {
    if (theta.size() != theta_.size())
      throw std::invalid_argument("SoftmaxPolicy: theta dimension mismatch");
    theta_ = std::move(theta);
  }
  Eigen::VectorXd& mutable_theta() { return theta_; }

  Eigen::VectorXd action_distribution(const Observation& x) const;
  Eigen::VectorXd score(const Observation& x, int action) const;
  int sample_action(const Observation& x, RngStream& rng) const;

 private:
  Features features_;
  int n_actions_;
  Eigen::VectorXd theta_;
};

/// Scratch-buffer evaluator for hot loops: computes the feature matrix,
/// action distribution, and scores without per-step allocation. One evaluator
/// per simulation thread; reads the policy's current theta on every compute().
template <class Features>
class PolicyEvaluator {
 public:
  explicit PolicyEvaluator(const SoftmaxPolicy<Features>& policy)
      : phi_(policy.param_dim(), policy.num_actions()),
        logits_(policy.num_actions()),
        probs_(policy.num_actions()) {}

  void compute(const SoftmaxPolicy<Features>& policy,
               const typename Features::Observation& x) {
    const int na = policy.num_actions();
    for (int a = 0; a < na; ++a) policy.features().write(x, a, phi_.col(a));
    logits_.noalias() = phi_.transpose() * policy.theta();
    if (!logits_.allFinite())
      throw std::domain_error("SoftmaxPolicy: non-finite logits");
    const double m = logits_.maxCoeff();
    // scalar std::exp so that hugely negative logits underflow to an exact
    // zero probability (vectorized exp clamps instead)
    for (int a = 0; a < na; ++a) probs_[a] = std::exp(logits_[a] - m);
    probs_ /= probs_.sum();
  }

  const Eigen::VectorXd& distribution() const { return probs_; }

  int sample(RngStream& rng) const {
    return rng.categorical({probs_.data(), static_cast<std::size_t>(probs_.size())});
  }

  /// score(a) = phi(x, a) - sum_a' mu(a'|x) phi(x, a'); the gradient of log mu.
  void score(int action, Eigen::Ref<Eigen::VectorXd> out) const {
    if (probs_[action] <= 0.0)
      throw std::domain_error("SoftmaxPolicy: score undefined for zero-probability action");
    out = phi_.col(action);
    out.noalias() -= phi_ * probs_;
  }

 private:
  Eigen::MatrixXd phi_;  // param_dim x n_actions
  Eigen::VectorXd logits_;
  Eigen::VectorXd probs_;
};

template <class Features>
Eigen::VectorXd SoftmaxPolicy<Features>::action_distribution(const Observation& x) const {
  PolicyEvaluator<Features> eval(*this);
  eval.compute(*this, x);
  return eval.distribution();
}

template <class Features>
Eigen::VectorXd SoftmaxPolicy<Features>::score(const Observation& x, int action) const {
  PolicyEvaluator<Features> eval(*this);
  eval.compute(*this, x);
  Eigen::VectorXd out(param_dim());
  eval.score(action, out);
  return out;
}

template <class Features>
int SoftmaxPolicy<Features>::sample_action(const Observation& x, RngStream& rng) const {
  PolicyEvaluator<Features> eval(*this);
  eval.compute(*this, x);
  return eval.sample(rng);
}

using TabularPolicy = SoftmaxPolicy<TabularFeatures>;

/// Tabular softmax over (state, action) one-hot features, theta = 0 unless given.
inline TabularPolicy make_tabular_policy(int n_states, int n_actions) {
  return TabularPolicy(TabularFeatures{n_states, n_actions}, n_actions,
                       Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_states) * n_actions));
}

}  // namespace polgrad
