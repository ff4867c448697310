#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "polgrad/rng.hpp"

namespace polgrad {

/// Finite MDP with state-indexed rewards: the reward for taking A_t in X_t is
/// rho(X_{t+1}), i.e. rewards attach to the successor state. Environments
/// whose reward depends on the action encode it by routing each action to
/// dedicated successor states (see the bandit construction).
class TabularMdp {
 public:
  /// `transition` is row-major [x][a][y]; every (x, a) row must be a
  /// probability vector. Throws std::invalid_argument on malformed input.
  TabularMdp(int n_states, int n_actions, std::vector<double> transition,
             Eigen::VectorXd reward)
      : n_states_(n_states),
        n_actions_(n_actions),
        transition_(std::move(transition)),
        reward_(std::move(reward)) {
    validate();
  }

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }

  double transition(int x, int a, int y) const {
    return transition_[offset(x, a) + static_cast<std::size_t>(y)];
  }

  std::span<const double> transition_row(int x, int a) const {
    return {transition_.data() + offset(x, a), static_cast<std::size_t>(n_states_)};
  }

  double reward(int y) const { return reward_[y]; }
  const Eigen::VectorXd& rewards() const { return reward_; }

  int sample_next(int x, int a, RngStream& rng) const {
    return rng.categorical(transition_row(x, a));
  }

  nlohmann::json to_json() const {
    nlohmann::json jp = nlohmann::json::array();
    for (int x = 0; x < n_states_; ++x) {
      nlohmann::json jx = nlohmann::json::array();
      for (int a = 0; a < n_actions_; ++a) {
        auto row = transition_row(x, a);
        jx.push_back(std::vector<double>(row.begin(), row.end()));
      }
      jp.push_back(std::move(jx));
    }
    return {{"n_states", n_states_},
            {"n_actions", n_actions_},
            {"transition", std::move(jp)},
            {"reward", std::vector<double>(reward_.begin(), reward_.end())}};
  }

  static TabularMdp from_json(const nlohmann::json& j) {
    const int ns = j.at("n_states").get<int>();
    const int na = j.at("n_actions").get<int>();
    const auto& jt = j.at("transition");
    if (!jt.is_array() || static_cast<int>(jt.size()) != ns)
      throw std::invalid_argument("TabularMdp: transition must be an array of n_states entries");
    std::vector<double> p;
    p.reserve(static_cast<std::size_t>(ns) * na * ns);
    for (const auto& jx : jt) {
      if (!jx.is_array() || static_cast<int>(jx.size()) != na)
        throw std::invalid_argument("TabularMdp: transition[x] must have n_actions rows");
      for (const auto& jrow : jx) {
        if (!jrow.is_array() || static_cast<int>(jrow.size()) != ns)
          throw std::invalid_argument("TabularMdp: transition[x][a] must have n_states entries");
        for (const auto& v : jrow) p.push_back(v.get<double>());
      }
    }
    const auto rv = j.at("reward").get<std::vector<double>>();
    Eigen::VectorXd rho = Eigen::Map<const Eigen::VectorXd>(rv.data(), static_cast<Eigen::Index>(rv.size()));
    return TabularMdp(ns, na, std::move(p), std::move(rho));
  }

 private:
  std::size_t offset(int x, int a) const {
    return (static_cast<std::size_t>(x) * n_actions_ + a) * n_states_;
  }

  void validate() const {
    if (n_states_ <= 0) throw std::invalid_argument("TabularMdp: n_states must be positive");
    if (n_actions_ <= 0) throw std::invalid_argument("TabularMdp: n_actions must be positive");
    const auto expected =
        static_cast<std::size_t>(n_states_) * n_actions_ * n_states_;
    if (transition_.size() != expected)
      throw std::invalid_argument("TabularMdp: transition tensor has wrong size");
    constexpr double kRowTol = 1e-12;
    for (int x = 0; x < n_states_; ++x) {
      for (int a = 0; a < n_actions_; ++a) {
        double sum = 0.0;
        for (int y = 0; y < n_states_; ++y) {
          const double p = transition(x, a, y);
          if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("TabularMdp: transition[" + std::to_string(x) + "][" +
                                        std::to_string(a) + "][" + std::to_string(y) +
                                        "] outside [0, 1]");
          sum += p;
        }
        if (std::abs(sum - 1.0) > kRowTol)
          throw std::invalid_argument("TabularMdp: transition row (" + std::to_string(x) + ", " +
                                      std::to_string(a) + ") sums to " + std::to_string(sum));
      }
    }
    if (reward_.size() != n_states_)
      throw std::invalid_argument("TabularMdp: reward must have n_states entries");
    if (!reward_.allFinite())
      throw std::invalid_argument("TabularMdp: reward entries must be finite");
  }

  int n_states_;
  int n_actions_;
  std::vector<double> transition_;  // [x][a][y] row-major
  Eigen::VectorXd reward_;
};

}  // namespace polgrad
