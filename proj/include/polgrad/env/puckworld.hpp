#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include <Eigen/Core>

#include "polgrad/rng.hpp"

namespace polgrad {

/// Puck-on-a-plane state: position and velocity of the puck, the current
/// target point, and the time since both were last teleported.
struct PuckState {
  Eigen::Vector2d position{0.0, 0.0};
  Eigen::Vector2d velocity{0.0, 0.0};
  Eigen::Vector2d target{0.0, 0.0};
  double time_since_teleport = 0.0;
};

/// Arena size, damping, teleport period, and force magnitude are repository
/// conventions, not reference values.
struct PuckParams {
  double arena = 50.0;            // square arena side [m]
  double damping = 0.5;           // viscous coefficient [1/s]
  double force = 5.0;             // per-axis force magnitude [N]
  double dt = 0.1;                // decision interval [s]
  double teleport_period = 30.0;  // [s]
};

/// The four controls combine a +/- force on each axis.
inline Eigen::Vector2d puck_force(int action, const PuckParams& p) {
  switch (action) {
    case 0: return {-p.force, -p.force};
    case 1: return {+p.force, -p.force};
    case 2: return {-p.force, +p.force};
    case 3: return {+p.force, +p.force};
    default: throw std::invalid_argument("puck_force: action out of range");
  }
}

/// Advances the damped unit-mass dynamics m v' = F - c v for one decision
/// interval using the exact solution of the linear ODE, clamps the puck to
/// the arena (zeroing the outward velocity component at a wall), and returns
/// the new state together with the reward -distance(puck, target).
///
/// When the teleport timer expires, puck and target jump to independent
/// uniform arena positions and the puck's velocity resets; the reward for the
/// step is measured before the jump, so it still reflects the chosen action.
inline std::pair<PuckState, double> puck_step(PuckState s, int action, const PuckParams& p,
                                              RngStream& rng) {
  const Eigen::Vector2d f = puck_force(action, p);
  const double c = p.damping;
  const double decay = std::exp(-c * p.dt);
  const Eigen::Vector2d terminal = f / c;  // asymptotic velocity under constant force
  s.position += s.velocity * ((1.0 - decay) / c) + terminal * (p.dt - (1.0 - decay) / c);
  s.velocity = s.velocity * decay + terminal * (1.0 - decay);

  for (int k = 0; k < 2; ++k) {
    if (s.position[k] < 0.0) {
      s.position[k] = 0.0;
      if (s.velocity[k] < 0.0) s.velocity[k] = 0.0;
    } else if (s.position[k] > p.arena) {
      s.position[k] = p.arena;
      if (s.velocity[k] > 0.0) s.velocity[k] = 0.0;
    }
  }

  const double reward = -(s.position - s.target).norm();

  s.time_since_teleport += p.dt;
  if (s.time_since_teleport >= p.teleport_period) {
    s.position = {rng.uniform(0.0, p.arena), rng.uniform(0.0, p.arena)};
    s.target = {rng.uniform(0.0, p.arena), rng.uniform(0.0, p.arena)};
    s.velocity.setZero();
    s.time_since_teleport = 0.0;
  }
  return {std::move(s), reward};
}

/// Continuous puck navigation task for training. Observations are a 5-vector
/// of normalized target offset, normalized velocity, and a bias term.
class PuckworldEnv {
 public:
  using Observation = Eigen::VectorXd;

  explicit PuckworldEnv(PuckParams params = {}) : params_(params), obs_(5) {
    update_obs();
  }

  static constexpr int kStateFeatureDim = 5;
  int num_actions() const { return 4; }

  void reset(RngStream& rng) {
    state_ = PuckState{};
    state_.position = {rng.uniform(0.0, params_.arena), rng.uniform(0.0, params_.arena)};
    state_.target = {rng.uniform(0.0, params_.arena), rng.uniform(0.0, params_.arena)};
    update_obs();
  }

  const Observation& observe() const { return obs_; }

  double step(int action, RngStream& rng) {
    auto [next, reward] = puck_step(state_, action, params_, rng);
    state_ = std::move(next);
    update_obs();
    return reward;
  }

  const PuckState& state() const { return state_; }
  const PuckParams& params() const { return params_; }

 private:
  void update_obs() {
    const double vscale = params_.force / params_.damping;  // terminal speed
    obs_[0] = (state_.target[0] - state_.position[0]) / params_.arena;
    obs_[1] = (state_.target[1] - state_.position[1]) / params_.arena;
    obs_[2] = state_.velocity[0] / vscale;
    obs_[3] = state_.velocity[1] / vscale;
    obs_[4] = 1.0;
  }

  PuckParams params_;
  PuckState state_;
  Eigen::VectorXd obs_;
};

}  // namespace polgrad
