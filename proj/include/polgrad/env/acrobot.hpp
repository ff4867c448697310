#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Core>

#include "polgrad/rng.hpp"

namespace polgrad {

/// Two-link underactuated pendulum state. Angles are measured in radians from
/// the downward vertical for link 1 and relative to link 1 for link 2;
/// invariants: angles wrapped to (-pi, pi], |q1dot| <= 4*pi, |q2dot| <= 9*pi.
struct AcrobotState {
  double q1 = 0.0;
  double q2 = 0.0;
  double q1dot = 0.0;
  double q2dot = 0.0;
};

/// Standard acrobot constants: unit masses and lengths, torque applied at the
/// second joint only. dt_sim subdivides the action interval for integration.
struct AcrobotParams {
  double m1 = 1.0, m2 = 1.0;    // link masses [kg]
  double l1 = 1.0, l2 = 1.0;    // link lengths [m]
  double lc1 = 0.5, lc2 = 0.5;  // centre-of-mass distances [m]
  double i1 = 1.0, i2 = 1.0;    // moments of inertia about the CoM
  double gravity = 9.8;         // [m/s^2]
  double torque_scale = 1.0;    // torque = action in {-1, 0, +1} times this
  double dt_sim = 0.02;         // integration substep [s]
  double action_interval = 0.1; // time between decisions [s]
  double max_q1dot = 4.0 * std::numbers::pi;
  double max_q2dot = 9.0 * std::numbers::pi;
};

namespace detail {

struct AcrobotDeriv {
  double dq1, dq2, dq1dot, dq2dot;
};

inline AcrobotDeriv acrobot_deriv(const AcrobotState& s, double torque,
                                  const AcrobotParams& p) {
  const double half_pi = std::numbers::pi / 2.0;
  const double cos_q2 = std::cos(s.q2);
  const double sin_q2 = std::sin(s.q2);
  const double d1 = p.m1 * p.lc1 * p.lc1 +
                    p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2 + 2.0 * p.l1 * p.lc2 * cos_q2) +
                    p.i1 + p.i2;
  const double d2 = p.m2 * (p.lc2 * p.lc2 + p.l1 * p.lc2 * cos_q2) + p.i2;
  const double phi2 = p.m2 * p.lc2 * p.gravity * std::cos(s.q1 + s.q2 - half_pi);
  const double phi1 = -p.m2 * p.l1 * p.lc2 * s.q2dot * s.q2dot * sin_q2 -
                      2.0 * p.m2 * p.l1 * p.lc2 * s.q2dot * s.q1dot * sin_q2 +
                      (p.m1 * p.lc1 + p.m2 * p.l1) * p.gravity * std::cos(s.q1 - half_pi) +
                      phi2;
  const double q2ddot =
      (torque + (d2 / d1) * phi1 - p.m2 * p.l1 * p.lc2 * s.q1dot * s.q1dot * sin_q2 - phi2) /
      (p.m2 * p.lc2 * p.lc2 + p.i2 - d2 * d2 / d1);
  const double q1ddot = -(d2 * q2ddot + phi1) / d1;
  return {s.q1dot, s.q2dot, q1ddot, q2ddot};
}

inline double wrap_angle(double q) {
  const double two_pi = 2.0 * std::numbers::pi;
  q = std::fmod(q, two_pi);
  if (q <= -std::numbers::pi) q += two_pi;
  if (q > std::numbers::pi) q -= two_pi;
  return q;
}

}  // namespace detail

/// One fourth-order Runge-Kutta substep of the free dynamics; no wrapping or
/// clamping is applied here.
inline AcrobotState acrobot_step(const AcrobotState& s, double torque, double dt,
                                 const AcrobotParams& p = {}) {
  using detail::acrobot_deriv;
  const auto k1 = acrobot_deriv(s, torque, p);
  const auto at = [&](const detail::AcrobotDeriv& k, double h) {
    return AcrobotState{s.q1 + h * k.dq1, s.q2 + h * k.dq2, s.q1dot + h * k.dq1dot,
                        s.q2dot + h * k.dq2dot};
  };
  const auto k2 = acrobot_deriv(at(k1, dt / 2.0), torque, p);
  const auto k3 = acrobot_deriv(at(k2, dt / 2.0), torque, p);
  const auto k4 = acrobot_deriv(at(k3, dt), torque, p);
  AcrobotState out{
      s.q1 + dt / 6.0 * (k1.dq1 + 2.0 * k2.dq1 + 2.0 * k3.dq1 + k4.dq1),
      s.q2 + dt / 6.0 * (k1.dq2 + 2.0 * k2.dq2 + 2.0 * k3.dq2 + k4.dq2),
      s.q1dot + dt / 6.0 * (k1.dq1dot + 2.0 * k2.dq1dot + 2.0 * k3.dq1dot + k4.dq1dot),
      s.q2dot + dt / 6.0 * (k1.dq2dot + 2.0 * k2.dq2dot + 2.0 * k3.dq2dot + k4.dq2dot)};
  if (!(std::isfinite(out.q1) && std::isfinite(out.q2) && std::isfinite(out.q1dot) &&
        std::isfinite(out.q2dot)))
    throw std::runtime_error("acrobot_step: integration produced a non-finite state");
  return out;
}

/// Advances one action interval (dt_sim substeps), wrapping angles and
/// clamping velocities after each substep.
inline AcrobotState acrobot_act(AcrobotState s, double torque, const AcrobotParams& p = {}) {
  const int substeps = static_cast<int>(std::lround(p.action_interval / p.dt_sim));
  for (int i = 0; i < substeps; ++i) {
    s = acrobot_step(s, torque, p.dt_sim, p);
    s.q1 = detail::wrap_angle(s.q1);
    s.q2 = detail::wrap_angle(s.q2);
    s.q1dot = std::clamp(s.q1dot, -p.max_q1dot, p.max_q1dot);
    s.q2dot = std::clamp(s.q2dot, -p.max_q2dot, p.max_q2dot);
  }
  return s;
}

/// Height of the tip above its lowest possible position; lies in [0, 4].
inline double acrobot_reward(const AcrobotState& s) {
  return 2.0 - std::cos(s.q1) - std::cos(s.q1 + s.q2);
}

/// Feature vector (|q1|, |q1dot|, |q2|, |q2dot|).
inline Eigen::VectorXd acrobot_features(const AcrobotState& s) {
  Eigen::VectorXd f(4);
  f << std::abs(s.q1), std::abs(s.q1dot), std::abs(s.q2), std::abs(s.q2dot);
  return f;
}

/// Policy features for the acrobot controller: the chosen action's torque
/// sign multiplies the four state features, so one weight vector scores the
/// three torque levels as (-v, 0, +v). Each feature is scaled by a
/// characteristic magnitude (angles ~ pi/2, velocities ~ half their clamp
/// bound) so all components move on comparable scales during a swing and the
/// default step size trains stably. The scaling is a diagonal
/// reparameterization; the policy class is unchanged.
struct AcrobotPolicyFeatures {
  using Observation = Eigen::VectorXd;

  int dim() const { return 4; }
  void write(const Eigen::VectorXd& f, int action, Eigen::Ref<Eigen::VectorXd> out) const {
    const double torque = action - 1;
    out[0] = torque * f[0] * 2.0;
    out[1] = torque * f[1] * 0.5;
    out[2] = torque * f[2] * 2.0;
    out[3] = torque * f[3] * (2.0 / 9.0);
  }
};

/// Continuously-run acrobot for online training: three torque levels
/// {-1, 0, +1} (scaled), reward after each action interval, no episode reset.
class AcrobotEnv {
 public:
  using Observation = Eigen::VectorXd;

  explicit AcrobotEnv(AcrobotParams params = {}) : params_(params), obs_(4) {
    update_obs();
  }

  static constexpr int kStateFeatureDim = 4;
  int num_actions() const { return 3; }

  void reset(RngStream& /*rng*/) {
    state_ = AcrobotState{};  // at rest, hanging down
    update_obs();
  }

  const Observation& observe() const { return obs_; }

  double step(int action, RngStream& /*rng*/) {
    if (action < 0 || action > 2) throw std::invalid_argument("AcrobotEnv: action out of range");
    const double torque = (action - 1) * params_.torque_scale;
    state_ = acrobot_act(state_, torque, params_);
    update_obs();
    return acrobot_reward(state_);
  }

  const AcrobotState& state() const { return state_; }
  const AcrobotParams& params() const { return params_; }

 private:
  void update_obs() { obs_ = acrobot_features(state_); }

  AcrobotParams params_;
  AcrobotState state_;
  Eigen::VectorXd obs_;
};

}  // namespace polgrad
