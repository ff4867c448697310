#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

#include "polgrad/env/acrobot.hpp"
#include "polgrad/env/bandit.hpp"
#include "polgrad/env/puckworld.hpp"
#include "polgrad/env/three_state.hpp"
#include "polgrad/experiments.hpp"

namespace polgrad {

/// Raised for malformed or inconsistent configuration; the CLI maps it to
/// exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
}

namespace cfg {

template <class T>
T get_or(const nlohmann::json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + key + "' has the wrong type");
  }
}

template <class T>
T require(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError("config field '" + key + "' is required");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + key + "' has the wrong type");
  }
}

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                       const std::string& scope) {
  if (!j.is_object()) throw ConfigError("config section '" + scope + "' must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw ConfigError("unknown config field '" + scope + "." + key + "'");
}

}  // namespace cfg

/// Normalizes the env section: either a bare name string or an object with a
/// `name` field plus per-environment parameters.
inline nlohmann::json env_section(const nlohmann::json& config) {
  if (!config.contains("env")) return nlohmann::json{{"name", "three-state"}};
  const auto& env = config.at("env");
  if (env.is_string()) return nlohmann::json{{"name", env.get<std::string>()}};
  if (env.is_object()) {
    if (!env.contains("name")) throw ConfigError("config field 'env.name' is required");
    return env;
  }
  throw ConfigError("config field 'env' must be a string or an object");
}

inline Eigen::VectorXd theta_from_json(const nlohmann::json& arr, Eigen::Index expected,
                                       const std::string& field) {
  const auto v = arr.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != expected)
    throw ConfigError("config field '" + field + "' must have " + std::to_string(expected) +
                      " entries");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Builds a tabular system from the env section and hands (mdp, policy,
/// start_state) to the continuation. Environments without an exact oracle are
/// rejected here.
template <class Fn>
auto with_tabular_system(const nlohmann::json& env, Fn&& fn) {
  const auto name = cfg::require<std::string>(env, "name");
  if (name == "three-state") {
    cfg::check_keys(env, {"name", "theta", "start_state"}, "env");
    ThreeStateSystem sys = default_three_state();
    if (env.contains("theta"))
      sys.policy.set_theta(theta_from_json(env.at("theta"), 6, "env.theta"));
    sys.start_state = cfg::get_or<int>(env, "start_state", sys.start_state);
    if (sys.start_state < 0 || sys.start_state >= 3)
      throw ConfigError("config field 'env.start_state' out of range");
    return fn(sys.mdp, sys.policy, sys.start_state);
  }
  if (name == "bandit") {
    cfg::check_keys(env, {"name", "mu0", "r0", "r1", "spread0", "spread1"}, "env");
    const double mu0 = cfg::get_or<double>(env, "mu0", 0.5);
    if (!(mu0 > 0.0 && mu0 < 1.0))
      throw ConfigError("config field 'env.mu0' must lie strictly inside (0, 1)");
    const BanditArm arm0{cfg::get_or<double>(env, "r0", 0.0),
                         cfg::get_or<double>(env, "spread0", 0.0)};
    const BanditArm arm1{cfg::get_or<double>(env, "r1", 1.0),
                         cfg::get_or<double>(env, "spread1", 0.0)};
    BanditSystem sys = make_bandit(mu0, arm0, arm1);
    return fn(sys.mdp, sys.policy, sys.start_state);
  }
  if (name == "mdp-file") {
    cfg::check_keys(env, {"name", "path", "theta", "start_state"}, "env");
    const auto path = cfg::require<std::string>(env, "path");
    std::ifstream in(path);
    if (!in) throw ConfigError("config field 'env.path': cannot open " + path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("env.path file is not valid JSON: " + std::string(e.what()));
    }
    TabularMdp mdp = [&] {
      try {
        return TabularMdp::from_json(j);
      } catch (const std::exception& e) {
        throw ConfigError("env.path file does not describe a valid MDP: " +
                          std::string(e.what()));
      }
    }();
    TabularPolicy policy = make_tabular_policy(mdp.n_states(), mdp.n_actions());
    if (env.contains("theta"))
      policy.set_theta(theta_from_json(env.at("theta"), policy.param_dim(), "env.theta"));
    const int start = cfg::get_or<int>(env, "start_state", 0);
    if (start < 0 || start >= mdp.n_states())
      throw ConfigError("config field 'env.start_state' out of range");
    return fn(std::move(mdp), std::move(policy), start);
  }
  if (name == "acrobot" || name == "puckworld")
    throw ConfigError("env.name '" + name +
                      "' has no exact-gradient oracle; this command needs a tabular environment");
  throw ConfigError("unknown env.name '" + name + "'");
}

/// Builds a simulation environment plus its policy prototype for training
/// commands and hands (env, policy) to the continuation.
template <class Fn>
auto with_train_setup(const nlohmann::json& env, Fn&& fn) {
  const auto name = cfg::require<std::string>(env, "name");
  if (name == "three-state" || name == "bandit" || name == "mdp-file") {
    return with_tabular_system(env, [&](TabularMdp mdp, auto policy, int start) {
      TabularEnv tenv(std::move(mdp), start);
      return fn(std::move(tenv), std::move(policy));
    });
  }
  if (name == "acrobot") {
    cfg::check_keys(env, {"name", "dt_sim", "action_interval", "torque_scale"}, "env");
    AcrobotParams params;
    params.dt_sim = cfg::get_or<double>(env, "dt_sim", params.dt_sim);
    params.action_interval = cfg::get_or<double>(env, "action_interval", params.action_interval);
    params.torque_scale = cfg::get_or<double>(env, "torque_scale", params.torque_scale);
    if (!(params.dt_sim > 0.0) || !(params.action_interval >= params.dt_sim))
      throw ConfigError("config fields 'env.dt_sim'/'env.action_interval' are inconsistent");
    AcrobotEnv aenv(params);
    SoftmaxPolicy<AcrobotPolicyFeatures> policy(AcrobotPolicyFeatures{}, 3,
                                                Eigen::VectorXd::Zero(4));
    return fn(std::move(aenv), std::move(policy));
  }
  if (name == "puckworld") {
    cfg::check_keys(env, {"name", "arena", "damping", "force", "dt", "teleport_period"}, "env");
    PuckParams params;
    params.arena = cfg::get_or<double>(env, "arena", params.arena);
    params.damping = cfg::get_or<double>(env, "damping", params.damping);
    params.force = cfg::get_or<double>(env, "force", params.force);
    params.dt = cfg::get_or<double>(env, "dt", params.dt);
    params.teleport_period = cfg::get_or<double>(env, "teleport_period", params.teleport_period);
    if (!(params.arena > 0.0 && params.damping > 0.0 && params.dt > 0.0))
      throw ConfigError("config: puckworld parameters must be positive");
    PuckworldEnv penv(params);
    SoftmaxPolicy<BlockActionFeatures> policy(
        BlockActionFeatures{4, PuckworldEnv::kStateFeatureDim}, 4,
        Eigen::VectorXd::Zero(4 * PuckworldEnv::kStateFeatureDim));
    return fn(std::move(penv), std::move(policy));
  }
  throw ConfigError("unknown env.name '" + name + "'");
}

}  // namespace polgrad
