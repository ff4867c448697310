#include "polgrad/policy.hpp"

#include <cmath>
#include <gtest/gtest.h>

#include "helpers.hpp"
#include "polgrad/rng.hpp"

using polgrad::ActionIndicatorFeatures;
using polgrad::BlockActionFeatures;
using polgrad::RngStream;
using polgrad::SoftmaxPolicy;
using polgrad::TabularFeatures;
using polgrad::TabularPolicy;

namespace {

TabularPolicy one_state_policy(Eigen::VectorXd theta) {
  return TabularPolicy(TabularFeatures{1, 2}, 2, std::move(theta));
}

TabularPolicy random_policy(int n_states, int n_actions, RngStream& rng) {
  Eigen::VectorXd theta(n_states * n_actions);
  for (Eigen::Index j = 0; j < theta.size(); ++j) theta[j] = rng.uniform(-2.0, 2.0);
  return TabularPolicy(TabularFeatures{n_states, n_actions}, n_actions, std::move(theta));
}

}  // namespace

TEST(SoftmaxPolicy, EqualLogitsGiveUniform) {
  const auto policy = one_state_policy(Eigen::Vector2d(0.7, 0.7));
  const Eigen::VectorXd mu = policy.action_distribution(0);
  EXPECT_NEAR(mu[0], 0.5, 1e-15);
  EXPECT_NEAR(mu[1], 0.5, 1e-15);
}

TEST(SoftmaxPolicy, LogThreeGivesThreeQuarters) {
  const auto policy = one_state_policy(Eigen::Vector2d(std::log(3.0), 0.0));
  const Eigen::VectorXd mu = policy.action_distribution(0);
  EXPECT_NEAR(mu[0], 0.75, 1e-12);
  EXPECT_NEAR(mu[1], 0.25, 1e-12);
}

TEST(SoftmaxPolicy, DistributionNormalized) {
  RngStream rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const auto policy = random_policy(3, 4, rng);
    for (int x = 0; x < 3; ++x) {
      const Eigen::VectorXd mu = policy.action_distribution(x);
      EXPECT_NEAR(mu.sum(), 1.0, 1e-12);
      EXPECT_GT(mu.minCoeff(), 0.0);
    }
  }
}

TEST(SoftmaxPolicy, ScoreAtUniformPoint) {
  const auto policy = one_state_policy(Eigen::Vector2d(0.0, 0.0));
  const Eigen::VectorXd zeta = policy.score(0, 0);
  EXPECT_NEAR(zeta[0], 0.5, 1e-15);
  EXPECT_NEAR(zeta[1], -0.5, 1e-15);
}

TEST(SoftmaxPolicy, ScoreHasZeroMean) {
  RngStream rng(12);
  for (int rep = 0; rep < 50; ++rep) {
    const auto policy = random_policy(3, 3, rng);
    for (int x = 0; x < 3; ++x) {
      const Eigen::VectorXd mu = policy.action_distribution(x);
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(policy.param_dim());
      for (int a = 0; a < 3; ++a) mean += mu[a] * policy.score(x, a);
      EXPECT_LT(mean.cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(SoftmaxPolicy, ScoreMatchesFiniteDifference) {
  RngStream rng(13);
  for (int rep = 0; rep < 10; ++rep) {
    const auto policy = random_policy(2, 3, rng);
    for (int x = 0; x < 2; ++x) {
      for (int a = 0; a < 3; ++a) {
        const Eigen::VectorXd zeta = policy.score(x, a);
        const Eigen::VectorXd fd = testutil::fd_log_policy_gradient(policy, x, a);
        const double scale = std::max(1.0, zeta.cwiseAbs().maxCoeff());
        EXPECT_LT((zeta - fd).cwiseAbs().maxCoeff() / scale, 1e-6);
      }
    }
  }
}

TEST(SoftmaxPolicy, UnderflowedActionScoreThrows) {
  // exp(-2000) underflows to zero probability; the score of that action is
  // undefined.
  const auto policy = one_state_policy(Eigen::Vector2d(2000.0, 0.0));
  const Eigen::VectorXd mu = policy.action_distribution(0);
  EXPECT_EQ(mu[1], 0.0);
  EXPECT_THROW(policy.score(0, 1), std::domain_error);
}

TEST(SoftmaxPolicy, NonFiniteLogitsThrow) {
  const auto policy = one_state_policy(
      Eigen::Vector2d(std::numeric_limits<double>::infinity(), 0.0));
  EXPECT_THROW(policy.action_distribution(0), std::domain_error);
}

TEST(SoftmaxPolicy, LargeLogitsDoNotOverflow) {
  const auto policy = one_state_policy(Eigen::Vector2d(800.0, 700.0));
  const Eigen::VectorXd mu = policy.action_distribution(0);
  EXPECT_TRUE(mu.allFinite());
  EXPECT_NEAR(mu.sum(), 1.0, 1e-12);
}

TEST(SoftmaxPolicy, DimensionMismatchThrows) {
  EXPECT_THROW(TabularPolicy(TabularFeatures{2, 2}, 2, Eigen::Vector3d(0, 0, 0)),
               std::invalid_argument);
  auto policy = one_state_policy(Eigen::Vector2d(0, 0));
  EXPECT_THROW(policy.set_theta(Eigen::Vector3d(0, 0, 0)), std::invalid_argument);
}

TEST(SoftmaxPolicy, SampleActionFollowsDistribution) {
  const auto policy = one_state_policy(Eigen::Vector2d(std::log(3.0), 0.0));
  RngStream rng(14);
  int hits = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) hits += policy.sample_action(0, rng) == 0;
  EXPECT_NEAR(hits / static_cast<double>(n), 0.75, 0.01);
}

TEST(BlockActionFeatures, PlacesStateFeaturesInActionBlock) {
  const BlockActionFeatures fm{3, 2};
  Eigen::VectorXd obs(2);
  obs << 0.5, -1.5;
  Eigen::VectorXd out(6);
  fm.write(obs, 1, out);
  Eigen::VectorXd expected(6);
  expected << 0, 0, 0.5, -1.5, 0, 0;
  EXPECT_TRUE(out.isApprox(expected));
}

TEST(ActionIndicatorFeatures, IgnoresObservation) {
  const SoftmaxPolicy<ActionIndicatorFeatures> policy(ActionIndicatorFeatures{2}, 2,
                                                      Eigen::Vector2d(std::log(3.0), 0.0));
  for (int x = 0; x < 5; ++x) {
    const Eigen::VectorXd mu = policy.action_distribution(x);
    EXPECT_NEAR(mu[0], 0.75, 1e-12);
  }
}
