#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rail/cartpole.hpp"
#include "rail/discrete_mdp.hpp"

using namespace rail;

namespace {

// Two states; action 0 moves to the other state, action 1 stays.
DiscreteMdp two_state_swap(std::size_t horizon) {
  DiscreteMdp m;
  m.num_states = 2;
  m.num_actions = 2;
  m.horizon = horizon;
  m.transition.assign(8, 0.0);
  m.p(0, 0, 1) = 1.0;
  m.p(1, 0, 0) = 1.0;
  m.p(0, 1, 0) = 1.0;
  m.p(1, 1, 1) = 1.0;
  m.reward = {1.0, 0.0};
  m.initial = {1.0, 0.0};
  m.validate();
  return m;
}

// Exact d^t by forward recursion over the transition table.
std::vector<std::vector<double>> forward_marginals(const DiscreteMdp& m, const ActionTable& pi) {
  std::vector<std::vector<double>> d(m.horizon, std::vector<double>(m.num_states, 0.0));
  d[0] = m.initial;
  for (std::size_t t = 1; t < m.horizon; ++t)
    for (std::size_t s = 0; s < m.num_states; ++s)
      for (std::size_t n = 0; n < m.num_states; ++n)
        d[t][n] += d[t - 1][s] * m.p(s, static_cast<std::size_t>(pi[s]), n);
  return d;
}

}  // namespace

TEST(EnvSpec, Validation) {
  EXPECT_NO_THROW((EnvSpec{1, 2, 1}.validate()));
  EXPECT_THROW((EnvSpec{0, 2, 1}.validate()), ContractError);
  EXPECT_THROW((EnvSpec{1, 1, 1}.validate()), ContractError);
  EXPECT_THROW((EnvSpec{1, 2, 0}.validate()), ContractError);
}

TEST(Rollout, ZeroHorizonIsEmpty) {
  CartPoleEnv env;
  RngStream rng(1, 0);
  auto traj = rollout(env, [](const StateVec&) { return 0; }, 0, rng);
  EXPECT_EQ(traj.size(), 0u);
  EXPECT_TRUE(traj.rewards.empty());
}

TEST(Rollout, CartPoleLengthIsExactlyHorizon) {
  CartPoleEnv env;
  RngStream rng(1, 0);
  // always-left falls within a few dozen steps; the episode still runs on
  auto traj = rollout(env, [](const StateVec&) { return 0; }, 500, rng);
  EXPECT_EQ(traj.size(), 500u);
  EXPECT_EQ(traj.rewards.size(), 500u);
  EXPECT_EQ(traj.rewards.back(), -1.0);
}

TEST(Rollout, DeterministicGivenSeed) {
  CartPoleEnv env;
  auto policy = [&](const StateVec& s) { return env.expert_action(s); };
  RngStream a(77, 3), b(77, 3);
  auto t1 = rollout(env, policy, 200, a);
  auto t2 = rollout(env, policy, 200, b);
  ASSERT_EQ(t1.size(), t2.size());
  for (std::size_t i = 0; i < t1.size(); ++i) {
    EXPECT_EQ(t1.steps[i].state, t2.steps[i].state);
    EXPECT_EQ(t1.steps[i].action, t2.steps[i].action);
  }
}

TEST(Rollout, OutOfRangeActionIsContractError) {
  CartPoleEnv env;
  RngStream rng(1, 0);
  EXPECT_THROW(rollout(env, [](const StateVec&) { return 2; }, 5, rng), ContractError);
  EXPECT_THROW(rollout(env, [](const StateVec&) { return -1; }, 5, rng), ContractError);
}

TEST(Rollout, TimedPolicySeesZeroBasedStep) {
  DiscreteMdpEnv env(make_chain_mdp(4), ActionTable(4, 0));
  std::vector<std::size_t> seen;
  RngStream rng(1, 0);
  rollout(env, [&](const StateVec&, std::size_t t) { seen.push_back(t); return 0; }, 4, rng);
  EXPECT_EQ(seen, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(SampleDt, FirstStepIsInitialDistributionChiSquare) {
  RngStream mrng(4, 4);
  auto mdp = make_random_discrete_mdp(4, 2, 3, mrng);
  DiscreteMdpEnv env(mdp, ActionTable(4, 0));
  const std::size_t n = 20000;
  for (int which = 0; which < 2; ++which) {
    RngStream rng(10 + which, 0);
    auto states = which == 0 ? sample_d_t(env, [](const StateVec&) { return 0; }, 1, n, rng)
                             : sample_d_t(env, [](const StateVec&) { return 1; }, 1, n, rng);
    std::vector<double> counts(4, 0.0);
    for (const auto& s : states) counts[static_cast<std::size_t>(s[0])] += 1.0;
    double chi2 = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const double e = mdp.initial[k] * n;
      if (e > 0) chi2 += (counts[k] - e) * (counts[k] - e) / e;
    }
    EXPECT_LT(chi2, 11.345);  // 3 dof, p = 0.01
  }
}

TEST(SampleDt, EdgeCases) {
  DiscreteMdpEnv env(make_chain_mdp(3), ActionTable(3, 0));
  RngStream rng(1, 1);
  auto advance = [](const StateVec&) { return 0; };
  EXPECT_TRUE(sample_d_t(env, advance, 2, 0, rng).empty());
  EXPECT_THROW(sample_d_t(env, advance, 0, 1, rng), ContractError);
  EXPECT_THROW(sample_d_t(env, advance, 4, 1, rng), ContractError);
}

TEST(SampleDt, ChainThirdStateAfterTwoSteps) {
  DiscreteMdpEnv env(make_chain_mdp(3), ActionTable(3, 0));
  RngStream rng(2, 2);
  auto states = sample_d_t(env, [](const StateVec&) { return 0; }, 3, 50, rng);
  ASSERT_EQ(states.size(), 50u);
  for (const auto& s : states) EXPECT_EQ(s, StateVec{2.0});
}

TEST(SampleDPi, HorizonOneMatchesFirstStep) {
  RngStream mrng(8, 0);
  auto mdp = make_random_discrete_mdp(3, 2, 1, mrng);
  DiscreteMdpEnv env(mdp, ActionTable(3, 0));
  RngStream a(3, 0);
  const std::size_t n = 20000;
  auto states = sample_d_pi(env, [](const StateVec&) { return 1; }, n, a);
  for (std::size_t k = 0; k < 3; ++k) {
    double c = 0;
    for (const auto& s : states) c += s[0] == static_cast<double>(k);
    const double p = mdp.initial[k];
    EXPECT_NEAR(c / n, p, 3.0 * std::sqrt(p * (1 - p) / n) + 1e-12);
  }
}

TEST(SampleDPi, AlternatingTwoStateIsHalfHalf) {
  DiscreteMdpEnv env(two_state_swap(2), ActionTable{0, 0});
  RngStream rng(5, 5);
  const std::size_t n = 10000;
  EXPECT_TRUE(sample_d_pi(env, [](const StateVec&) { return 0; }, 0, rng).empty());
  auto states = sample_d_pi(env, [](const StateVec&) { return 0; }, n, rng);
  double zeros = 0;
  for (const auto& s : states) zeros += s[0] == 0.0;
  // d_pi = (1/2)(d^1 + d^2) = (1/2)((1,0) + (0,1))
  EXPECT_NEAR(zeros / n, 0.5, 3.0 * std::sqrt(0.25 / n));
}

TEST(SampleDPi, ConvergesToAveragedMarginals) {
  RngStream mrng(21, 0);
  auto mdp = make_random_discrete_mdp(5, 3, 4, mrng);
  RngStream prng(22, 0);
  const ActionTable pi = random_action_table(mdp, prng);
  DiscreteMdpEnv env(mdp, pi);
  const auto d = forward_marginals(mdp, pi);
  std::vector<double> exact(5, 0.0);
  for (const auto& dt : d)
    for (std::size_t s = 0; s < 5; ++s) exact[s] += dt[s] / 4.0;
  RngStream rng(23, 0);
  const std::size_t n = 10000;
  auto states = sample_d_pi(env, [&](const StateVec& s) { return env.expert_action(s); }, n, rng);
  std::vector<double> emp(5, 0.0);
  for (const auto& s : states) emp[static_cast<std::size_t>(s[0])] += 1.0 / n;
  double tv = 0.0;
  for (std::size_t s = 0; s < 5; ++s) tv += 0.5 * std::abs(emp[s] - exact[s]);
  EXPECT_LT(tv, 0.05);
}

TEST(EstimateValue, DeterministicRewardOne) {
  DiscreteMdpEnv env(make_chain_mdp(3), ActionTable(3, 0));
  RngStream rng(1, 0);
  auto est = estimate_value(env, [](const StateVec&) { return 0; }, 10, rng);
  EXPECT_DOUBLE_EQ(est.mean, 3.0);
  EXPECT_DOUBLE_EQ(est.std_error, 0.0);
  EXPECT_FALSE(est.degenerate);
}

TEST(EstimateValue, SingleEpisodeIsDegenerate) {
  RngStream mrng(3, 0);
  DiscreteMdpEnv env(make_random_discrete_mdp(4, 2, 4, mrng), ActionTable(4, 1));
  RngStream rng(2, 0);
  auto est = estimate_value(env, [](const StateVec&) { return 1; }, 1, rng);
  EXPECT_TRUE(est.degenerate);
  EXPECT_EQ(est.std_error, 0.0);
  EXPECT_THROW(estimate_value(env, [](const StateVec&) { return 1; }, 0, rng), ContractError);
}

TEST(EstimateValue, CartPoleExpertBalances) {
  CartPoleEnv env;
  RngStream rng(99, 0);
  auto est = estimate_value(env, [&](const StateVec& s) { return env.expert_action(s); }, 30, rng);
  EXPECT_GE(est.mean, 490.0);
}
