#include <gtest/gtest.h>

#include <cmath>

#include "rail/environments.hpp"
#include "rail/learners.hpp"
#include "rail/theory.hpp"

using namespace rail;

namespace {

// Discrete MDP without a uniform state sampler.
class NoSamplerEnv final : public Environment {
 public:
  explicit NoSamplerEnv(const DiscreteMdpEnv& inner) : inner_(inner) {}
  std::string name() const override { return "no-sampler"; }
  const EnvSpec& spec() const override { return inner_.spec(); }
  std::size_t feature_dim() const override { return inner_.feature_dim(); }
  StateVec initial_state(RngStream& rng) const override { return inner_.initial_state(rng); }
  StateVec step(const StateVec& s, int a, RngStream& rng) const override { return inner_.step(s, a, rng); }
  double reward(const StateVec& s, int a) const override { return inner_.reward(s, a); }
  StateVec featurize(const StateVec& s) const override { return inner_.featurize(s); }
  int expert_action(const StateVec& s) const override { return inner_.expert_action(s); }

 private:
  const DiscreteMdpEnv& inner_;
};

// Deterministic 3-state line: action 1 advances, action 0 stays; only the
// last state pays. The expert always advances.
DiscreteMdp stay_or_advance() {
  DiscreteMdp m;
  m.num_states = 3;
  m.num_actions = 2;
  m.horizon = 3;
  m.transition.assign(3 * 2 * 3, 0.0);
  for (std::size_t s = 0; s < 3; ++s) {
    m.p(s, 0, s) = 1.0;
    m.p(s, 1, std::min<std::size_t>(s + 1, 2)) = 1.0;
  }
  m.reward = {0.0, 0.0, 1.0};
  m.initial = {1.0, 0.0, 0.0};
  m.validate();
  return m;
}

std::unique_ptr<Learner> run(const std::string& name, const Environment& env, ExpertOracle& expert,
                             LearnerParams p, std::uint64_t seed) {
  auto learner = make_learner(name, env, expert, p, RngStream(seed, 0));
  run_to_budget(*learner);
  return learner;
}

}  // namespace

TEST(Passive, QueriesFollowTheExpertTrajectory) {
  CartPoleEnv env;
  ExpertOracle expert = ExpertOracle::of(env);
  LearnerParams p;
  p.budget = 60;
  auto l = run("passive", env, expert, p, 1);
  const auto& q = l->state().queries;
  ASSERT_EQ(q.size(), 60u);
  RngStream unused(0, 0);
  for (std::size_t i = 0; i < q.size(); ++i) {
    EXPECT_EQ(q[i].action, env.expert_action(q[i].state));
    EXPECT_FALSE(cartpole_absorbing(CartPoleState::from_vec(q[i].state)));
    if (i > 0) {
      EXPECT_EQ(q[i].state, env.step(q[i - 1].state, q[i - 1].action, unused));
    }
  }
  const auto s0 = CartPoleState::from_vec(q[0].state);
  for (double v : {s0.x, s0.x_dot, s0.theta, s0.theta_dot}) EXPECT_LE(std::abs(v), 0.05);
}

TEST(Passive, StartsANewEpisodeAfterTheHorizon) {
  DiscreteMdpEnv env(make_chain_mdp(3), ActionTable(3, 0));
  ExpertOracle expert = ExpertOracle::of(env);
  LearnerParams p;
  p.budget = 7;
  auto l = run("passive", env, expert, p, 2);
  std::vector<double> seen;
  for (const auto& q : l->state().queries) seen.push_back(q.state[0]);
  EXPECT_EQ(seen, (std::vector<double>{0, 1, 2, 0, 1, 2, 0}));
}

TEST(UniformPool, NeedsAUniformSampler) {
  DiscreteMdpEnv inner(make_chain_mdp(3), ActionTable(3, 0));
  NoSamplerEnv env(inner);
  ExpertOracle expert = ExpertOracle::of(env);
  EXPECT_FALSE(learner_supported("unif-qbc", env));
  EXPECT_TRUE(learner_supported("rail-dw", env));
  EXPECT_THROW(make_learner("unif-qbc", env, expert, {}, RngStream(1, 0)), UnsupportedConfiguration);
  EXPECT_THROW(make_learner("unif-rand", env, expert, {}, RngStream(1, 0)), UnsupportedConfiguration);
  EXPECT_THROW(make_learner("dagger", env, expert, {}, RngStream(1, 0)), ConfigError);
}

TEST(Cba, ZeroThresholdNeverQueriesAndStops) {
  CartPoleEnv env;
  ExpertOracle expert = ExpertOracle::of(env);
  LearnerParams p;
  p.budget = 10;
  p.cba_initial_threshold = 0.0;
  auto l = run("cba", env, expert, p, 3);
  EXPECT_TRUE(l->stopped());
  EXPECT_EQ(l->queries_used(), 0u);
  EXPECT_EQ(expert.query_count(), 0u);
}

TEST(Cba, ColdStartQueriesTheInitialState) {
  DiscreteMdpEnv env(make_chain_mdp(4, 3), ActionTable{0, 0, 0, 0});
  ExpertOracle expert = ExpertOracle::of(env);
  LearnerParams p;
  p.budget = 1;
  CbaLearner l(env, expert, p, RngStream(4, 0));
  l.step();
  ASSERT_EQ(l.queries_used(), 1u);
  EXPECT_EQ(l.state().queries[0].state, StateVec{0.0});
  // the uniform 3-way prediction has confidence 1/3
  ASSERT_EQ(l.confidences().size(), 1u);
  EXPECT_NEAR(l.confidences()[0], 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(l.threshold(), 1.0 / 3.0);
}

TEST(Cba, ThresholdIsMeanMinusStdOfConfidences) {
  RngStream mrng(5, 0);
  auto mdp = make_random_discrete_mdp(6, 4, 6, mrng);
  DiscreteMdpEnv env(mdp, random_action_table(mdp, mrng));
  ExpertOracle expert = ExpertOracle::of(env);
  LearnerParams p;
  p.budget = 6;
  p.cba_initial_threshold = 0.99;
  CbaLearner l(env, expert, p, RngStream(6, 0));
  run_to_budget(l);
  const auto& c = l.confidences();
  ASSERT_FALSE(c.empty());
  double mean = 0.0;
  for (double v : c) mean += v / static_cast<double>(c.size());
  double var = 0.0;
  for (double v : c) var += (v - mean) * (v - mean) / static_cast<double>(c.size());
  EXPECT_NEAR(l.threshold(), mean - std::sqrt(var), 1e-12);
}

TEST(Cba, TwoActionProblemStopsAfterOneQuery) {
  // any two-way prediction has confidence >= 0.5, the threshold after one query
  CartPoleEnv env;
  ExpertOracle expert = ExpertOracle::of(env);
  LearnerParams p;
  p.budget = 150;
  auto l = run("cba", env, expert, p, 7);
  EXPECT_TRUE(l->stopped());
  EXPECT_EQ(l->queries_used(), 1u);
}

TEST(ForwardTraining, SingleStepLearnsTheInitialAction) {
  auto mdp = stay_or_advance();
  mdp.horizon = 1;
  DiscreteMdpEnv env(mdp, ActionTable{1, 1, 1});
  ExpertOracle expert = ExpertOracle::of(env);
  const auto pi = forward_training_active(env, Selector::kDensityQbc, 1, 1, expert, RngStream(8, 0));
  ASSERT_EQ(pi.horizon(), 1u);
  EXPECT_EQ(pi.act(env, {0.0}, 0), 1);
  EXPECT_EQ(expert.query_count(), 1u);
}

TEST(ForwardTraining, LineMatchesExpertValueExactly) {
  const auto mdp = stay_or_advance();
  const ActionTable expert_table{1, 1, 1};
  DiscreteMdpEnv env(mdp, expert_table);
  ExpertOracle expert = ExpertOracle::of(env);
  const auto pi = forward_training_active(env, Selector::kDensityQbc, 3, 1, expert, RngStream(9, 0));
  const auto tab = tabulate(mdp, pi);
  // step t only sees state t - 1, where the expert advanced
  for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(tab(t, t), 1);
  EXPECT_DOUBLE_EQ(exact_value(mdp, tab, 3), 1.0);
  EXPECT_DOUBLE_EQ(exact_value(mdp, expert_table, 3), 1.0);
  EXPECT_EQ(expert.query_count(), 3u);
}

TEST(ForwardTraining, RejectsTooManyIterations) {
  DiscreteMdpEnv env(make_chain_mdp(3), ActionTable(3, 0));
  ExpertOracle expert = ExpertOracle::of(env);
  EXPECT_THROW(forward_training_active(env, Selector::kQbc, 4, 1, expert, RngStream(1, 0)), ContractError);
}

TEST(RailIdealized, SingleIterationFromZeroPolicy) {
  auto mdp = stay_or_advance();
  mdp.horizon = 1;
  DiscreteMdpEnv env(mdp, ActionTable{1, 1, 1});
  ExpertOracle expert = ExpertOracle::of(env);
  const auto run = rail_idealized(env, Selector::kDensityQbc, 1, 1, expert, LinearPolicy::zero(2, 3),
                                  RngStream(10, 0));
  ASSERT_EQ(run.iterates.size(), 2u);
  EXPECT_EQ(run.iterates[0], LinearPolicy::zero(2, 3));
  EXPECT_EQ(run.policy.act(mdp.features(0)), 1);
}

TEST(RailIdealized, IteratesAndBoundOnTheLine) {
  const auto mdp = stay_or_advance();
  DiscreteMdpEnv env(mdp, ActionTable{1, 1, 1});
  ExpertOracle expert = ExpertOracle::of(env);
  LearnerParams p;
  p.reference_episodes = 2;
  const auto run = rail_idealized(env, Selector::kDensityQbc, 3, 2, expert, LinearPolicy::zero(2, 3),
                                  RngStream(11, 0), p);
  EXPECT_EQ(run.iterates.size(), 4u);
  EXPECT_EQ(expert.query_count(), 6u);
  EXPECT_EQ(run.policy, run.iterates.back());
  // iteration 1 sees only state 0 (the zero policy stays put)
  EXPECT_EQ(run.iterates[1].act(mdp.features(0)), 1);
  EXPECT_TRUE(check_theorem1(mdp, ActionTable{1, 1, 1}, run).bound_holds());
}

TEST(RailDw, OneQueryPerStepAndFullPool) {
  CartPoleEnv env;
  ExpertOracle expert = ExpertOracle::of(env);
  LearnerParams p;
  p.budget = 4;
  RailDwLearner l(env, expert, p, RngStream(12, 0));
  for (std::size_t k = 1; k <= 4; ++k) {
    l.step();
    EXPECT_EQ(l.dataset().size(), k);
    EXPECT_EQ(l.queries_used(), k);
    EXPECT_EQ(l.last_pool_size(), 5u * 500u);
  }
  l.step();
  EXPECT_EQ(l.queries_used(), 4u);
  EXPECT_TRUE(l.exhausted());
}

TEST(RailDw, LongerBudgetExtendsTheSameQuerySequence) {
  RngStream mrng(13, 0);
  auto mdp = make_random_discrete_mdp(6, 3, 5, mrng);
  DiscreteMdpEnv env(mdp, random_action_table(mdp, mrng));
  ExpertOracle e1 = ExpertOracle::of(env), e2 = ExpertOracle::of(env);
  LearnerParams p;
  p.budget = 8;
  auto short_run = run("rail-dw", env, e1, p, 14);
  p.budget = 16;
  auto long_run = run("rail-dw", env, e2, p, 14);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(short_run->state().queries[i].state, long_run->state().queries[i].state);
    EXPECT_EQ(short_run->state().queries[i].action, long_run->state().queries[i].action);
  }
}

TEST(RailDw, ReachesExpertValueOnRealizableMdp) {
  // one-hot features make every action table linearly realizable
  RngStream mrng(15, 0);
  auto mdp = make_random_discrete_mdp(5, 3, 4, mrng);
  const ActionTable table = random_action_table(mdp, mrng);
  DiscreteMdpEnv env(mdp, table);
  ExpertOracle expert = ExpertOracle::of(env);
  LearnerParams p;
  p.budget = 40;
  auto l = run("rail-dw", env, expert, p, 16);
  const double v = exact_value(mdp, tabulate(mdp, l->policy()), mdp.horizon);
  EXPECT_NEAR(v, exact_value(mdp, table, mdp.horizon), 1e-12);
}

TEST(Learners, BudgetIsRespectedAndCounted) {
  DiscreteMdpEnv env(make_chain_mdp(4, 3), ActionTable{2, 0, 1, 0});
  for (const auto& name : learner_names()) {
    ExpertOracle expert = ExpertOracle::of(env);
    LearnerParams p;
    p.budget = 9;
    p.per_iter_budget = 2;
    auto l = run(name, env, expert, p, 17);
    EXPECT_LE(l->queries_used(), 9u) << name;
    EXPECT_EQ(l->queries_used(), expert.query_count()) << name;
    EXPECT_EQ(l->state().queries.size(), l->queries_used()) << name;
    if (name != "cba" && name != "rail" && name != "forward-active") {
      EXPECT_EQ(l->queries_used(), 9u) << name;
    }
  }
}

TEST(Learners, DeterministicGivenSeed) {
  CartPoleEnv env;
  for (const char* name : {"rail-dw", "unif-qbc", "passive"}) {
    ExpertOracle e1 = ExpertOracle::of(env), e2 = ExpertOracle::of(env);
    LearnerParams p;
    p.budget = 6;
    auto a = run(name, env, e1, p, 18);
    auto b = run(name, env, e2, p, 18);
    EXPECT_EQ(a->policy().weights(), b->policy().weights()) << name;
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(a->state().queries[i].state, b->state().queries[i].state);
  }
}
