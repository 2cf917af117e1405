#pragma once

// Active imitation learners. Each learner is a state machine whose step()
// poses exactly one expert query (unless the budget is spent or the learner
// has stopped). Rewards are never visible here.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rail/active.hpp"
#include "rail/expert.hpp"

namespace rail {

enum class Selector { kDensityQbc, kQbc, kRandom };

struct LearnerParams {
  std::size_t budget = 150;
  std::size_t committee_size = 5;       // K
  std::size_t pool_episodes = 1;        // rollouts per committee member (RAIL-DW)
  std::size_t bins_per_dim = 10;
  std::size_t uniform_pool_size = 200;  // unif-QBC / unif-RAND pool
  double cba_initial_threshold = 0.9;
  // Idealised RAIL / forward training.
  std::size_t iterations = 0;           // 0: environment horizon
  std::size_t per_iter_budget = 1;
  std::size_t reference_episodes = 5;   // rollouts of the previous iterate per pool
  std::size_t forward_pool_size = 50;   // d^t draws per forward-training pool
  TrainConfig train;
};

struct LearnerState {
  Dataset dataset;
  std::size_t queries_used = 0;
  LinearPolicy policy;
  std::vector<Step> queries;  // raw state and expert answer, in query order
  bool stopped = false;
};

class Learner {
 public:
  Learner(const Environment& env, ExpertOracle& expert, LearnerParams params, RngStream rng)
      : env_(env), expert_(expert), params_(std::move(params)), rng_(rng) {
    env.spec().validate();
    params_.train.validate();
    require(params_.committee_size >= 1, "LearnerParams: committee_size must be >= 1");
    state_.dataset = Dataset(env.feature_dim(), env.spec().num_actions);
    state_.policy = LinearPolicy::zero(env.spec().num_actions, env.feature_dim(), env.name());
  }
  virtual ~Learner() = default;
  Learner(const Learner&) = delete;
  Learner& operator=(const Learner&) = delete;

  virtual std::string name() const = 0;

  void step() {
    if (state_.stopped || state_.queries_used >= params_.budget) return;
    RngStream step_rng = rng_.split(steps_++);
    do_step(step_rng);
  }

  // Action of the current (possibly non-stationary) policy at zero-based step t.
  virtual int act(const StateVec& state, std::size_t /*t*/) const {
    return state_.policy.act(env_.featurize(state));
  }

  const LearnerState& state() const { return state_; }
  const LinearPolicy& policy() const { return state_.policy; }
  const Dataset& dataset() const { return state_.dataset; }
  std::size_t queries_used() const { return state_.queries_used; }
  bool stopped() const { return state_.stopped; }
  bool exhausted() const { return state_.stopped || state_.queries_used >= params_.budget; }
  const LearnerParams& params() const { return params_; }
  const Environment& env() const { return env_; }

 protected:
  virtual void do_step(RngStream& rng) = 0;

  int ask(const StateVec& state) {
    const int a = expert_.query(state);
    require(a >= 0 && static_cast<std::size_t>(a) < env_.spec().num_actions,
            "expert answered with an out-of-range action");
    state_.queries.push_back({state, a});
    ++state_.queries_used;
    return a;
  }

  void add_and_retrain(const StateVec& state, int action) {
    state_.dataset.add(env_.featurize(state), action);
    retrain();
  }

  void retrain() {
    if (state_.dataset.empty()) {
      state_.policy = LinearPolicy::zero(env_.spec().num_actions, env_.feature_dim(), env_.name());
      return;
    }
    state_.policy = train_logistic_report(state_.dataset, params_.train, &state_.policy, env_.name()).policy;
  }

  Committee committee_for(const Dataset& data, RngStream& rng) const {
    if (data.empty())
      return zero_committee(params_.committee_size, env_.spec().num_actions, env_.feature_dim());
    return bootstrap_committee(data, params_.committee_size, rng, params_.train, &state_.policy);
  }

  UnlabeledPool featurize_pool(const std::vector<StateVec>& raw) const {
    UnlabeledPool pool;
    pool.states.reserve(raw.size());
    for (const auto& s : raw) pool.states.push_back(env_.featurize(s));
    return pool;
  }

  // Applies the selector; when the committee agrees everywhere (every score
  // is zero) the choice falls back to a uniform draw from the pool.
  // `excluded` marks pool entries that may not be chosen.
  std::size_t choose(Selector selector, const UnlabeledPool& pool, const Committee& committee,
                     RngStream& rng, const std::vector<bool>* excluded = nullptr) const {
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (!excluded || !(*excluded)[i]) open.push_back(i);
    require(!open.empty(), "active selection over an exhausted pool");
    auto uniform = [&] { return open[rng.uniform_index(open.size())]; };
    if (selector == Selector::kRandom) return uniform();
    std::vector<double> scores;
    if (selector == Selector::kDensityQbc)
      scores = dwqbc_scores(pool, committee, estimate_density(pool, params_.bins_per_dim));
    else
      scores = qbc_scores(pool, committee);
    std::size_t best = open.front();
    for (std::size_t i : open)
      if (scores[i] > scores[best]) best = i;
    if (!(scores[best] > 0.0)) return uniform();
    return best;
  }

  const Environment& env_;
  ExpertOracle& expert_;
  LearnerParams params_;
  RngStream rng_;
  LearnerState state_;
  std::uint64_t steps_ = 0;
};

// Queries the expert along the expert's own trajectory, episode after episode.
class PassiveLearner final : public Learner {
 public:
  using Learner::Learner;
  std::string name() const override { return "passive"; }

 protected:
  void do_step(RngStream& rng) override {
    const std::size_t horizon = env_.spec().horizon;
    if (!has_state_ || t_ >= horizon) {
      episode_rng_ = rng.split("episode");
      current_ = env_.initial_state(episode_rng_);
      t_ = 0;
      has_state_ = true;
    }
    const int a = ask(current_);
    add_and_retrain(current_, a);
    current_ = env_.step(current_, a, episode_rng_);
    ++t_;
  }

 private:
  StateVec current_;
  RngStream episode_rng_;
  std::size_t t_ = 0;
  bool has_state_ = false;
};

// unif-QBC / unif-RAND: selects from a fresh pool of uniformly drawn states.
class UniformPoolLearner final : public Learner {
 public:
  UniformPoolLearner(const Environment& env, ExpertOracle& expert, LearnerParams params,
                     RngStream rng, Selector selector)
      : Learner(env, expert, std::move(params), rng), selector_(selector) {
    if (!env.has_uniform_sampler())
      throw UnsupportedConfiguration(env.name() + " has no uniform state sampler");
    require(selector != Selector::kDensityQbc, "UniformPoolLearner: selector must be qbc or random");
    require(params_.uniform_pool_size >= 1, "UniformPoolLearner: empty pool size");
  }
  std::string name() const override { return selector_ == Selector::kQbc ? "unif-qbc" : "unif-rand"; }

 protected:
  void do_step(RngStream& rng) override {
    RngStream pool_rng = rng.split("pool");
    std::vector<StateVec> raw;
    raw.reserve(params_.uniform_pool_size);
    for (std::size_t i = 0; i < params_.uniform_pool_size; ++i)
      raw.push_back(env_.sample_uniform_state(pool_rng));
    const UnlabeledPool pool = featurize_pool(raw);
    RngStream bag_rng = rng.split("bag");
    RngStream pick_rng = rng.split("pick");
    const Committee committee =
        selector_ == Selector::kRandom ? Committee{} : committee_for(state_.dataset, bag_rng);
    const std::size_t idx = choose(selector_, pool, committee, pick_rng);
    const int a = ask(raw[idx]);
    add_and_retrain(raw[idx], a);
  }

 private:
  Selector selector_;
};

// Confidence-based autonomy: executes the current policy and queries wherever
// its confidence (max class probability) drops below an adaptive threshold.
class CbaLearner final : public Learner {
 public:
  CbaLearner(const Environment& env, ExpertOracle& expert, LearnerParams params, RngStream rng)
      : Learner(env, expert, std::move(params), rng), threshold_(params_.cba_initial_threshold) {}
  std::string name() const override { return "cba"; }

  double threshold() const { return threshold_; }
  const std::vector<double>& confidences() const { return confidences_; }

 protected:
  void do_step(RngStream& rng) override {
    const std::size_t horizon = env_.spec().horizon;
    for (;;) {
      if (!has_state_ || t_ >= horizon) {
        if (has_state_ && queries_this_episode_ == 0) {
          state_.stopped = true;  // a full episode went by without a query
          return;
        }
        episode_rng_ = rng.split(episodes_++);
        current_ = env_.initial_state(episode_rng_);
        t_ = 0;
        queries_this_episode_ = 0;
        has_state_ = true;
      }
      const auto proba = predict_proba(state_.policy, env_.featurize(current_));
      const double confidence = *std::max_element(proba.begin(), proba.end());
      int a;
      const bool query = confidence < threshold_;
      if (query) {
        a = ask(current_);
        add_and_retrain(current_, a);
        confidences_.push_back(confidence);
        update_threshold();
        ++queries_this_episode_;
      } else {
        a = state_.policy.act(env_.featurize(current_));
      }
      current_ = env_.step(current_, a, episode_rng_);
      ++t_;
      if (query) return;
    }
  }

 private:
  // mean - 1 * (population) standard deviation of the logged confidences
  void update_threshold() {
    const double k = static_cast<double>(confidences_.size());
    const double mean = std::accumulate(confidences_.begin(), confidences_.end(), 0.0) / k;
    double ss = 0.0;
    for (double c : confidences_) ss += (c - mean) * (c - mean);
    threshold_ = mean - std::sqrt(ss / k);
  }

  double threshold_;
  std::vector<double> confidences_;
  StateVec current_;
  RngStream episode_rng_;
  std::size_t t_ = 0;
  std::size_t queries_this_episode_ = 0;
  std::uint64_t episodes_ = 0;
  bool has_state_ = false;
};

// RAIL-DW and its qbc / random selector variants: one query per iteration. The bagged
// committee's rollouts sample the posterior state distribution d_{D_t}; the
// selector picks one of those states; data accumulates across iterations.
class RailDwLearner final : public Learner {
 public:
  RailDwLearner(const Environment& env, ExpertOracle& expert, LearnerParams params, RngStream rng,
                Selector selector = Selector::kDensityQbc)
      : Learner(env, expert, std::move(params), rng), selector_(selector) {
    require(params_.pool_episodes >= 1, "RailDwLearner: pool_episodes must be >= 1");
  }

  std::string name() const override {
    switch (selector_) {
      case Selector::kDensityQbc: return "rail-dw";
      case Selector::kQbc: return "rail-qbc";
      case Selector::kRandom: return "rail-rand";
    }
    return "rail-dw";
  }

  std::size_t last_pool_size() const { return last_pool_size_; }

 protected:
  void do_step(RngStream& rng) override {
    RngStream bag_rng = rng.split("bag");
    const Committee committee = committee_for(state_.dataset, bag_rng);
    const std::size_t horizon = env_.spec().horizon;
    std::vector<StateVec> raw;
    raw.reserve(committee.size() * params_.pool_episodes * horizon);
    RngStream roll_rng = rng.split("rollout");
    for (std::size_t m = 0; m < committee.size(); ++m)
      for (std::size_t e = 0; e < params_.pool_episodes; ++e) {
        RngStream episode = roll_rng.split(m * params_.pool_episodes + e);
        auto traj = rollout(env_, greedy(env_, committee.members[m]), horizon, episode);
        for (auto& st : traj.steps) raw.push_back(std::move(st.state));
      }
    last_pool_size_ = raw.size();
    const UnlabeledPool pool = featurize_pool(raw);
    RngStream pick_rng = rng.split("pick");
    const std::size_t idx = choose(selector_, pool, committee, pick_rng);
    const int a = ask(raw[idx]);
    add_and_retrain(raw[idx], a);
  }

 private:
  Selector selector_;
  std::size_t last_pool_size_ = 0;
};

// Shared machinery of the two idealised reductions: T iterations, each running
// the i.i.d. active learner for per_iter_budget queries on a fixed pool drawn
// from the distribution that iteration prescribes, with a fresh data set.
class IterativeReductionLearner : public Learner {
 public:
  IterativeReductionLearner(const Environment& env, ExpertOracle& expert, LearnerParams params,
                            RngStream rng, Selector selector)
      : Learner(env, expert, std::move(params), rng), selector_(selector) {
    if (params_.iterations == 0) params_.iterations = env.spec().horizon;
    require(params_.per_iter_budget >= 1, "per_iter_budget must be >= 1");
    iteration_data_ = Dataset(env.feature_dim(), env.spec().num_actions);
  }

  std::size_t iterations() const { return params_.iterations; }
  std::size_t completed_iterations() const { return completed_; }

 protected:
  virtual std::vector<StateVec> draw_pool(RngStream& rng) = 0;
  virtual void finish_iteration(LinearPolicy trained) = 0;

  void do_step(RngStream& rng) override {
    if (completed_ >= params_.iterations) {
      state_.stopped = true;
      return;
    }
    if (pool_raw_.empty() || std::all_of(used_.begin(), used_.end(), [](bool u) { return u; })) {
      RngStream pool_rng = rng.split("pool");
      pool_raw_ = draw_pool(pool_rng);
      pool_ = featurize_pool(pool_raw_);
      used_.assign(pool_raw_.size(), false);
    }
    RngStream bag_rng = rng.split("bag");
    const Committee committee =
        iteration_data_.empty()
            ? zero_committee(params_.committee_size, env_.spec().num_actions, env_.feature_dim())
            : bootstrap_committee(iteration_data_, params_.committee_size, bag_rng, params_.train);
    RngStream pick_rng = rng.split("pick");
    const std::size_t idx = choose(selector_, pool_, committee, pick_rng, &used_);
    used_[idx] = true;
    const int a = ask(pool_raw_[idx]);
    iteration_data_.add(env_.featurize(pool_raw_[idx]), a);
    state_.dataset = iteration_data_;
    if (iteration_data_.size() >= params_.per_iter_budget) {
      LinearPolicy trained = train_logistic_report(iteration_data_, params_.train, nullptr, env_.name()).policy;
      ++completed_;
      iteration_data_ = Dataset(env_.feature_dim(), env_.spec().num_actions);
      pool_raw_.clear();
      finish_iteration(std::move(trained));
    }
  }

  Selector selector_;
  std::size_t completed_ = 0;
  Dataset iteration_data_;
  std::vector<StateVec> pool_raw_;
  UnlabeledPool pool_;
  std::vector<bool> used_;
};

// Idealised RAIL: iteration t learns a stationary policy on d of iterate t-1.
class RailIdealizedLearner final : public IterativeReductionLearner {
 public:
  RailIdealizedLearner(const Environment& env, ExpertOracle& expert, LearnerParams params,
                       RngStream rng, Selector selector = Selector::kDensityQbc,
                       std::optional<LinearPolicy> initial = std::nullopt)
      : IterativeReductionLearner(env, expert, std::move(params), rng, selector) {
    if (initial) state_.policy = *initial;
    iterates_.push_back(state_.policy);
  }
  std::string name() const override { return "rail"; }

  // iterates()[0] is the initial policy, iterates()[t] the policy of iteration t.
  const std::vector<LinearPolicy>& iterates() const { return iterates_; }

 protected:
  std::vector<StateVec> draw_pool(RngStream& rng) override {
    std::vector<StateVec> raw;
    const std::size_t horizon = env_.spec().horizon;
    for (std::size_t e = 0; e < params_.reference_episodes; ++e) {
      RngStream episode = rng.split(e);
      auto traj = rollout(env_, greedy(env_, state_.policy), horizon, episode);
      for (auto& st : traj.steps) raw.push_back(std::move(st.state));
    }
    return raw;
  }

  void finish_iteration(LinearPolicy trained) override {
    state_.policy = std::move(trained);
    iterates_.push_back(state_.policy);
  }

 private:
  std::vector<LinearPolicy> iterates_;
};

struct NonStationaryPolicy {
  std::vector<LinearPolicy> steps;  // one policy per time step

  std::size_t horizon() const { return steps.size(); }
  int act(const Environment& env, const StateVec& s, std::size_t t) const {
    return steps.at(t).act(env.featurize(s));
  }
};

// Active forward training: iteration t learns pi_t on d^t of (pi_1..pi_{t-1}).
class ForwardTrainingLearner final : public IterativeReductionLearner {
 public:
  ForwardTrainingLearner(const Environment& env, ExpertOracle& expert, LearnerParams params,
                         RngStream rng, Selector selector = Selector::kDensityQbc)
      : IterativeReductionLearner(env, expert, std::move(params), rng, selector) {
    require(params_.iterations <= env.spec().horizon,
            "forward training: iterations cannot exceed the horizon");
    policy_.steps.assign(env.spec().horizon,
                         LinearPolicy::zero(env.spec().num_actions, env.feature_dim(), env.name()));
  }
  std::string name() const override { return "forward-active"; }

  int act(const StateVec& state, std::size_t t) const override { return policy_.act(env_, state, t); }

  const NonStationaryPolicy& nonstationary_policy() const { return policy_; }

 protected:
  std::vector<StateVec> draw_pool(RngStream& rng) override {
    const auto partial = [this](const StateVec& s, std::size_t t) { return policy_.act(env_, s, t); };
    return sample_d_t(env_, partial, completed_ + 1, params_.forward_pool_size, rng);
  }

  void finish_iteration(LinearPolicy trained) override {
    policy_.steps[completed_ - 1] = trained;
    state_.policy = std::move(trained);
  }

 private:
  NonStationaryPolicy policy_;
};

inline std::vector<std::string> learner_names() {
  return {"passive", "unif-qbc", "unif-rand", "cba", "forward-active",
          "rail",    "rail-dw",  "rail-qbc",  "rail-rand"};
}

inline bool learner_supported(std::string_view name, const Environment& env) {
  if (name == "unif-qbc" || name == "unif-rand") return env.has_uniform_sampler();
  return true;
}

inline std::unique_ptr<Learner> make_learner(std::string_view name, const Environment& env,
                                             ExpertOracle& expert, const LearnerParams& params,
                                             RngStream rng) {
  if (name == "passive") return std::make_unique<PassiveLearner>(env, expert, params, rng);
  if (name == "unif-qbc")
    return std::make_unique<UniformPoolLearner>(env, expert, params, rng, Selector::kQbc);
  if (name == "unif-rand")
    return std::make_unique<UniformPoolLearner>(env, expert, params, rng, Selector::kRandom);
  if (name == "cba") return std::make_unique<CbaLearner>(env, expert, params, rng);
  if (name == "forward-active") return std::make_unique<ForwardTrainingLearner>(env, expert, params, rng);
  if (name == "rail") return std::make_unique<RailIdealizedLearner>(env, expert, params, rng);
  if (name == "rail-dw")
    return std::make_unique<RailDwLearner>(env, expert, params, rng, Selector::kDensityQbc);
  if (name == "rail-qbc") return std::make_unique<RailDwLearner>(env, expert, params, rng, Selector::kQbc);
  if (name == "rail-rand")
    return std::make_unique<RailDwLearner>(env, expert, params, rng, Selector::kRandom);
  throw ConfigError("unknown learner '" + std::string(name) + "'");
}

// Runs a learner until its budget is spent or it stops.
inline void run_to_budget(Learner& learner) {
  while (!learner.exhausted()) learner.step();
}

struct RailRun {
  LinearPolicy policy;                  // final iterate
  std::vector<LinearPolicy> iterates;   // initial policy, then one per iteration
};

inline RailRun rail_idealized(const Environment& env, Selector selector, std::size_t iterations,
                              std::size_t per_iter_budget, ExpertOracle& expert,
                              const LinearPolicy& initial, RngStream rng, LearnerParams params = {}) {
  require(iterations >= 1, "rail_idealized: T must be >= 1");
  params.iterations = iterations;
  params.per_iter_budget = per_iter_budget;
  params.budget = iterations * per_iter_budget;
  RailIdealizedLearner learner(env, expert, params, rng, selector, initial);
  run_to_budget(learner);
  return {learner.policy(), learner.iterates()};
}

inline NonStationaryPolicy forward_training_active(const Environment& env, Selector selector,
                                                   std::size_t iterations, std::size_t per_iter_budget,
                                                   ExpertOracle& expert, RngStream rng,
                                                   LearnerParams params = {}) {
  require(iterations >= 1, "forward_training_active: T must be >= 1");
  params.iterations = iterations;
  params.per_iter_budget = per_iter_budget;
  params.budget = iterations * per_iter_budget;
  ForwardTrainingLearner learner(env, expert, params, rng, selector);
  run_to_budget(learner);
  return learner.nonstationary_policy();
}

}  // namespace rail
