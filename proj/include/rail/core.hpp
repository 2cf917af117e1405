#pragma once

// Episodic MDP abstraction: environments, rollouts, sampling from the state
// distributions a policy induces, and Monte-Carlo value estimates.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "rail/error.hpp"
#include "rail/rng.hpp"

namespace rail {

using StateVec = std::vector<double>;

struct EnvSpec {
  std::size_t state_dim = 1;    // length of the raw state vector
  std::size_t num_actions = 2;
  std::size_t horizon = 1;

  void validate() const {
    require(state_dim >= 1, "EnvSpec: state_dim must be >= 1");
    require(num_actions >= 2, "EnvSpec: num_actions must be >= 2");
    require(horizon >= 1, "EnvSpec: horizon must be >= 1");
  }
};

inline bool all_finite(const StateVec& s) {
  for (double v : s)
    if (!std::isfinite(v)) return false;
  return true;
}

struct Step {
  StateVec state;
  int action = 0;
};

struct Trajectory {
  std::vector<Step> steps;
  std::vector<double> rewards;  // empty, or one per step

  std::size_t size() const { return steps.size(); }
  double total_reward() const {
    double sum = 0.0;
    for (double r : rewards) sum += r;
    return sum;
  }
};

// A fixed-horizon episodic environment over raw state vectors. States are
// plain values: step() is a pure function of (state, action, rng), so any
// state the simulator produced can be stored, shown to the expert, and
// resumed from. Terminal conditions are absorbing dynamics, never truncation.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual const EnvSpec& spec() const = 0;
  virtual std::size_t feature_dim() const = 0;

  virtual StateVec initial_state(RngStream& rng) const = 0;
  virtual StateVec step(const StateVec& state, int action, RngStream& rng) const = 0;
  virtual double reward(const StateVec& state, int action) const = 0;

  virtual StateVec featurize(const StateVec& state) const = 0;
  virtual int expert_action(const StateVec& state) const = 0;

  virtual bool valid_state(const StateVec& state) const {
    return state.size() == spec().state_dim && all_finite(state);
  }

  // Uniform distribution over the state space, used by the unif-* baselines.
  virtual bool has_uniform_sampler() const { return false; }
  virtual StateVec sample_uniform_state(RngStream&) const {
    throw UnsupportedConfiguration(name() + ": no uniform state sampler");
  }

  virtual std::vector<std::string> action_labels() const {
    std::vector<std::string> labels;
    for (std::size_t a = 0; a < spec().num_actions; ++a) labels.push_back(std::to_string(a));
    return labels;
  }

  // Named scalar fields a human-facing view needs to draw the state.
  virtual std::vector<std::pair<std::string, double>> render_fields(const StateVec&) const {
    return {};
  }

  // True when the natural performance metric is per-step accuracy
  // (value / horizon) rather than total reward.
  virtual bool reports_accuracy() const { return false; }
};

template <class P>
concept TimedPolicy = std::is_invocable_r_v<int, P&, const StateVec&, std::size_t>;

template <class P>
concept StationaryPolicy = std::is_invocable_r_v<int, P&, const StateVec&>;

template <class P>
concept PolicyFn = TimedPolicy<P> || StationaryPolicy<P>;

namespace detail {

template <PolicyFn P>
int choose(P& policy, const StateVec& s, std::size_t t, std::size_t num_actions) {
  int a;
  if constexpr (TimedPolicy<P>)
    a = policy(s, t);
  else
    a = policy(s);
  if (a < 0 || static_cast<std::size_t>(a) >= num_actions)
    throw ContractError("policy returned out-of-range action " + std::to_string(a));
  return a;
}

}  // namespace detail

// Runs `policy` for exactly `horizon` steps from s1 ~ I. Timed policies
// receive the zero-based step index.
template <PolicyFn P>
Trajectory rollout(const Environment& env, P&& policy, std::size_t horizon, RngStream& rng) {
  Trajectory traj;
  if (horizon == 0) return traj;
  traj.steps.reserve(horizon);
  traj.rewards.reserve(horizon);
  const std::size_t num_actions = env.spec().num_actions;
  StateVec s = env.initial_state(rng);
  for (std::size_t t = 0; t < horizon; ++t) {
    const int a = detail::choose(policy, s, t, num_actions);
    traj.rewards.push_back(env.reward(s, a));
    StateVec next = (t + 1 < horizon) ? env.step(s, a, rng) : StateVec{};
    traj.steps.push_back({std::move(s), a});
    s = std::move(next);
  }
  return traj;
}

// State at (one-based) time t of a rollout, simulating only t - 1 transitions.
template <PolicyFn P>
StateVec state_at(const Environment& env, P& policy, std::size_t t, RngStream& rng) {
  const std::size_t num_actions = env.spec().num_actions;
  StateVec s = env.initial_state(rng);
  for (std::size_t k = 0; k + 1 < t; ++k) {
    const int a = detail::choose(policy, s, k, num_actions);
    s = env.step(s, a, rng);
  }
  return s;
}

// n independent draws from d_pi^t (one-based t).
template <PolicyFn P>
std::vector<StateVec> sample_d_t(const Environment& env, P&& policy, std::size_t t, std::size_t n,
                                 RngStream& rng) {
  const std::size_t horizon = env.spec().horizon;
  if (t < 1 || t > horizon)
    throw ContractError("sample_d_t: t=" + std::to_string(t) + " outside [1, " +
                        std::to_string(horizon) + "]");
  std::vector<StateVec> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream episode = rng.split(rng.next_u64());
    out.push_back(state_at(env, policy, t, episode));
  }
  return out;
}

// n independent draws from d_pi: t ~ U{1..T}, then a fresh rollout to time t.
template <PolicyFn P>
std::vector<StateVec> sample_d_pi(const Environment& env, P&& policy, std::size_t n,
                                  RngStream& rng) {
  const std::size_t horizon = env.spec().horizon;
  std::vector<StateVec> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t t = 1 + rng.uniform_index(horizon);
    RngStream episode = rng.split(rng.next_u64());
    out.push_back(state_at(env, policy, t, episode));
  }
  return out;
}

struct ValueEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t episodes = 0;
  bool degenerate = false;  // a single episode: no spread estimate
};

template <PolicyFn P>
ValueEstimate estimate_value(const Environment& env, P&& policy, std::size_t episodes,
                             RngStream& rng) {
  require(episodes >= 1, "estimate_value: episodes must be >= 1");
  const std::size_t horizon = env.spec().horizon;
  std::vector<double> totals;
  totals.reserve(episodes);
  for (std::size_t i = 0; i < episodes; ++i) {
    RngStream episode = rng.split(rng.next_u64());
    totals.push_back(rollout(env, policy, horizon, episode).total_reward());
  }
  ValueEstimate est;
  est.episodes = episodes;
  double sum = 0.0;
  for (double v : totals) sum += v;
  est.mean = sum / static_cast<double>(episodes);
  if (episodes == 1) {
    est.degenerate = true;
    return est;
  }
  double ss = 0.0;
  for (double v : totals) ss += (v - est.mean) * (v - est.mean);
  est.std_error =
      std::sqrt(ss / static_cast<double>(episodes - 1)) / std::sqrt(static_cast<double>(episodes));
  return est;
}

}  // namespace rail
