#pragma once

// Explicit-table MDPs small enough for exhaustive trajectory enumeration.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rail/core.hpp"

namespace rail {

struct DiscreteMdp {
  static constexpr std::size_t kMaxStates = 12;
  static constexpr std::size_t kMaxActions = 4;
  static constexpr std::size_t kMaxHorizon = 6;

  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t horizon = 0;
  // transition[(s * num_actions + a) * num_states + s']
  std::vector<double> transition;
  std::vector<double> reward;   // R(s) in [0, 1]
  std::vector<double> initial;  // I(s)

  double p(std::size_t s, std::size_t a, std::size_t next) const {
    return transition[(s * num_actions + a) * num_states + next];
  }
  double& p(std::size_t s, std::size_t a, std::size_t next) {
    return transition[(s * num_actions + a) * num_states + next];
  }

  // One-hot encoding of a state index.
  StateVec features(std::size_t s) const {
    StateVec phi(num_states, 0.0);
    phi.at(s) = 1.0;
    return phi;
  }

  void validate() const {
    require(num_states >= 1 && num_states <= kMaxStates, "DiscreteMdp: need 1 <= n <= 12");
    require(num_actions >= 2 && num_actions <= kMaxActions, "DiscreteMdp: need 2 <= m <= 4");
    require(horizon >= 1 && horizon <= kMaxHorizon, "DiscreteMdp: need 1 <= T <= 6");
    require(transition.size() == num_states * num_actions * num_states,
            "DiscreteMdp: transition tensor has wrong size");
    require(reward.size() == num_states && initial.size() == num_states,
            "DiscreteMdp: reward/initial have wrong size");
    for (std::size_t s = 0; s < num_states; ++s) {
      require(reward[s] >= 0.0 && reward[s] <= 1.0, "DiscreteMdp: reward outside [0, 1]");
      for (std::size_t a = 0; a < num_actions; ++a) {
        double row = 0.0;
        for (std::size_t n = 0; n < num_states; ++n) {
          require(p(s, a, n) >= 0.0, "DiscreteMdp: negative transition probability");
          row += p(s, a, n);
        }
        require(std::abs(row - 1.0) <= 1e-12, "DiscreteMdp: transition row does not sum to 1");
      }
    }
    double mass = 0.0;
    for (double v : initial) {
      require(v >= 0.0, "DiscreteMdp: negative initial probability");
      mass += v;
    }
    require(std::abs(mass - 1.0) <= 1e-12, "DiscreteMdp: initial distribution does not sum to 1");
  }
};

namespace detail {

// Dirichlet(alpha, ..., alpha) draw, renormalised so the sum is 1 to within
// a couple of ulps.
inline std::vector<double> dirichlet(std::size_t k, double alpha, RngStream& rng) {
  std::vector<double> v(k);
  double sum = 0.0;
  for (auto& x : v) {
    x = rng.gamma(alpha);
    sum += x;
  }
  for (auto& x : v) x /= sum;
  // push residual rounding into the largest entry
  double total = 0.0;
  std::size_t big = 0;
  for (std::size_t i = 0; i < k; ++i) {
    total += v[i];
    if (v[i] > v[big]) big = i;
  }
  v[big] += 1.0 - total;
  return v;
}

}  // namespace detail

inline DiscreteMdp make_random_discrete_mdp(std::size_t n, std::size_t m, std::size_t horizon,
                                            RngStream& rng, double alpha = 1.0) {
  require(n >= 1 && n <= DiscreteMdp::kMaxStates, "make_random_discrete_mdp: n out of range");
  require(m >= 2 && m <= DiscreteMdp::kMaxActions, "make_random_discrete_mdp: m out of range");
  require(horizon >= 1 && horizon <= DiscreteMdp::kMaxHorizon,
          "make_random_discrete_mdp: T out of range");
  DiscreteMdp mdp;
  mdp.num_states = n;
  mdp.num_actions = m;
  mdp.horizon = horizon;
  mdp.transition.resize(n * m * n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t a = 0; a < m; ++a) {
      const auto row = detail::dirichlet(n, alpha, rng);
      for (std::size_t k = 0; k < n; ++k) mdp.p(s, a, k) = row[k];
    }
  mdp.reward.resize(n);
  for (auto& r : mdp.reward) r = rng.uniform();
  mdp.initial = detail::dirichlet(n, alpha, rng);
  mdp.validate();
  return mdp;
}

// Deterministic left-to-right chain. Action 0 advances, every other action
// stays put; every state pays reward 1 and the horizon equals the length.
inline DiscreteMdp make_chain_mdp(std::size_t length, std::size_t num_actions = 2) {
  require(length >= 1 && length <= DiscreteMdp::kMaxHorizon,
          "make_chain_mdp: length must be in [1, 6]");
  DiscreteMdp mdp;
  mdp.num_states = length;
  mdp.num_actions = num_actions;
  mdp.horizon = length;
  mdp.transition.assign(length * num_actions * length, 0.0);
  for (std::size_t s = 0; s < length; ++s) {
    mdp.p(s, 0, std::min(s + 1, length - 1)) = 1.0;
    for (std::size_t a = 1; a < num_actions; ++a) mdp.p(s, a, s) = 1.0;
  }
  mdp.reward.assign(length, 1.0);
  mdp.initial.assign(length, 0.0);
  mdp.initial[0] = 1.0;
  mdp.validate();
  return mdp;
}

// A deterministic stationary policy over state indices.
using ActionTable = std::vector<int>;

inline ActionTable random_action_table(const DiscreteMdp& mdp, RngStream& rng) {
  ActionTable table(mdp.num_states);
  for (auto& a : table) a = static_cast<int>(rng.uniform_index(mdp.num_actions));
  return table;
}

// Raw state is the one-element vector {index}; features are one-hot.
class DiscreteMdpEnv final : public Environment {
 public:
  DiscreteMdpEnv(DiscreteMdp mdp, ActionTable expert, std::string name = "random-mdp")
      : mdp_(std::move(mdp)), expert_(std::move(expert)), name_(std::move(name)) {
    mdp_.validate();
    require(expert_.size() == mdp_.num_states, "DiscreteMdpEnv: expert table size mismatch");
    for (int a : expert_)
      require(a >= 0 && static_cast<std::size_t>(a) < mdp_.num_actions,
              "DiscreteMdpEnv: expert action out of range");
    spec_ = {1, mdp_.num_actions, mdp_.horizon};
  }

  const DiscreteMdp& mdp() const { return mdp_; }
  const ActionTable& expert_table() const { return expert_; }

  std::string name() const override { return name_; }
  const EnvSpec& spec() const override { return spec_; }
  std::size_t feature_dim() const override { return mdp_.num_states; }

  static std::size_t index(const StateVec& s) { return static_cast<std::size_t>(s.at(0)); }

  bool valid_state(const StateVec& s) const override {
    return s.size() == 1 && s[0] >= 0.0 && s[0] < static_cast<double>(mdp_.num_states) &&
           s[0] == std::floor(s[0]);
  }

  StateVec initial_state(RngStream& rng) const override {
    return {static_cast<double>(draw(mdp_.initial.data(), rng))};
  }

  StateVec step(const StateVec& state, int action, RngStream& rng) const override {
    require(action >= 0 && static_cast<std::size_t>(action) < mdp_.num_actions,
            "DiscreteMdpEnv: action out of range");
    const std::size_t s = index(state);
    const double* row =
        &mdp_.transition[(s * mdp_.num_actions + static_cast<std::size_t>(action)) *
                         mdp_.num_states];
    return {static_cast<double>(draw(row, rng))};
  }

  double reward(const StateVec& state, int) const override { return mdp_.reward.at(index(state)); }

  StateVec featurize(const StateVec& state) const override {
    require(valid_state(state), "DiscreteMdpEnv: invalid state");
    return mdp_.features(index(state));
  }

  int expert_action(const StateVec& state) const override { return expert_.at(index(state)); }

  bool has_uniform_sampler() const override { return true; }
  StateVec sample_uniform_state(RngStream& rng) const override {
    return {static_cast<double>(rng.uniform_index(mdp_.num_states))};
  }

 private:
  std::size_t draw(const double* probs, RngStream& rng) const {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t k = 0; k < mdp_.num_states; ++k) {
      if (probs[k] <= 0.0) continue;
      acc += probs[k];
      last = k;
      if (u < acc) return k;
    }
    return last;
  }

  DiscreteMdp mdp_;
  ActionTable expert_;
  std::string name_;
  EnvSpec spec_;
};

}  // namespace rail
