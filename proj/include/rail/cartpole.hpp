#pragma once

// Cart-pole with the "fall and keep going" modification: episodes run for a
// fixed number of steps, and once the pole is horizontal or the cart leaves
// the track the state is absorbing.

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "rail/core.hpp"

namespace rail {

struct CartPoleState {
  double x = 0.0;          // cart position (m)
  double x_dot = 0.0;      // cart velocity (m/s)
  double theta = 0.0;      // pole angle from vertical (rad), positive leans right
  double theta_dot = 0.0;  // pole angular velocity (rad/s)

  static CartPoleState from_vec(const StateVec& s) {
    require(s.size() == 4, "CartPoleState: expected 4 values");
    return {s[0], s[1], s[2], s[3]};
  }
  StateVec to_vec() const { return {x, x_dot, theta, theta_dot}; }
};

enum class CartAction : int { kLeft = 0, kRight = 1 };

// Classic benchmark constants (Barto, Sutton & Anderson).
struct CartPoleParams {
  double gravity = 9.8;
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double half_length = 0.5;
  double force = 10.0;
  double dt = 0.02;
  double track_limit = 2.4;
  double fallen_angle = std::numbers::pi / 2.0;
};

inline bool cartpole_fallen(const CartPoleState& s, const CartPoleParams& p = {}) {
  return std::abs(s.theta) >= p.fallen_angle;
}

inline bool cartpole_out_of_bounds(const CartPoleState& s, const CartPoleParams& p = {}) {
  return std::abs(s.x) > p.track_limit;
}

inline bool cartpole_absorbing(const CartPoleState& s, const CartPoleParams& p = {}) {
  return cartpole_fallen(s, p) || cartpole_out_of_bounds(s, p);
}

// One Euler step. A state that is already fallen or out of bounds is returned
// unchanged; a pole that falls during the step comes to rest horizontal.
inline CartPoleState cartpole_step(const CartPoleState& s, CartAction action,
                                   const CartPoleParams& p = {}) {
  if (cartpole_absorbing(s, p)) return s;
  const double f = action == CartAction::kRight ? p.force : -p.force;
  const double total_mass = p.cart_mass + p.pole_mass;
  CartPoleState next = s;
  const double pole_ml = p.pole_mass * p.half_length;
  const double cos_t = std::cos(s.theta);
  const double sin_t = std::sin(s.theta);
  const double temp = (f + pole_ml * s.theta_dot * s.theta_dot * sin_t) / total_mass;
  const double theta_acc =
      (p.gravity * sin_t - cos_t * temp) /
      (p.half_length * (4.0 / 3.0 - p.pole_mass * cos_t * cos_t / total_mass));
  const double x_acc = temp - pole_ml * theta_acc * cos_t / total_mass;

  next.x = s.x + p.dt * s.x_dot;
  next.x_dot = s.x_dot + p.dt * x_acc;
  next.theta = s.theta + p.dt * s.theta_dot;
  next.theta_dot = s.theta_dot + p.dt * theta_acc;
  if (cartpole_fallen(next, p)) {
    next.theta = std::copysign(p.fallen_angle, next.theta);
    next.theta_dot = 0.0;
  }
  return next;
}

inline double cartpole_reward(const CartPoleState& s, const CartPoleParams& p = {}) {
  return (std::abs(s.theta) < p.fallen_angle && std::abs(s.x) <= p.track_limit) ? 1.0 : -1.0;
}

// Linear state feedback; pushes right iff the score is strictly positive, so
// the all-zero state maps to left.
struct CartPoleExpert {
  std::array<double, 4> gains{1.0, 2.0, 12.0, 2.0};  // x, x_dot, theta, theta_dot

  double score(const CartPoleState& s) const {
    return gains[0] * s.x + gains[1] * s.x_dot + gains[2] * s.theta + gains[3] * s.theta_dot;
  }
  CartAction operator()(const CartPoleState& s) const {
    return score(s) > 0.0 ? CartAction::kRight : CartAction::kLeft;
  }
};

inline CartAction cartpole_expert(const CartPoleState& s) { return CartPoleExpert{}(s); }

struct CartPoleConfig {
  std::size_t horizon = 500;
  double start_radius = 0.05;  // s1 ~ U[-r, r]^4
  // Ranges for the unif-* baselines; wide enough to include fallen and
  // out-of-bounds states.
  double uniform_x = 3.0;
  double uniform_x_dot = 3.0;
  double uniform_theta = std::numbers::pi;
  double uniform_theta_dot = 4.0;
};

class CartPoleEnv final : public Environment {
 public:
  explicit CartPoleEnv(CartPoleConfig config = {}) : config_(config) {
    spec_ = {4, 2, config.horizon};
    spec_.validate();
  }

  std::string name() const override { return "cartpole"; }
  const EnvSpec& spec() const override { return spec_; }
  std::size_t feature_dim() const override { return 5; }
  const CartPoleConfig& config() const { return config_; }

  StateVec initial_state(RngStream& rng) const override {
    const double r = config_.start_radius;
    StateVec s(4);
    for (auto& v : s) v = rng.uniform(-r, r);
    return s;
  }

  StateVec step(const StateVec& state, int action, RngStream&) const override {
    require(action == 0 || action == 1, "cartpole: action must be 0 (left) or 1 (right)");
    return cartpole_step(CartPoleState::from_vec(state), static_cast<CartAction>(action)).to_vec();
  }

  double reward(const StateVec& state, int) const override {
    return cartpole_reward(CartPoleState::from_vec(state));
  }

  // Raw variables plus a bias term.
  StateVec featurize(const StateVec& state) const override {
    require(valid_state(state), "cartpole: featurize expects a finite 4-vector");
    return {state[0], state[1], state[2], state[3], 1.0};
  }

  int expert_action(const StateVec& state) const override {
    return static_cast<int>(expert_(CartPoleState::from_vec(state)));
  }

  bool has_uniform_sampler() const override { return true; }
  StateVec sample_uniform_state(RngStream& rng) const override {
    return {rng.uniform(-config_.uniform_x, config_.uniform_x),
            rng.uniform(-config_.uniform_x_dot, config_.uniform_x_dot),
            rng.uniform(-config_.uniform_theta, config_.uniform_theta),
            rng.uniform(-config_.uniform_theta_dot, config_.uniform_theta_dot)};
  }

  std::vector<std::string> action_labels() const override { return {"left", "right"}; }

  std::vector<std::pair<std::string, double>> render_fields(const StateVec& s) const override {
    return {{"x", s.at(0)}, {"theta", s.at(2)}};
  }

 private:
  CartPoleConfig config_;
  EnvSpec spec_;
  CartPoleExpert expert_;
};

}  // namespace rail
