#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rail/core.hpp"

namespace rail {

// Multiclass linear scorer: action = argmax_a w_a . phi, ties to the lowest
// index. Weights are stored row-major, one row per action.
class LinearPolicy {
 public:
  LinearPolicy() = default;
  LinearPolicy(std::size_t num_actions, std::size_t feature_dim, std::string feature_map = {})
      : num_actions_(num_actions), feature_dim_(feature_dim),
        weights_(num_actions * feature_dim, 0.0), feature_map_(std::move(feature_map)) {
    require(num_actions >= 1 && feature_dim >= 1, "LinearPolicy: empty shape");
  }
  LinearPolicy(std::size_t num_actions, std::size_t feature_dim, std::vector<double> weights,
               std::string feature_map = {})
      : num_actions_(num_actions), feature_dim_(feature_dim), weights_(std::move(weights)),
        feature_map_(std::move(feature_map)) {
    require(weights_.size() == num_actions * feature_dim, "LinearPolicy: weight count mismatch");
    require(all_finite(weights_), "LinearPolicy: non-finite weight");
  }

  // Untrained cold-start policy: all scores tie, so it always picks action 0
  // and predicts the uniform distribution.
  static LinearPolicy zero(std::size_t num_actions, std::size_t feature_dim,
                           std::string feature_map = {}) {
    return LinearPolicy(num_actions, feature_dim, std::move(feature_map));
  }

  std::size_t num_actions() const { return num_actions_; }
  std::size_t feature_dim() const { return feature_dim_; }
  const std::string& feature_map() const { return feature_map_; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& weights() { return weights_; }
  double weight(std::size_t action, std::size_t j) const { return weights_[action * feature_dim_ + j]; }

  std::vector<double> scores(const StateVec& phi) const {
    require(phi.size() == feature_dim_, "LinearPolicy: feature dimension mismatch");
    std::vector<double> out(num_actions_, 0.0);
    for (std::size_t a = 0; a < num_actions_; ++a) {
      const double* w = &weights_[a * feature_dim_];
      double s = 0.0;
      for (std::size_t j = 0; j < feature_dim_; ++j) s += w[j] * phi[j];
      out[a] = s;
    }
    return out;
  }

  int act(const StateVec& phi) const {
    const auto s = scores(phi);
    return static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
  }

  bool operator==(const LinearPolicy&) const = default;

 private:
  std::size_t num_actions_ = 0;
  std::size_t feature_dim_ = 0;
  std::vector<double> weights_;
  std::string feature_map_;
};

// Softmax of the row scores, max-shifted for stability.
inline std::vector<double> predict_proba(const LinearPolicy& policy, const StateVec& phi) {
  auto p = policy.scores(phi);
  const double top = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (auto& v : p) {
    v = std::exp(v - top);
    z += v;
  }
  for (auto& v : p) v /= z;
  return p;
}

// Adapts a policy over features into a policy over raw environment states.
inline auto greedy(const Environment& env, const LinearPolicy& policy) {
  return [&env, &policy](const StateVec& s) { return policy.act(env.featurize(s)); };
}

struct Example {
  StateVec features;
  int label = 0;
};

// Labelled (features, expert action) pairs in insertion order.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t feature_dim, std::size_t num_actions)
      : feature_dim_(feature_dim), num_actions_(num_actions) {}

  void add(StateVec features, int label) {
    if (examples_.empty() && feature_dim_ == 0) feature_dim_ = features.size();
    require(features.size() == feature_dim_, "Dataset: feature dimension mismatch");
    require(label >= 0 && (num_actions_ == 0 || static_cast<std::size_t>(label) < num_actions_),
            "Dataset: label out of range");
    examples_.push_back({std::move(features), label});
  }

  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t num_actions() const { return num_actions_; }
  const Example& operator[](std::size_t i) const { return examples_[i]; }
  const std::vector<Example>& examples() const { return examples_; }

  auto begin() const { return examples_.begin(); }
  auto end() const { return examples_.end(); }

 private:
  std::size_t feature_dim_ = 0;
  std::size_t num_actions_ = 0;
  std::vector<Example> examples_;
};

// Flat text format:
//   rail-linear-policy 1
//   feature_map <name>
//   actions <A> features <d>
//   A lines of d weights, 17 significant digits
inline void save_policy(std::ostream& out, const LinearPolicy& policy) {
  out << "rail-linear-policy 1\n";
  out << "feature_map " << (policy.feature_map().empty() ? "-" : policy.feature_map()) << "\n";
  out << "actions " << policy.num_actions() << " features " << policy.feature_dim() << "\n";
  char buf[40];
  for (std::size_t a = 0; a < policy.num_actions(); ++a) {
    for (std::size_t j = 0; j < policy.feature_dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", policy.weight(a, j));
      out << (j ? " " : "") << buf;
    }
    out << "\n";
  }
}

inline LinearPolicy load_policy(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "rail-linear-policy")
    throw ContractError("policy file: missing rail-linear-policy header");
  if (version != 1) throw ContractError("policy file: unsupported version " + std::to_string(version));
  std::string key, feature_map;
  if (!(in >> key >> feature_map) || key != "feature_map")
    throw ContractError("policy file: expected feature_map line");
  if (feature_map == "-") feature_map.clear();
  std::string k1, k2;
  std::size_t actions = 0, dim = 0;
  if (!(in >> k1 >> actions >> k2 >> dim) || k1 != "actions" || k2 != "features")
    throw ContractError("policy file: expected 'actions <A> features <d>'");
  std::vector<double> w(actions * dim);
  for (auto& v : w)
    if (!(in >> v)) throw ContractError("policy file: truncated weight block");
  return LinearPolicy(actions, dim, std::move(w), std::move(feature_map));
}

inline std::string policy_to_string(const LinearPolicy& policy) {
  std::ostringstream os;
  save_policy(os, policy);
  return os.str();
}

}  // namespace rail
