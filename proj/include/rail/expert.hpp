#pragma once

#include <functional>
#include <utility>

#include "rail/core.hpp"

namespace rail {

// Answers action queries on raw states and counts them. The answer function
// may block (a human answering over the network) but must be deterministic
// in the state.
class ExpertOracle {
 public:
  using AnswerFn = std::function<int(const StateVec&)>;

  explicit ExpertOracle(AnswerFn answer) : answer_(std::move(answer)) {}

  // The environment's hand-coded expert.
  static ExpertOracle of(const Environment& env) {
    return ExpertOracle([&env](const StateVec& s) { return env.expert_action(s); });
  }

  int query(const StateVec& state) {
    const int a = answer_(state);
    ++count_;
    return a;
  }

  std::size_t query_count() const { return count_; }

 private:
  AnswerFn answer_;
  std::size_t count_ = 0;
};

}  // namespace rail
