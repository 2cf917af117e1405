#pragma once

#include <vector>

#include "rail/train.hpp"

namespace rail {

struct Committee {
  std::vector<LinearPolicy> members;

  std::size_t size() const { return members.size(); }
  bool empty() const { return members.empty(); }

  void validate() const {
    require(!members.empty(), "Committee: needs at least one member");
    for (const auto& m : members)
      require(m.num_actions() == members.front().num_actions() &&
                  m.feature_dim() == members.front().feature_dim(),
              "Committee: members disagree on shape");
  }
};

// K zero-weight members: the cold-start committee before any labels exist.
inline Committee zero_committee(std::size_t k, std::size_t num_actions, std::size_t feature_dim) {
  require(k >= 1, "zero_committee: K must be >= 1");
  return {std::vector<LinearPolicy>(k, LinearPolicy::zero(num_actions, feature_dim))};
}

inline Dataset bootstrap_sample(const Dataset& data, RngStream& rng) {
  Dataset sample(data.feature_dim(), data.num_actions());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& ex = data[rng.uniform_index(data.size())];
    sample.add(ex.features, ex.label);
  }
  return sample;
}

// Bagging: K members, each trained on a with-replacement resample of size |D|.
// Member k draws from its own child stream of `rng`.
inline Committee bootstrap_committee(const Dataset& data, std::size_t k, RngStream& rng,
                                     const TrainConfig& config = {},
                                     const LinearPolicy* warm_start = nullptr) {
  require(!data.empty(), "bootstrap_committee: empty dataset");
  require(k >= 1, "bootstrap_committee: K must be >= 1");
  const RngStream base = rng.split(rng.next_u64());
  Committee c;
  c.members.reserve(k);
  for (std::size_t m = 0; m < k; ++m) {
    RngStream member = base.split(m);
    c.members.push_back(train_logistic(bootstrap_sample(data, member), config, warm_start));
  }
  return c;
}

}  // namespace rail
