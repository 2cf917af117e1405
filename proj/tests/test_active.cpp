#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rail/active.hpp"

using namespace rail;

namespace {

// Member votes action `a` everywhere: only the bias weight is non-zero.
LinearPolicy constant_voter(int a, std::size_t actions, std::size_t dim) {
  LinearPolicy p(actions, dim);
  p.weights()[static_cast<std::size_t>(a) * dim + dim - 1] = 1.0;
  return p;
}

// Member votes 1 where phi[0] > threshold, else 0; phi = (x, 1).
LinearPolicy threshold_voter(double threshold) {
  return LinearPolicy(2, 2, std::vector<double>{0.0, 0.0, 1.0, -threshold});
}

Committee committee_of(std::initializer_list<int> votes, std::size_t actions) {
  Committee c;
  for (int v : votes) c.members.push_back(constant_voter(v, actions, 1));
  return c;
}

}  // namespace

TEST(VoteEntropy, UnanimousIsZero) {
  EXPECT_DOUBLE_EQ(vote_entropy(committee_of({2, 2, 2, 2, 2}, 5), {1.0}), 0.0);
}

TEST(VoteEntropy, AllDifferentIsLogK) {
  EXPECT_NEAR(vote_entropy(committee_of({0, 1, 2, 3, 4}, 5), {1.0}), std::log(5.0), 1e-15);
}

TEST(VoteEntropy, ThreeTwoSplit) {
  // -(0.6 ln 0.6 + 0.4 ln 0.4)
  EXPECT_NEAR(vote_entropy(committee_of({0, 0, 0, 1, 1}, 2), {1.0}), 0.6730116670092565, 1e-12);
  EXPECT_THROW(vote_entropy(Committee{}, {1.0}), ContractError);
}

TEST(Density, IdenticalStatesShareOneCell) {
  UnlabeledPool pool{{{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}}};
  for (double w : estimate_density(pool)) EXPECT_DOUBLE_EQ(w, 1.0);
}

TEST(Density, ThreeNearOneFar) {
  UnlabeledPool pool{{{0.0}, {0.01}, {0.02}, {1.0}}};
  EXPECT_EQ(estimate_density(pool), (std::vector<double>{0.75, 0.75, 0.75, 0.25}));
}

TEST(Density, ZeroRangeDimensionIsIgnored) {
  UnlabeledPool pool{{{0.0, 7.0}, {0.05, 7.0}, {0.95, 7.0}, {1.0, 7.0}}};
  const auto w = estimate_density(pool);
  EXPECT_EQ(w, (std::vector<double>{0.5, 0.5, 0.5, 0.5}));
}

TEST(Density, MaximumFallsInLastBin) {
  UnlabeledPool pool{{{0.0}, {0.95}, {1.0}}};
  EXPECT_EQ(estimate_density(pool), (std::vector<double>{1.0 / 3, 2.0 / 3, 2.0 / 3}));
}

TEST(Density, PermutationInvariant) {
  RngStream rng(1, 0);
  UnlabeledPool pool;
  for (int i = 0; i < 60; ++i) pool.states.push_back({rng.normal(), rng.uniform()});
  const auto w = estimate_density(pool);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_index(i + 1)]);
  UnlabeledPool shuffled;
  for (auto i : order) shuffled.states.push_back(pool.states[i]);
  const auto ws = estimate_density(shuffled);
  for (std::size_t k = 0; k < order.size(); ++k) EXPECT_DOUBLE_EQ(ws[k], w[order[k]]);
}

TEST(SelectDwqbc, PrefersDenseDisagreement) {
  // state 0 (x=0.2, dense): all agree; state 1 (x=0.6): 3-2 split
  Committee c;
  for (double th : {0.4, 0.4, 0.4, 0.9, 0.9}) c.members.push_back(threshold_voter(th));
  UnlabeledPool pool{{{0.2, 1.0}, {0.6, 1.0}}};
  EXPECT_EQ(select_dwqbc(pool, c, std::vector<double>{0.9, 0.1}), 1u);
  EXPECT_EQ(select_dwqbc(pool, c, BinningConfig::from_pool(pool)), 1u);
}

TEST(SelectDwqbc, DensityTradesOffDisagreement) {
  Committee mixed;
  mixed.members = {threshold_voter(0.1), threshold_voter(0.1), threshold_voter(0.3),
                   threshold_voter(0.7), threshold_voter(0.9)};
  UnlabeledPool pool{{{0.2, 1.0}, {0.5, 1.0}}};
  // votes at 0.2: 1,1,0,0,0; at 0.5: 1,1,1,0,0. Equal entropy, so density decides
  EXPECT_EQ(select_dwqbc(pool, mixed, std::vector<double>{0.8, 0.2}), 0u);
  EXPECT_EQ(select_dwqbc(pool, mixed, std::vector<double>{0.2, 0.8}), 1u);
}

TEST(SelectDwqbc, AllZeroScoresPickIndexZero) {
  const auto c = committee_of({1, 1, 1, 1, 1}, 2);
  UnlabeledPool pool{{{1.0}, {1.0}, {1.0}}};
  EXPECT_EQ(select_dwqbc(pool, c, std::vector<double>{1.0, 1.0, 1.0}), 0u);
  EXPECT_EQ(select_qbc(pool, c), 0u);
}

TEST(SelectDwqbc, SingleStatePool) {
  const auto c = committee_of({0, 1, 0, 1, 0}, 2);
  UnlabeledPool pool{{{1.0}}};
  EXPECT_EQ(select_dwqbc(pool, c, BinningConfig::from_pool(pool)), 0u);
  EXPECT_THROW(select_dwqbc(UnlabeledPool{}, c, std::vector<double>{}), ContractError);
  EXPECT_THROW(select_dwqbc(pool, c, std::vector<double>{0.5, 0.5}), ContractError);
}

TEST(SelectQbc, PicksHighestEntropyLowestIndexOnTies) {
  Committee c;
  for (double th : {0.1, 0.3, 0.5, 0.7, 0.9}) c.members.push_back(threshold_voter(th));
  // votes for 1: x=0.0 -> 0; x=0.4 -> 2; x=0.6 -> 3; x=1.0 -> 5
  UnlabeledPool pool{{{0.0, 1.0}, {0.4, 1.0}, {0.6, 1.0}, {1.0, 1.0}}};
  EXPECT_EQ(select_qbc(pool, c), 1u);
  EXPECT_THROW(select_qbc(pool, Committee{}), ContractError);
}

TEST(SelectRandom, UniformFrequencies) {
  UnlabeledPool pool{{{0.0}, {1.0}, {2.0}, {3.0}}};
  RngStream rng(3, 0);
  const int n = 40000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < n; ++i) ++counts[select_random(pool, rng)];
  for (int c : counts) EXPECT_NEAR(c, n / 4.0, 3.0 * std::sqrt(n * 0.25 * 0.75));
  EXPECT_THROW(select_random(UnlabeledPool{}, rng), ContractError);
}

TEST(SelectDwqbc, UniformDensityMatchesQbc) {
  RngStream rng(5, 0);
  for (int trial = 0; trial < 50; ++trial) {
    Committee c;
    for (int k = 0; k < 5; ++k) c.members.push_back(threshold_voter(rng.uniform()));
    UnlabeledPool pool;
    for (int i = 0; i < 30; ++i) pool.states.push_back({rng.uniform(), 1.0});
    const std::vector<double> flat(pool.size(), 1.0 / 30.0);
    EXPECT_EQ(select_dwqbc(pool, c, flat), select_qbc(pool, c));
  }
}
