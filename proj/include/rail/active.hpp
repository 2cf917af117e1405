#pragma once

// Pool-based i.i.d. active learning selectors: random, query-by-committee, and
// density-weighted query-by-committee (density x vote entropy).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "rail/committee.hpp"

namespace rail {

// Feature vectors of the unlabeled states a selector chooses among.
struct UnlabeledPool {
  std::vector<StateVec> states;

  std::size_t size() const { return states.size(); }
  bool empty() const { return states.empty(); }
};

// Entropy (nats) of the committee's hard-vote distribution at phi.
inline double vote_entropy(const Committee& committee, const StateVec& phi) {
  require(!committee.empty(), "vote_entropy: empty committee");
  std::vector<std::size_t> votes(committee.members.front().num_actions(), 0);
  for (const auto& m : committee.members) ++votes[static_cast<std::size_t>(m.act(phi))];
  const double k = static_cast<double>(committee.size());
  double h = 0.0;
  for (std::size_t v : votes) {
    if (v == 0) continue;
    const double p = static_cast<double>(v) / k;
    h -= p * std::log(p);
  }
  return h;
}

struct BinningConfig {
  std::vector<double> min;    // per-dimension pool minimum
  std::vector<double> width;  // per-dimension bin width; 0 marks a zero-range dimension
  std::size_t bins_per_dim = 10;

  // Width (max - min) / bins per dimension over the given pool.
  static BinningConfig from_pool(const UnlabeledPool& pool, std::size_t bins_per_dim = 10) {
    require(!pool.empty(), "BinningConfig: empty pool");
    require(bins_per_dim >= 1, "BinningConfig: bins_per_dim must be >= 1");
    const std::size_t d = pool.states.front().size();
    BinningConfig cfg;
    cfg.bins_per_dim = bins_per_dim;
    cfg.min.assign(d, INFINITY);
    std::vector<double> max(d, -INFINITY);
    for (const auto& s : pool.states) {
      require(s.size() == d, "BinningConfig: ragged pool");
      for (std::size_t i = 0; i < d; ++i) {
        cfg.min[i] = std::min(cfg.min[i], s[i]);
        max[i] = std::max(max[i], s[i]);
      }
    }
    cfg.width.resize(d);
    for (std::size_t i = 0; i < d; ++i)
      cfg.width[i] = (max[i] - cfg.min[i]) / static_cast<double>(bins_per_dim);
    return cfg;
  }

  std::vector<std::int64_t> cell(const StateVec& s) const {
    std::vector<std::int64_t> key(s.size(), 0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!(width[i] > 0.0)) continue;
      auto b = static_cast<std::int64_t>(std::floor((s[i] - min[i]) / width[i]));
      key[i] = std::clamp<std::int64_t>(b, 0, static_cast<std::int64_t>(bins_per_dim) - 1);
    }
    return key;
  }
};

namespace detail {

struct CellHash {
  std::size_t operator()(const std::vector<std::int64_t>& key) const {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (auto v : key) h = mix64(h ^ static_cast<std::uint64_t>(v));
    return static_cast<std::size_t>(h);
  }
};

template <class Score>
std::size_t argmax_lowest(std::size_t n, Score&& score) {
  std::size_t best = 0;
  double best_score = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = score(i);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

}  // namespace detail

// weight(s) = |pool states sharing s's grid cell| / |pool|.
inline std::vector<double> estimate_density(const UnlabeledPool& pool, const BinningConfig& config) {
  require(!pool.empty(), "estimate_density: empty pool");
  std::unordered_map<std::vector<std::int64_t>, std::size_t, detail::CellHash> counts;
  std::vector<std::vector<std::int64_t>> keys;
  keys.reserve(pool.size());
  for (const auto& s : pool.states) {
    keys.push_back(config.cell(s));
    ++counts[keys.back()];
  }
  std::vector<double> w;
  w.reserve(pool.size());
  const double n = static_cast<double>(pool.size());
  for (const auto& k : keys) w.push_back(static_cast<double>(counts[k]) / n);
  return w;
}

inline std::vector<double> estimate_density(const UnlabeledPool& pool, std::size_t bins_per_dim = 10) {
  return estimate_density(pool, BinningConfig::from_pool(pool, bins_per_dim));
}

inline std::vector<double> qbc_scores(const UnlabeledPool& pool, const Committee& committee) {
  std::vector<double> h;
  h.reserve(pool.size());
  for (const auto& s : pool.states) h.push_back(vote_entropy(committee, s));
  return h;
}

inline std::vector<double> dwqbc_scores(const UnlabeledPool& pool, const Committee& committee,
                                        const std::vector<double>& density) {
  require(density.size() == pool.size(), "dwqbc_scores: density/pool size mismatch");
  auto h = qbc_scores(pool, committee);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] *= density[i];
  return h;
}

inline std::size_t select_dwqbc(const UnlabeledPool& pool, const Committee& committee,
                                const std::vector<double>& density) {
  require(!pool.empty(), "select_dwqbc: empty pool");
  require(!committee.empty(), "select_dwqbc: empty committee");
  const auto scores = dwqbc_scores(pool, committee, density);
  return detail::argmax_lowest(scores.size(), [&](std::size_t i) { return scores[i]; });
}

inline std::size_t select_dwqbc(const UnlabeledPool& pool, const Committee& committee,
                                const BinningConfig& config) {
  require(!pool.empty(), "select_dwqbc: empty pool");
  return select_dwqbc(pool, committee, estimate_density(pool, config));
}

inline std::size_t select_qbc(const UnlabeledPool& pool, const Committee& committee) {
  require(!pool.empty(), "select_qbc: empty pool");
  require(!committee.empty(), "select_qbc: empty committee");
  const auto scores = qbc_scores(pool, committee);
  return detail::argmax_lowest(scores.size(), [&](std::size_t i) { return scores[i]; });
}

inline std::size_t select_random(const UnlabeledPool& pool, RngStream& rng) {
  require(!pool.empty(), "select_random: empty pool");
  return static_cast<std::size_t>(rng.uniform_index(pool.size()));
}

}  // namespace rail
