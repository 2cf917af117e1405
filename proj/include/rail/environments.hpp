#pragma once

// Environment registry keyed by name, as used by experiment configs.

#include <charconv>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rail/cartpole.hpp"
#include "rail/discrete_mdp.hpp"
#include "rail/seqlabel.hpp"

namespace rail {

struct EnvOptions {
  std::size_t horizon = 500;          // cart-pole episode length
  double start_radius = 0.05;         // cart-pole start-state radius
  std::uint64_t seed = 1;             // seqlabel rule/corpus, random-mdp tables
  std::size_t corpus_words = 100;     // seqlabel training words
  std::size_t eval_words = 100;       // seqlabel held-out words
  std::size_t word_length = 8;
  std::size_t mdp_states = 6;
  std::size_t mdp_actions = 3;
  std::size_t mdp_horizon = 5;
};

// Learners train on `train`; learning curves are measured on `eval` (held-out
// words for seqlabel, the same simulator otherwise).
struct EnvBundle {
  std::shared_ptr<const Environment> train;
  std::shared_ptr<const Environment> eval;
};

inline std::vector<std::string> environment_names() {
  return {"cartpole", "seqlabel-L1", "seqlabel-L2", "chain-k", "random-mdp"};
}

inline EnvBundle make_environment(std::string_view name, const EnvOptions& opt = {}) {
  if (name == "cartpole") {
    CartPoleConfig cfg;
    cfg.horizon = opt.horizon;
    cfg.start_radius = opt.start_radius;
    auto env = std::make_shared<const CartPoleEnv>(cfg);
    return {env, env};
  }
  if (name == "seqlabel-L1" || name == "seqlabel-L2") {
    const std::size_t context = name.back() == '1' ? 1 : 2;
    const SeqLabelRule rule(context, opt.seed);
    auto train = std::make_shared<const SeqLabelEnv>(
        make_corpus(opt.corpus_words, opt.word_length, opt.seed * 2 + 1), rule, std::string(name));
    auto eval = std::make_shared<const SeqLabelEnv>(
        make_corpus(opt.eval_words, opt.word_length, opt.seed * 2 + 2), rule, std::string(name));
    return {train, eval};
  }
  if (name.starts_with("chain-")) {
    std::size_t length = 0;
    const auto digits = name.substr(6);
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), length);
    if (ec != std::errc() || ptr != digits.data() + digits.size())
      throw ConfigError("bad chain environment name '" + std::string(name) + "'");
    auto mdp = make_chain_mdp(length);
    auto env = std::make_shared<const DiscreteMdpEnv>(mdp, ActionTable(length, 0), std::string(name));
    return {env, env};
  }
  if (name == "random-mdp") {
    RngStream rng(opt.seed, 0x3d9);
    auto mdp = make_random_discrete_mdp(opt.mdp_states, opt.mdp_actions, opt.mdp_horizon, rng);
    auto expert = random_action_table(mdp, rng);
    auto env = std::make_shared<const DiscreteMdpEnv>(std::move(mdp), std::move(expert), "random-mdp");
    return {env, env};
  }
  throw ConfigError("unknown environment '" + std::string(name) + "'");
}

}  // namespace rail
