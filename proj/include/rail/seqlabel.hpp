#pragma once

// Synthetic sequence labelling as imitation: label each symbol of a word left
// to right, where the state carries the learner's own previous L predictions.
// A labelling mistake therefore changes the states the learner sees later.

#include <cstddef>
#include <string>
#include <vector>

#include "rail/core.hpp"

namespace rail {

inline constexpr std::size_t kSeqAlphabet = 8;
inline constexpr std::size_t kSeqLabels = 5;
inline constexpr int kSeqPadLabel = 5;  // context value before the word starts
inline constexpr std::size_t kSeqContextValues = kSeqLabels + 1;

using Word = std::vector<int>;

// Raw state layout: {word, position, left, current, right, ctx_1 .. ctx_L}.
// Missing neighbours are -1; ctx_1 is the most recent prediction.
struct SeqLabelState {
  std::size_t word = 0;
  std::size_t position = 0;
  int left = -1;
  int current = 0;
  int right = -1;
  std::vector<int> context;

  static SeqLabelState from_vec(const StateVec& s, std::size_t context_length) {
    require(s.size() == 5 + context_length, "SeqLabelState: wrong raw length");
    SeqLabelState st;
    st.word = static_cast<std::size_t>(s[0]);
    st.position = static_cast<std::size_t>(s[1]);
    st.left = static_cast<int>(s[2]);
    st.current = static_cast<int>(s[3]);
    st.right = static_cast<int>(s[4]);
    for (std::size_t k = 0; k < context_length; ++k) st.context.push_back(static_cast<int>(s[5 + k]));
    return st;
  }

  StateVec to_vec() const {
    StateVec v{static_cast<double>(word), static_cast<double>(position), static_cast<double>(left),
               static_cast<double>(current), static_cast<double>(right)};
    for (int c : context) v.push_back(static_cast<double>(c));
    return v;
  }
};

inline std::size_t seqlabel_feature_dim(std::size_t context_length) {
  return 3 * kSeqAlphabet + context_length * kSeqContextValues + 1;
}

// One-hot window blocks, one-hot context blocks, bias.
inline StateVec seqlabel_features(const SeqLabelState& s) {
  StateVec phi(seqlabel_feature_dim(s.context.size()), 0.0);
  const int window[3] = {s.left, s.current, s.right};
  for (std::size_t k = 0; k < 3; ++k)
    if (window[k] >= 0) phi[k * kSeqAlphabet + static_cast<std::size_t>(window[k])] = 1.0;
  std::size_t offset = 3 * kSeqAlphabet;
  for (int c : s.context) {
    phi[offset + static_cast<std::size_t>(c)] = 1.0;
    offset += kSeqContextValues;
  }
  phi.back() = 1.0;
  return phi;
}

// The target labelling rule: argmax of a fixed pseudo-random linear score
// over the state features, so the linear policy class can represent it.
class SeqLabelRule {
 public:
  SeqLabelRule(std::size_t context_length, std::uint64_t seed)
      : context_length_(context_length), dim_(seqlabel_feature_dim(context_length)) {
    RngStream rng(seed, 0x5e91abe1);
    weights_.resize(kSeqLabels * dim_);
    for (auto& w : weights_) w = rng.normal();
  }

  std::size_t context_length() const { return context_length_; }

  int operator()(const SeqLabelState& s) const {
    const StateVec phi = seqlabel_features(s);
    int best = 0;
    double best_score = 0.0;
    for (std::size_t a = 0; a < kSeqLabels; ++a) {
      double score = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) score += weights_[a * dim_ + j] * phi[j];
      if (a == 0 || score > best_score) {
        best = static_cast<int>(a);
        best_score = score;
      }
    }
    return best;
  }

 private:
  std::size_t context_length_;
  std::size_t dim_;
  std::vector<double> weights_;
};

inline std::vector<Word> make_corpus(std::size_t words, std::size_t length, std::uint64_t seed) {
  require(words >= 1 && length >= 1, "make_corpus: need at least one non-empty word");
  RngStream rng(seed, 0xc0);
  std::vector<Word> corpus(words, Word(length));
  for (auto& w : corpus)
    for (auto& c : w) c = static_cast<int>(rng.uniform_index(kSeqAlphabet));
  return corpus;
}

// Episodes label one word drawn uniformly from the corpus; the horizon is the
// (common) word length. Reward is 1 for the rule's label, else 0.
class SeqLabelEnv final : public Environment {
 public:
  SeqLabelEnv(std::vector<Word> corpus, SeqLabelRule rule, std::string name = "seqlabel")
      : corpus_(std::move(corpus)), rule_(std::move(rule)), name_(std::move(name)) {
    require(!corpus_.empty(), "SeqLabelEnv: empty corpus");
    const std::size_t len = corpus_.front().size();
    require(len >= 1, "SeqLabelEnv: words must be non-empty");
    for (const auto& w : corpus_) {
      require(w.size() == len, "SeqLabelEnv: all words must share one length");
      for (int c : w) require(c >= 0 && c < static_cast<int>(kSeqAlphabet), "SeqLabelEnv: bad symbol");
    }
    spec_ = {5 + rule_.context_length(), kSeqLabels, len};
  }

  std::string name() const override { return name_; }
  const EnvSpec& spec() const override { return spec_; }
  std::size_t feature_dim() const override { return seqlabel_feature_dim(context_length()); }
  std::size_t context_length() const { return rule_.context_length(); }
  const std::vector<Word>& corpus() const { return corpus_; }

  SeqLabelState at(std::size_t word, std::size_t position, std::vector<int> context) const {
    const Word& w = corpus_.at(word);
    SeqLabelState s;
    s.word = word;
    s.position = position;
    s.left = position > 0 ? w[position - 1] : -1;
    s.current = w.at(position);
    s.right = position + 1 < w.size() ? w[position + 1] : -1;
    s.context = std::move(context);
    return s;
  }

  StateVec initial_state(RngStream& rng) const override {
    const std::size_t word = rng.uniform_index(corpus_.size());
    return at(word, 0, std::vector<int>(context_length(), kSeqPadLabel)).to_vec();
  }

  StateVec step(const StateVec& state, int action, RngStream&) const override {
    require(action >= 0 && action < static_cast<int>(kSeqLabels), "seqlabel: label out of range");
    const SeqLabelState s = decode(state);
    std::vector<int> context = s.context;
    if (!context.empty()) {
      for (std::size_t k = context.size() - 1; k > 0; --k) context[k] = context[k - 1];
      context[0] = action;
    }
    const std::size_t len = corpus_[s.word].size();
    const std::size_t next = s.position + 1 < len ? s.position + 1 : s.position;
    return at(s.word, next, std::move(context)).to_vec();
  }

  double reward(const StateVec& state, int action) const override {
    return action == expert_action(state) ? 1.0 : 0.0;
  }

  StateVec featurize(const StateVec& state) const override {
    require(valid_state(state), "seqlabel: invalid state");
    return seqlabel_features(decode(state));
  }

  int expert_action(const StateVec& state) const override { return rule_(decode(state)); }

  bool valid_state(const StateVec& state) const override {
    if (state.size() != spec_.state_dim || !all_finite(state)) return false;
    if (state[0] < 0 || state[0] >= static_cast<double>(corpus_.size())) return false;
    for (std::size_t k = 5; k < state.size(); ++k)
      if (state[k] < 0 || state[k] > kSeqPadLabel) return false;
    return true;
  }

  // Uniform over (word, position) with arbitrary label contexts; context
  // slots that precede the word start hold the padding label.
  bool has_uniform_sampler() const override { return true; }
  StateVec sample_uniform_state(RngStream& rng) const override {
    const std::size_t word = rng.uniform_index(corpus_.size());
    const std::size_t position = rng.uniform_index(corpus_[word].size());
    std::vector<int> context(context_length(), kSeqPadLabel);
    for (std::size_t k = 0; k < context.size(); ++k)
      if (position > k) context[k] = static_cast<int>(rng.uniform_index(kSeqLabels));
    return at(word, position, std::move(context)).to_vec();
  }

  std::vector<std::string> action_labels() const override {
    return {"stress-0", "stress-1", "stress-2", "stress-3", "stress-4"};
  }

  std::vector<std::pair<std::string, double>> render_fields(const StateVec& state) const override {
    const SeqLabelState s = decode(state);
    std::vector<std::pair<std::string, double>> out{{"position", static_cast<double>(s.position)},
                                                    {"left", static_cast<double>(s.left)},
                                                    {"current", static_cast<double>(s.current)},
                                                    {"right", static_cast<double>(s.right)}};
    for (std::size_t k = 0; k < s.context.size(); ++k)
      out.emplace_back("context_" + std::to_string(k + 1), static_cast<double>(s.context[k]));
    return out;
  }

  bool reports_accuracy() const override { return true; }

 private:
  SeqLabelState decode(const StateVec& state) const {
    return SeqLabelState::from_vec(state, context_length());
  }

  std::vector<Word> corpus_;
  SeqLabelRule rule_;
  std::string name_;
  EnvSpec spec_;
};

// Single-word environment: horizon equals the word length.
inline SeqLabelEnv seqlabel_env(const Word& word, const SeqLabelRule& rule) {
  return SeqLabelEnv({word}, rule);
}

}  // namespace rail
