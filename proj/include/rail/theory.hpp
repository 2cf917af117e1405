#pragma once

// Exact quantities on small discrete MDPs by exhaustive trajectory
// enumeration, and checkers for the regret bounds of the reduction:
//
//   check_lemma1        V(pi) >= V(pi*) - eps T,   eps = 1 - P^T_pi
//   check_lemma2        P^{t+1}_{pi_hat} >= P^t_pi - T e(pi_hat, d_pi)
//   check_theorem1      V(pi_hat^T) >= V(pi*) - eps T^3   (idealised RAIL)
//   check_proposition1  V(pi_hat) >= V(pi*) - eps T^2     (active forward training)

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "rail/discrete_mdp.hpp"
#include "rail/learners.hpp"
#include "rail/parallel.hpp"

namespace rail {

// Deterministic policy over state indices, stationary (one table) or
// non-stationary (one table per zero-based step).
class TabularPolicy {
 public:
  TabularPolicy(ActionTable stationary) : steps_{std::move(stationary)} {}  // NOLINT(implicit)

  static TabularPolicy nonstationary(std::vector<ActionTable> steps) {
    require(!steps.empty(), "TabularPolicy: no steps");
    TabularPolicy p(steps.front());
    p.steps_ = std::move(steps);
    p.stationary_ = false;
    return p;
  }

  int operator()(std::size_t state, std::size_t t) const {
    const ActionTable& table = stationary_ ? steps_.front() : steps_.at(t);
    return table.at(state);
  }

  bool stationary() const { return stationary_; }

 private:
  std::vector<ActionTable> steps_;
  bool stationary_ = true;
};

inline ActionTable tabulate(const DiscreteMdp& mdp, const LinearPolicy& policy) {
  ActionTable table(mdp.num_states);
  for (std::size_t s = 0; s < mdp.num_states; ++s) table[s] = policy.act(mdp.features(s));
  return table;
}

inline TabularPolicy tabulate(const DiscreteMdp& mdp, const NonStationaryPolicy& policy) {
  std::vector<ActionTable> steps;
  for (const auto& p : policy.steps) steps.push_back(tabulate(mdp, p));
  return TabularPolicy::nonstationary(std::move(steps));
}

struct TrajectoryPath {
  std::vector<std::size_t> states;  // s_1 .. s_T
  std::vector<int> actions;         // a_1 .. a_T
  double probability = 0.0;
};

struct TrajectoryDist {
  std::vector<TrajectoryPath> paths;

  double total_probability() const {
    double p = 0.0;
    for (const auto& path : paths) p += path.probability;
    return p;
  }
};

inline constexpr double kEnumerationLimit = 1e7;

// Size of the full state-action sequence space, n^T m^T. Deterministic
// policies visit at most n^T of these.
inline double enumeration_branches(const DiscreteMdp& mdp, std::size_t horizon) {
  return std::pow(static_cast<double>(mdp.num_states * mdp.num_actions), static_cast<double>(horizon));
}

inline void check_enumeration_size(const DiscreteMdp& mdp, std::size_t horizon) {
  const double branches = enumeration_branches(mdp, horizon);
  if (branches > kEnumerationLimit) {
    std::ostringstream os;
    os << "enumeration refused: n^T m^T = (" << mdp.num_states << " * " << mdp.num_actions << ")^" << horizon
       << " = " << branches << " branches exceeds the limit of " << kEnumerationLimit;
    throw SizeGuardError(os.str());
  }
}

// Every nonzero-probability length-T trajectory under `policy`, with its
// exact probability. Deterministic policies branch only on transitions.
inline TrajectoryDist enumerate_trajectories(const DiscreteMdp& mdp, const TabularPolicy& policy,
                                             std::size_t horizon) {
  mdp.validate();
  check_enumeration_size(mdp, horizon);
  TrajectoryDist dist;
  if (horizon == 0) {
    dist.paths.push_back({{}, {}, 1.0});
    return dist;
  }
  TrajectoryPath path;
  auto extend = [&](auto&& self, std::size_t s, double prob) -> void {
    const std::size_t t = path.states.size();
    const int a = policy(s, t);
    require(a >= 0 && static_cast<std::size_t>(a) < mdp.num_actions,
            "enumerate_trajectories: policy action out of range");
    path.states.push_back(s);
    path.actions.push_back(a);
    if (t + 1 == horizon) {
      dist.paths.push_back({path.states, path.actions, prob});
    } else {
      for (std::size_t next = 0; next < mdp.num_states; ++next) {
        const double q = mdp.p(s, static_cast<std::size_t>(a), next);
        if (q > 0.0) self(self, next, prob * q);
      }
    }
    path.states.pop_back();
    path.actions.pop_back();
  };
  for (std::size_t s = 0; s < mdp.num_states; ++s)
    if (mdp.initial[s] > 0.0) extend(extend, s, mdp.initial[s]);
  return dist;
}

// Probability that `policy` agrees with the expert on the first t states of
// an expert trajectory.
inline double prob_consistent(const DiscreteMdp& mdp, const TabularPolicy& policy,
                              const ActionTable& expert, std::size_t t) {
  require(t >= 1 && t <= mdp.horizon, "prob_consistent: need 1 <= t <= T");
  const auto dist = enumerate_trajectories(mdp, expert, t);
  double p = 0.0;
  for (const auto& path : dist.paths) {
    bool agrees = true;
    for (std::size_t k = 0; k < t && agrees; ++k)
      agrees = policy(path.states[k], k) == path.actions[k];
    if (agrees) p += path.probability;
  }
  return p;
}

inline double exact_value(const DiscreteMdp& mdp, const TabularPolicy& policy, std::size_t horizon) {
  const auto dist = enumerate_trajectories(mdp, policy, horizon);
  double v = 0.0;
  for (const auto& path : dist.paths) {
    double total = 0.0;
    for (std::size_t s : path.states) total += mdp.reward[s];
    v += path.probability * total;
  }
  return v;
}

// d^t_pi for t = 1..T, read off the enumeration: marginals[t-1][s].
inline std::vector<std::vector<double>> state_marginals(const DiscreteMdp& mdp,
                                                        const TabularPolicy& policy) {
  const auto dist = enumerate_trajectories(mdp, policy, mdp.horizon);
  std::vector<std::vector<double>> d(mdp.horizon, std::vector<double>(mdp.num_states, 0.0));
  for (const auto& path : dist.paths)
    for (std::size_t t = 0; t < mdp.horizon; ++t) d[t][path.states[t]] += path.probability;
  return d;
}

// Disagreement probability of `candidate` with the expert at step t (one-based)
// under d^t of `reference`.
inline double exact_step_error(const DiscreteMdp& mdp, const TabularPolicy& candidate,
                               const ActionTable& expert, const TabularPolicy& reference,
                               std::size_t t) {
  require(t >= 1 && t <= mdp.horizon, "exact_step_error: need 1 <= t <= T");
  const auto d = state_marginals(mdp, reference);
  double e = 0.0;
  for (std::size_t s = 0; s < mdp.num_states; ++s)
    if (candidate(s, t - 1) != expert[s]) e += d[t - 1][s];
  return e;
}

// e(candidate, d_reference) with d = (1/T) sum_t d^t.
inline double exact_error(const DiscreteMdp& mdp, const TabularPolicy& candidate,
                          const ActionTable& expert, const TabularPolicy& reference) {
  const auto d = state_marginals(mdp, reference);
  double e = 0.0;
  for (std::size_t t = 0; t < mdp.horizon; ++t)
    for (std::size_t s = 0; s < mdp.num_states; ++s)
      if (candidate(s, t) != expert[s]) e += d[t][s];
  return e / static_cast<double>(mdp.horizon);
}

// Slack for floating-point rounding in the exact sums.
inline constexpr double kBoundTolerance = 1e-12;

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double epsilon = 0.0;
  double margin() const { return lhs - rhs; }
  bool holds() const { return margin() >= -kBoundTolerance; }
};

struct Lemma1Report {
  double p_consistent = 0.0;
  double v_policy = 0.0;
  double v_expert = 0.0;
  BoundCheck check;  // V(pi) >= V(pi*) - eps T
  bool bound_holds() const { return check.holds(); }
};

inline Lemma1Report check_lemma1(const DiscreteMdp& mdp, const TabularPolicy& policy,
                                  const ActionTable& expert, std::size_t horizon) {
  require(horizon == mdp.horizon, "check_lemma1: T must equal the MDP horizon");
  Lemma1Report r;
  r.p_consistent = prob_consistent(mdp, policy, expert, horizon);
  r.v_policy = exact_value(mdp, policy, horizon);
  r.v_expert = exact_value(mdp, expert, horizon);
  r.check.epsilon = 1.0 - r.p_consistent;
  r.check.lhs = r.v_policy;
  r.check.rhs = r.v_expert - r.check.epsilon * static_cast<double>(horizon);
  return r;
}

struct Lemma2Report {
  double p_hat_next = 0.0;  // P^{t+1}_{pi_hat}
  double p_t = 0.0;         // P^t_pi
  BoundCheck check;
  bool bound_holds() const { return check.holds(); }
};

inline Lemma2Report check_lemma2(const DiscreteMdp& mdp, const TabularPolicy& pi,
                                 const TabularPolicy& pi_hat, const ActionTable& expert,
                                 std::size_t t) {
  require(t >= 1 && t < mdp.horizon, "check_lemma2: need 1 <= t < T");
  Lemma2Report r;
  r.check.epsilon = exact_error(mdp, pi_hat, expert, pi);
  r.p_hat_next = prob_consistent(mdp, pi_hat, expert, t + 1);
  r.p_t = prob_consistent(mdp, pi, expert, t);
  r.check.lhs = r.p_hat_next;
  r.check.rhs = r.p_t - static_cast<double>(mdp.horizon) * r.check.epsilon;
  return r;
}

struct RegretReport {
  std::vector<double> errors;  // per-iteration measured error
  double v_final = 0.0;
  double v_expert = 0.0;
  BoundCheck check;
  bool bound_holds() const { return check.holds(); }
};

// `iterates` = (pi_hat^0, ..., pi_hat^T); error t is e(pi_hat^t, d_{pi_hat^{t-1}}).
inline RegretReport check_theorem1(const DiscreteMdp& mdp, const ActionTable& expert,
                                   const std::vector<ActionTable>& iterates) {
  require(iterates.size() == mdp.horizon + 1, "check_theorem1: need T + 1 iterates");
  RegretReport r;
  double eps = 0.0;
  for (std::size_t t = 1; t < iterates.size(); ++t) {
    r.errors.push_back(exact_error(mdp, iterates[t], expert, iterates[t - 1]));
    eps = std::max(eps, r.errors.back());
  }
  const double T = static_cast<double>(mdp.horizon);
  r.v_final = exact_value(mdp, iterates.back(), mdp.horizon);
  r.v_expert = exact_value(mdp, expert, mdp.horizon);
  r.check.epsilon = eps;
  r.check.lhs = r.v_final;
  r.check.rhs = r.v_expert - eps * T * T * T;
  return r;
}

inline RegretReport check_theorem1(const DiscreteMdp& mdp, const ActionTable& expert,
                                   const RailRun& run) {
  std::vector<ActionTable> tables;
  for (const auto& p : run.iterates) tables.push_back(tabulate(mdp, p));
  return check_theorem1(mdp, expert, tables);
}

// Error t is the step-t error of pi_hat_t on d^t of (pi_hat_1..pi_hat_{t-1}),
// which is d^t of the full non-stationary policy.
inline RegretReport check_proposition1(const DiscreteMdp& mdp, const ActionTable& expert,
                                       const TabularPolicy& policy) {
  RegretReport r;
  double eps = 0.0;
  const auto d = state_marginals(mdp, policy);
  for (std::size_t t = 0; t < mdp.horizon; ++t) {
    double e = 0.0;
    for (std::size_t s = 0; s < mdp.num_states; ++s)
      if (policy(s, t) != expert[s]) e += d[t][s];
    r.errors.push_back(e);
    eps = std::max(eps, e);
  }
  const double T = static_cast<double>(mdp.horizon);
  r.v_final = exact_value(mdp, policy, mdp.horizon);
  r.v_expert = exact_value(mdp, expert, mdp.horizon);
  r.check.epsilon = eps;
  r.check.lhs = r.v_final;
  r.check.rhs = r.v_expert - eps * T * T;
  return r;
}

// ---------------------------------------------------------------------------
// Randomised suites

struct TheorySuiteConfig {
  std::uint64_t seed = 1;
  std::size_t lemma1 = 1000;
  std::size_t lemma2 = 1000;
  std::size_t theorem1 = 100;
  std::size_t proposition1 = 100;
  std::size_t max_states = 6;
  std::size_t max_actions = 3;
  std::size_t max_horizon = 5;
  std::size_t threads = 0;

  void validate() const {
    require(max_states >= 2 && max_states <= DiscreteMdp::kMaxStates, "theory suite: max_states out of range");
    require(max_actions >= 2 && max_actions <= DiscreteMdp::kMaxActions, "theory suite: max_actions out of range");
    require(max_horizon >= 2 && max_horizon <= DiscreteMdp::kMaxHorizon, "theory suite: max_horizon out of range");
  }
};

struct SuiteResult {
  std::string name;
  std::size_t instances = 0;
  std::size_t violations = 0;
  double seconds = 0.0;
  std::vector<std::string> lines;  // one per instance, in instance order
  bool passed() const { return violations == 0; }
};

struct TheoryReport {
  std::vector<SuiteResult> suites;
  std::vector<std::string> warnings;
  bool passed() const {
    for (const auto& s : suites)
      if (!s.passed()) return false;
    return true;
  }
};

namespace detail {

struct Instance {
  DiscreteMdp mdp;
  ActionTable expert;
};

inline Instance random_instance(const TheorySuiteConfig& cfg, RngStream& rng, std::size_t min_horizon) {
  const std::size_t n = 2 + rng.uniform_index(cfg.max_states - 1);
  const std::size_t m = 2 + rng.uniform_index(cfg.max_actions - 1);
  const std::size_t T = min_horizon + rng.uniform_index(cfg.max_horizon - min_horizon + 1);
  Instance inst{make_random_discrete_mdp(n, m, T, rng), {}};
  inst.expert = random_action_table(inst.mdp, rng);
  return inst;
}

// Copy of `base` with each entry replaced by a random action with prob. q.
inline ActionTable perturb(const ActionTable& base, std::size_t num_actions, double q, RngStream& rng) {
  ActionTable out = base;
  for (auto& a : out)
    if (rng.uniform() < q) a = static_cast<int>(rng.uniform_index(num_actions));
  return out;
}

inline std::string format_line(const std::string& suite, std::size_t index, std::uint64_t seed,
                               const DiscreteMdp& mdp, const BoundCheck& c, const std::string& extra) {
  char buf[320];
  std::snprintf(buf, sizeof buf, "%s instance=%zu seed=%llu n=%zu m=%zu T=%zu eps=%.17g lhs=%.17g rhs=%.17g margin=%.17g%s %s",
                suite.c_str(), index, static_cast<unsigned long long>(seed), mdp.num_states,
                mdp.num_actions, mdp.horizon, c.epsilon, c.lhs, c.rhs, c.margin(), extra.c_str(),
                c.holds() ? "ok" : "VIOLATION");
  return buf;
}

template <class Body>
SuiteResult run_suite(const std::string& name, std::size_t count, std::size_t threads, Body&& body) {
  SuiteResult result;
  result.name = name;
  result.instances = count;
  result.lines.resize(count);
  std::vector<char> ok(count, 1);
  const auto start = std::chrono::steady_clock::now();
  parallel_for(count, threads, [&](std::size_t i) {
    bool holds = true;
    result.lines[i] = body(i, holds);
    ok[i] = holds ? 1 : 0;
  });
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (char v : ok) result.violations += v ? 0 : 1;
  return result;
}

inline std::uint64_t suite_seed(std::uint64_t seed, std::string_view suite, std::size_t i) {
  return mix64(mix64(seed ^ hash_label(suite)) + i);
}

}  // namespace detail

inline SuiteResult run_lemma1_suite(const TheorySuiteConfig& cfg) {
  cfg.validate();
  return detail::run_suite("lemma1", cfg.lemma1, cfg.threads, [&](std::size_t i, bool& holds) {
    const std::uint64_t seed = detail::suite_seed(cfg.seed, "lemma1", i);
    RngStream rng(seed, 0);
    auto inst = detail::random_instance(cfg, rng, 1);
    const ActionTable policy = detail::perturb(inst.expert, inst.mdp.num_actions, rng.uniform(), rng);
    const auto r = check_lemma1(inst.mdp, policy, inst.expert, inst.mdp.horizon);
    holds = r.bound_holds();
    return detail::format_line("lemma1", i, seed, inst.mdp, r.check, "");
  });
}

inline SuiteResult run_lemma2_suite(const TheorySuiteConfig& cfg) {
  cfg.validate();
  return detail::run_suite("lemma2", cfg.lemma2, cfg.threads, [&](std::size_t i, bool& holds) {
    const std::uint64_t seed = detail::suite_seed(cfg.seed, "lemma2", i);
    RngStream rng(seed, 0);
    auto inst = detail::random_instance(cfg, rng, 2);
    const std::size_t m = inst.mdp.num_actions;
    const ActionTable pi = detail::perturb(inst.expert, m, rng.uniform(), rng);
    const ActionTable pi_hat = detail::perturb(inst.expert, m, rng.uniform(), rng);
    // report the tightest t
    Lemma2Report worst;
    std::size_t worst_t = 0;
    holds = true;
    for (std::size_t t = 1; t < inst.mdp.horizon; ++t) {
      const auto r = check_lemma2(inst.mdp, pi, pi_hat, inst.expert, t);
      holds = holds && r.bound_holds();
      if (worst_t == 0 || r.check.margin() < worst.check.margin()) {
        worst = r;
        worst_t = t;
      }
    }
    return detail::format_line("lemma2", i, seed, inst.mdp, worst.check, " t=" + std::to_string(worst_t));
  });
}

namespace detail {

inline LearnerParams oracle_params(std::size_t per_iter_budget) {
  LearnerParams p;
  p.committee_size = 5;
  p.per_iter_budget = per_iter_budget;
  p.reference_episodes = 3;
  p.forward_pool_size = 8;
  return p;
}

}  // namespace detail

inline SuiteResult run_theorem1_suite(const TheorySuiteConfig& cfg) {
  cfg.validate();
  return detail::run_suite("theorem1", cfg.theorem1, cfg.threads, [&](std::size_t i, bool& holds) {
    const std::uint64_t seed = detail::suite_seed(cfg.seed, "theorem1", i);
    RngStream rng(seed, 0);
    auto inst = detail::random_instance(cfg, rng, 1);
    const std::size_t budget = 1 + rng.uniform_index(3);
    DiscreteMdpEnv env(inst.mdp, inst.expert);
    ExpertOracle expert = ExpertOracle::of(env);
    const auto initial = LinearPolicy::zero(inst.mdp.num_actions, inst.mdp.num_states, env.name());
    const auto run = rail_idealized(env, Selector::kDensityQbc, inst.mdp.horizon, budget, expert,
                                    initial, rng.split("learner"), detail::oracle_params(budget));
    const auto r = check_theorem1(inst.mdp, inst.expert, run);
    holds = r.bound_holds();
    return detail::format_line("theorem1", i, seed, inst.mdp, r.check,
                               " per_iter_budget=" + std::to_string(budget));
  });
}

inline SuiteResult run_proposition1_suite(const TheorySuiteConfig& cfg) {
  cfg.validate();
  return detail::run_suite("proposition1", cfg.proposition1, cfg.threads, [&](std::size_t i, bool& holds) {
    const std::uint64_t seed = detail::suite_seed(cfg.seed, "proposition1", i);
    RngStream rng(seed, 0);
    auto inst = detail::random_instance(cfg, rng, 1);
    const std::size_t budget = 1 + rng.uniform_index(3);
    DiscreteMdpEnv env(inst.mdp, inst.expert);
    ExpertOracle expert = ExpertOracle::of(env);
    const auto policy = forward_training_active(env, Selector::kDensityQbc, inst.mdp.horizon, budget,
                                                expert, rng.split("learner"), detail::oracle_params(budget));
    const auto r = check_proposition1(inst.mdp, inst.expert, tabulate(inst.mdp, policy));
    holds = r.bound_holds();
    return detail::format_line("proposition1", i, seed, inst.mdp, r.check,
                               " per_iter_budget=" + std::to_string(budget));
  });
}

inline TheoryReport verify_theory(const TheorySuiteConfig& cfg) {
  cfg.validate();
  TheoryReport report;
  report.suites.push_back(run_lemma1_suite(cfg));
  report.suites.push_back(run_lemma2_suite(cfg));
  report.suites.push_back(run_theorem1_suite(cfg));
  report.suites.push_back(run_proposition1_suite(cfg));
  for (const auto& s : report.suites)
    if (s.instances == 0) report.warnings.push_back(s.name + ": suite of size 0, nothing checked");
  return report;
}

}  // namespace rail
