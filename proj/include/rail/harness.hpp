#pragma once

// Experiment orchestration: JSON configs, multi-trial learning curves and
// CSV output.
//
// Config keys (all optional except env and learners):
//   name, env, learners[], budget, trials, seed, horizon, eval_episodes,
//   eval_interval, threads, output_dir,
//   env_options { start_radius, seed, corpus_words, eval_words, word_length,
//                 mdp_states, mdp_actions, mdp_horizon },
//   learner     { committee_size, pool_episodes, bins_per_dim,
//                 uniform_pool_size, cba_initial_threshold, iterations,
//                 per_iter_budget, reference_episodes, forward_pool_size,
//                 l2, max_iterations, tolerance }

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rail/environments.hpp"
#include "rail/learners.hpp"
#include "rail/parallel.hpp"

namespace rail {

using Json = nlohmann::ordered_json;

struct ExperimentConfig {
  std::string name = "experiment";
  std::string env = "cartpole";
  std::vector<std::string> learners;
  std::size_t budget = 150;
  std::size_t trials = 10;
  std::uint64_t seed = 1;
  std::size_t horizon = 500;
  std::size_t eval_episodes = 30;  // evaluation start states per point
  std::size_t eval_interval = 5;
  std::size_t threads = 0;         // 0: hardware concurrency
  std::string output_dir;
  EnvOptions env_options;
  LearnerParams learner;

  void validate() const {
    if (budget < 1) throw ConfigError("budget must be >= 1");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
    if (eval_interval < 1) throw ConfigError("eval_interval must be >= 1");
    if (learners.empty()) throw ConfigError("no learners listed");
    const auto known = learner_names();
    std::set<std::string> seen;
    for (const auto& l : learners) {
      if (std::find(known.begin(), known.end(), l) == known.end())
        throw ConfigError("unknown learner '" + l + "'");
      if (!seen.insert(l).second) throw ConfigError("learner '" + l + "' listed twice");
    }
  }
};

// Trials when the config leaves them unset: 10 start-state trials on
// cart-pole, 5 learning trials elsewhere.
inline std::size_t default_trials(std::string_view env) { return env == "cartpole" ? 10 : 5; }

namespace detail {

template <class T>
void read_key(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

inline void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown config key '" + where + k + "'");
}

}  // namespace detail

inline ExperimentConfig config_from_json(const Json& j) {
  detail::reject_unknown(j, {"name", "env", "learners", "budget", "trials", "seed", "horizon", "eval_episodes",
                             "eval_interval", "threads", "output_dir", "env_options", "learner"}, "");
  ExperimentConfig c;
  if (!j.contains("env")) throw ConfigError("config needs 'env'");
  detail::read_key(j, "env", c.env);
  c.trials = default_trials(c.env);
  detail::read_key(j, "name", c.name);
  detail::read_key(j, "learners", c.learners);
  detail::read_key(j, "budget", c.budget);
  detail::read_key(j, "trials", c.trials);
  detail::read_key(j, "seed", c.seed);
  detail::read_key(j, "horizon", c.horizon);
  detail::read_key(j, "eval_episodes", c.eval_episodes);
  detail::read_key(j, "eval_interval", c.eval_interval);
  detail::read_key(j, "threads", c.threads);
  detail::read_key(j, "output_dir", c.output_dir);
  c.env_options.horizon = c.horizon;
  c.env_options.seed = c.seed;
  if (j.contains("env_options")) {
    const auto& e = j.at("env_options");
    detail::reject_unknown(e, {"start_radius", "seed", "corpus_words", "eval_words", "word_length", "mdp_states",
                               "mdp_actions", "mdp_horizon"}, "env_options.");
    auto& o = c.env_options;
    detail::read_key(e, "start_radius", o.start_radius);
    detail::read_key(e, "seed", o.seed);
    detail::read_key(e, "corpus_words", o.corpus_words);
    detail::read_key(e, "eval_words", o.eval_words);
    detail::read_key(e, "word_length", o.word_length);
    detail::read_key(e, "mdp_states", o.mdp_states);
    detail::read_key(e, "mdp_actions", o.mdp_actions);
    detail::read_key(e, "mdp_horizon", o.mdp_horizon);
  }
  if (j.contains("learner")) {
    const auto& l = j.at("learner");
    detail::reject_unknown(l, {"committee_size", "pool_episodes", "bins_per_dim", "uniform_pool_size",
                               "cba_initial_threshold", "iterations", "per_iter_budget", "reference_episodes",
                               "forward_pool_size", "l2", "max_iterations", "tolerance"}, "learner.");
    auto& p = c.learner;
    detail::read_key(l, "committee_size", p.committee_size);
    detail::read_key(l, "pool_episodes", p.pool_episodes);
    detail::read_key(l, "bins_per_dim", p.bins_per_dim);
    detail::read_key(l, "uniform_pool_size", p.uniform_pool_size);
    detail::read_key(l, "cba_initial_threshold", p.cba_initial_threshold);
    detail::read_key(l, "iterations", p.iterations);
    detail::read_key(l, "per_iter_budget", p.per_iter_budget);
    detail::read_key(l, "reference_episodes", p.reference_episodes);
    detail::read_key(l, "forward_pool_size", p.forward_pool_size);
    detail::read_key(l, "l2", p.train.l2);
    detail::read_key(l, "max_iterations", p.train.max_iterations);
    detail::read_key(l, "tolerance", p.train.tolerance);
  }
  c.learner.budget = c.budget;
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in, nullptr, true, true);  // comments allowed
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

// Fully resolved config, echoed next to every output.
inline Json config_to_json(const ExperimentConfig& c) {
  const auto& o = c.env_options;
  const auto& p = c.learner;
  return Json{
      {"name", c.name},
      {"env", c.env},
      {"learners", c.learners},
      {"budget", c.budget},
      {"trials", c.trials},
      {"seed", c.seed},
      {"horizon", c.horizon},
      {"eval_episodes", c.eval_episodes},
      {"eval_interval", c.eval_interval},
      {"threads", c.threads},
      {"output_dir", c.output_dir},
      {"env_options",
       {{"start_radius", o.start_radius},
        {"seed", o.seed},
        {"corpus_words", o.corpus_words},
        {"eval_words", o.eval_words},
        {"word_length", o.word_length},
        {"mdp_states", o.mdp_states},
        {"mdp_actions", o.mdp_actions},
        {"mdp_horizon", o.mdp_horizon}}},
      {"learner",
       {{"committee_size", p.committee_size},
        {"pool_episodes", p.pool_episodes},
        {"bins_per_dim", p.bins_per_dim},
        {"uniform_pool_size", p.uniform_pool_size},
        {"cba_initial_threshold", p.cba_initial_threshold},
        {"iterations", p.iterations},
        {"per_iter_budget", p.per_iter_budget},
        {"reference_episodes", p.reference_episodes},
        {"forward_pool_size", p.forward_pool_size},
        {"l2", p.train.l2},
        {"max_iterations", p.train.max_iterations},
        {"tolerance", p.train.tolerance}}},
  };
}

// ---------------------------------------------------------------------------

// Learner stream of trial `trial`; shared by all learners of an experiment
// and by the served session.
inline RngStream trial_stream(std::uint64_t seed, std::size_t trial) {
  return RngStream(seed, detail::hash_label("trial")).split(trial);
}

// Evaluation stream of trial `trial`: every evaluation point and every
// learner within a trial sees the same start states.
inline RngStream eval_stream(std::uint64_t seed, std::size_t trial) {
  return RngStream(seed, detail::hash_label("eval")).split(trial);
}

// Evaluation points: 0, interval, 2 interval, ..., and always the budget.
inline std::vector<std::size_t> evaluation_points(std::size_t budget, std::size_t interval) {
  std::vector<std::size_t> pts;
  for (std::size_t q = 0; q < budget; q += interval) pts.push_back(q);
  pts.push_back(budget);
  return pts;
}

// Total reward, or per-step accuracy for environments that report it.
template <PolicyFn P>
double evaluate_policy(const Environment& env, P&& policy, std::size_t episodes, RngStream rng) {
  const auto est = estimate_value(env, policy, episodes, rng);
  return env.reports_accuracy() ? est.mean / static_cast<double>(env.spec().horizon) : est.mean;
}

inline double evaluate_learner(const Environment& env, const Learner& learner, std::size_t episodes,
                               RngStream rng) {
  return evaluate_policy(env, [&](const StateVec& s, std::size_t t) { return learner.act(s, t); }, episodes, rng);
}

struct CurveRow {
  std::size_t queries = 0;
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> values;  // one per trial
};

struct LearningCurve {
  std::string learner;
  std::vector<CurveRow> rows;

  const CurveRow& at(std::size_t queries) const {
    for (const auto& r : rows)
      if (r.queries == queries) return r;
    throw ContractError("no curve row at " + std::to_string(queries) + " queries");
  }
};

inline void summarize(CurveRow& row) {
  const double n = static_cast<double>(row.values.size());
  double sum = 0.0;
  for (double v : row.values) sum += v;
  row.mean = sum / n;
  row.std_error = 0.0;
  if (row.values.size() > 1) {
    double ss = 0.0;
    for (double v : row.values) ss += (v - row.mean) * (v - row.mean);
    row.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
}

struct TrialRun {
  std::vector<double> values;       // one per evaluation point
  std::vector<Step> queries;        // expert queries in order
  LinearPolicy policy;              // final (stationary) policy
  std::size_t queries_used = 0;
  bool stopped = false;
};

// One learner, one trial: runs to the budget, evaluating at each point.
inline TrialRun run_trial(const ExperimentConfig& config, const EnvBundle& envs, const std::string& learner_name,
                          std::size_t trial) {
  ExpertOracle expert = ExpertOracle::of(*envs.train);
  auto learner = make_learner(learner_name, *envs.train, expert, config.learner, trial_stream(config.seed, trial));
  TrialRun run;
  for (std::size_t q : evaluation_points(config.budget, config.eval_interval)) {
    while (learner->queries_used() < q && !learner->exhausted()) learner->step();
    run.values.push_back(evaluate_learner(*envs.eval, *learner, config.eval_episodes, eval_stream(config.seed, trial)));
  }
  run.queries = learner->state().queries;
  run.policy = learner->policy();
  run.queries_used = learner->queries_used();
  run.stopped = learner->stopped();
  return run;
}

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<LearningCurve> curves;  // in config.learners order
  CurveRow expert;                    // expert performance per trial (queries = 0)
  std::vector<std::vector<TrialRun>> runs;  // [learner][trial]

  const LearningCurve& curve(std::string_view learner) const {
    for (const auto& c : curves)
      if (c.learner == learner) return c;
    throw ContractError("no curve for learner '" + std::string(learner) + "'");
  }
};

inline EnvBundle make_experiment_env(const ExperimentConfig& config) {
  EnvOptions opt = config.env_options;
  opt.horizon = config.horizon;
  return make_environment(config.env, opt);
}

// Validates env/learner pairs before any work, then runs learners x trials in
// parallel. Results do not depend on the thread count.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const EnvBundle envs = make_experiment_env(config);
  for (const auto& l : config.learners)
    if (!learner_supported(l, *envs.train))
      throw ConfigError("learner '" + l + "' cannot run on '" + config.env + "' (no uniform state sampler)");
  ExperimentConfig cfg = config;
  cfg.learner.budget = cfg.budget;

  ExperimentResult result;
  result.config = cfg;
  const std::size_t L = cfg.learners.size();
  result.runs.assign(L, std::vector<TrialRun>(cfg.trials));
  result.expert.values.resize(cfg.trials);
  parallel_for(L * cfg.trials + cfg.trials, cfg.threads, [&](std::size_t job) {
    if (job >= L * cfg.trials) {
      const std::size_t trial = job - L * cfg.trials;
      const Environment& env = *envs.eval;
      result.expert.values[trial] =
          evaluate_policy(env, [&](const StateVec& s) { return env.expert_action(s); }, cfg.eval_episodes,
                          eval_stream(cfg.seed, trial));
      return;
    }
    const std::size_t li = job / cfg.trials, trial = job % cfg.trials;
    result.runs[li][trial] = run_trial(cfg, envs, cfg.learners[li], trial);
  });
  summarize(result.expert);

  const auto points = evaluation_points(cfg.budget, cfg.eval_interval);
  for (std::size_t li = 0; li < L; ++li) {
    LearningCurve curve;
    curve.learner = cfg.learners[li];
    for (std::size_t k = 0; k < points.size(); ++k) {
      CurveRow row;
      row.queries = points[k];
      for (const auto& run : result.runs[li]) row.values.push_back(run.values[k]);
      summarize(row);
      curve.rows.push_back(std::move(row));
    }
    result.curves.push_back(std::move(curve));
  }
  return result;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string curve_to_csv(const LearningCurve& curve) {
  std::string out = "learner,queries,mean,stderr";
  const std::size_t trials = curve.rows.empty() ? 0 : curve.rows.front().values.size();
  for (std::size_t t = 0; t < trials; ++t) out += ",trial_" + std::to_string(t);
  out += '\n';
  for (const auto& r : curve.rows) {
    out += curve.learner + ',' + std::to_string(r.queries) + ',' + format_number(r.mean) + ',' +
           format_number(r.std_error);
    for (double v : r.values) out += ',' + format_number(v);
    out += '\n';
  }
  return out;
}

inline LearningCurve curve_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("learner,queries,mean,stderr"))
    throw ConfigError("not a learning-curve CSV");
  LearningCurve curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() < 4) throw ConfigError("short CSV row: " + line);
    curve.learner = cells[0];
    CurveRow row;
    row.queries = std::stoul(cells[1]);
    row.mean = std::stod(cells[2]);
    row.std_error = std::stod(cells[3]);
    for (std::size_t i = 4; i < cells.size(); ++i) row.values.push_back(std::stod(cells[i]));
    curve.rows.push_back(std::move(row));
  }
  return curve;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

// <dir>/<learner>.csv per learner, plus config.json (the resolved config and
// the expert's performance).
inline std::vector<std::filesystem::path> write_results(const ExperimentResult& result,
                                                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (const auto& c : result.curves) {
    written.push_back(dir / (c.learner + ".csv"));
    write_text(written.back(), curve_to_csv(c));
  }
  Json sidecar = config_to_json(result.config);
  sidecar["expert"] = {{"mean", result.expert.mean}, {"stderr", result.expert.std_error},
                       {"trial_values", result.expert.values}};
  written.push_back(dir / "config.json");
  write_text(written.back(), sidecar.dump(2) + "\n");
  return written;
}

// Final policy of every trial. Forward training's policy is non-stationary
// and has no file format; it is skipped.
inline void write_policies(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t li = 0; li < result.curves.size(); ++li)
    if (result.curves[li].learner != "forward-active")
      for (std::size_t t = 0; t < result.runs[li].size(); ++t) {
      std::ostringstream os;
      save_policy(os, result.runs[li][t].policy);
      write_text(dir / (result.curves[li].learner + "-trial" + std::to_string(t) + ".policy"), os.str());
    }
}

}  // namespace rail
