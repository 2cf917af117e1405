// rail: command-line front end.
//
//   rail run <config.json> [--output DIR] [--threads N] [--save-policies DIR]
//   rail verify-theory [--seed S] [--sizes L1,L2,TH1,PROP1] [--verbose]
//   rail serve --env cartpole --learner rail-dw --budget 20 --port 8080
//   rail eval --policy-file FILE --env cartpole --episodes 30

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "rail/harness.hpp"
#include "rail/service.hpp"
#include "rail/theory.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

int cmd_run(const std::string& config_path, std::string output, std::size_t threads, bool threads_set,
            const std::string& policy_dir) {
  rail::ExperimentConfig config = rail::load_config(config_path);
  if (threads_set) config.threads = threads;
  if (output.empty()) output = config.output_dir.empty() ? "results/" + config.name : config.output_dir;
  const auto start = std::chrono::steady_clock::now();
  const auto result = rail::run_experiment(config);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& p : rail::write_results(result, output)) std::printf("wrote %s\n", p.string().c_str());
  if (!policy_dir.empty()) rail::write_policies(result, policy_dir);

  std::printf("\n%s on %s: %zu trials, budget %zu (%.1f s)\n", config.name.c_str(), config.env.c_str(),
              result.config.trials, config.budget, secs);
  std::printf("expert: %.3f +- %.3f\n", result.expert.mean, result.expert.std_error);
  std::printf("%-16s", "queries");
  const auto& rows0 = result.curves.front().rows;
  const std::size_t stride = std::max<std::size_t>(1, rows0.size() / 6);
  for (std::size_t k = 0; k < rows0.size(); k += stride) std::printf(" %9zu", rows0[k].queries);
  if ((rows0.size() - 1) % stride != 0) std::printf(" %9zu", rows0.back().queries);
  std::printf("\n");
  for (const auto& c : result.curves) {
    std::printf("%-16s", c.learner.c_str());
    for (std::size_t k = 0; k < c.rows.size(); k += stride) std::printf(" %9.3f", c.rows[k].mean);
    if ((c.rows.size() - 1) % stride != 0) std::printf(" %9.3f", c.rows.back().mean);
    std::printf("\n");
  }
  return 0;
}

int cmd_verify(std::uint64_t seed, const std::vector<std::size_t>& sizes, std::size_t threads, bool verbose) {
  rail::TheorySuiteConfig cfg;
  cfg.seed = seed;
  cfg.threads = threads;
  if (!sizes.empty()) {
    if (sizes.size() != 4) throw rail::ConfigError("--sizes takes four counts: lemma1,lemma2,theorem1,proposition1");
    cfg.lemma1 = sizes[0];
    cfg.lemma2 = sizes[1];
    cfg.theorem1 = sizes[2];
    cfg.proposition1 = sizes[3];
  }
  const auto report = rail::verify_theory(cfg);
  for (const auto& w : report.warnings) std::printf("warning: %s\n", w.c_str());
  for (const auto& s : report.suites) {
    for (const auto& line : s.lines)
      if (verbose || line.ends_with("VIOLATION")) std::printf("%s\n", line.c_str());
    std::printf("%-13s instances=%zu violations=%zu  %s\n", s.name.c_str(), s.instances, s.violations,
                s.passed() ? "PASS" : "FAIL");
  }
  std::printf("theory: %s\n", report.passed() ? "PASS" : "FAIL");
  return report.passed() ? 0 : 1;
}

int cmd_serve(rail::SessionOptions options, const std::string& host, int port, bool exit_when_done) {
  rail::ExpertSession session(std::move(options));
  rail::ExpertService service(session);
  const int bound = service.start(host, port);
  std::printf("serving %s/%s (budget %zu) on http://%s:%d  nonce %s\n", session.options().experiment.env.c_str(),
              session.options().learner.c_str(), session.options().experiment.budget, host.c_str(), bound,
              session.nonce().c_str());
  std::fflush(stdout);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  session.start();
  bool announced = false;
  while (!g_interrupted) {
    if (session.status() == rail::SessionStatus::kDone) {
      if (!announced) {
        std::printf("session done (%s) after %zu queries\n", session.end_reason().c_str(), session.queries_used());
        std::fflush(stdout);
        announced = true;
      }
      if (exit_when_done) break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  session.stop("interrupted");
  session.wait();
  service.stop();
  return 0;
}

int cmd_eval(const std::string& policy_file, const std::string& env_name, std::size_t episodes, std::uint64_t seed,
             std::size_t horizon) {
  std::ifstream in(policy_file);
  if (!in) throw rail::ConfigError("cannot open " + policy_file);
  const rail::LinearPolicy policy = rail::load_policy(in);
  rail::EnvOptions opt;
  opt.horizon = horizon;
  opt.seed = seed;
  const auto envs = rail::make_environment(env_name, opt);
  const rail::Environment& env = *envs.eval;
  if (policy.feature_dim() != env.feature_dim() || policy.num_actions() != env.spec().num_actions)
    throw rail::ConfigError("policy shape (" + std::to_string(policy.num_actions()) + " x " +
                            std::to_string(policy.feature_dim()) + ") does not fit " + env_name);
  rail::RngStream rng = rail::eval_stream(seed, 0);
  const auto est = rail::estimate_value(env, rail::greedy(env, policy), episodes, rng);
  std::printf("%s: value %.6f +- %.6f over %zu episodes\n", env_name.c_str(), est.mean, est.std_error, episodes);
  if (env.reports_accuracy())
    std::printf("per-step accuracy %.6f\n", est.mean / static_cast<double>(env.spec().horizon));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"active imitation learning by reduction to i.i.d. active learning"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment config and write learning-curve CSVs");
  std::string config_path, output, policy_dir;
  std::size_t threads = 0;
  run->add_option("config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--output", output, "output directory (default: config output_dir or results/<name>)");
  auto* threads_opt = run->add_option("--threads", threads, "worker threads (0: all cores)");
  run->add_option("--save-policies", policy_dir, "also write every trial's final policy here");

  auto* verify = app.add_subcommand("verify-theory", "check the regret bounds on random enumerable MDPs");
  std::uint64_t seed = 1;
  std::vector<std::size_t> sizes;
  bool verbose = false;
  std::size_t verify_threads = 0;
  verify->add_option("--seed", seed, "suite seed");
  verify->add_option("--sizes", sizes, "instance counts lemma1,lemma2,theorem1,proposition1")->delimiter(',');
  verify->add_option("--threads", verify_threads, "worker threads (0: all cores)");
  verify->add_flag("--verbose", verbose, "print one line per instance");

  auto* serve = app.add_subcommand("serve", "serve a live expert session over HTTP");
  rail::SessionOptions session;
  session.experiment.learners = {"rail-dw"};
  std::string host = "127.0.0.1", serve_config;
  int port = 8080;
  double idle_timeout = 0.0;
  bool exit_when_done = false;
  serve->add_option("--config", serve_config, "experiment config supplying env options and learner parameters")
      ->check(CLI::ExistingFile);
  serve->add_option("--env", session.experiment.env, "environment")->capture_default_str();
  serve->add_option("--learner", session.learner, "learner")->capture_default_str();
  auto* budget_opt = serve->add_option("--budget", session.experiment.budget, "query budget")->capture_default_str();
  serve->add_option("--port", port, "port (0: any free port)")->capture_default_str();
  serve->add_option("--host", host, "bind address")->capture_default_str();
  auto* seed_opt = serve->add_option("--seed", session.experiment.seed, "seed")->capture_default_str();
  auto* horizon_opt = serve->add_option("--horizon", session.experiment.horizon, "episode length")->capture_default_str();
  serve->add_option("--trial", session.trial, "trial stream index")->capture_default_str();
  serve->add_option("--eval-interval", session.experiment.eval_interval, "queries between curve points")
      ->capture_default_str();
  serve->add_option("--eval-episodes", session.experiment.eval_episodes, "episodes per curve point")
      ->capture_default_str();
  serve->add_option("--idle-timeout", idle_timeout, "end the session after this many idle seconds (0: never)");
  serve->add_flag("--exit-when-done", exit_when_done, "exit once the session ends");

  auto* eval = app.add_subcommand("eval", "evaluate a saved policy");
  std::string policy_file, env_name = "cartpole";
  std::size_t episodes = 30, horizon = 500;
  std::uint64_t eval_seed = 1;
  eval->add_option("--policy-file", policy_file, "policy file")->required()->check(CLI::ExistingFile);
  eval->add_option("--env", env_name, "environment")->capture_default_str();
  eval->add_option("--episodes", episodes, "evaluation episodes")->capture_default_str();
  eval->add_option("--seed", eval_seed, "seed")->capture_default_str();
  eval->add_option("--horizon", horizon, "episode length")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, output, threads, threads_opt->count() > 0, policy_dir);
    if (*verify) return cmd_verify(seed, sizes, verify_threads, verbose);
    if (*serve) {
      if (!serve_config.empty()) {
        rail::SessionOptions from_file;
        from_file.experiment = rail::load_config(serve_config);
        from_file.learner = session.learner;
        from_file.trial = session.trial;
        if (budget_opt->count()) from_file.experiment.budget = session.experiment.budget;
        if (seed_opt->count()) from_file.experiment.seed = session.experiment.seed;
        if (horizon_opt->count()) from_file.experiment.horizon = session.experiment.horizon;
        session = std::move(from_file);
      } else {
        session.experiment.env_options.seed = session.experiment.seed;
      }
      session.experiment.learners = {session.learner};
      session.experiment.validate();
      session.idle_timeout = std::chrono::milliseconds(static_cast<long long>(idle_timeout * 1000.0));
      return cmd_serve(std::move(session), host, port, exit_when_done);
    }
    if (*eval) return cmd_eval(policy_file, env_name, episodes, eval_seed, horizon);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
