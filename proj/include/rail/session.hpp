#pragma once

// A live expert session: one learner runs in a worker thread against an
// ExpertOracle whose answers come from outside (a human over HTTP). At most
// one query is outstanding; the learner blocks until it is labelled.

#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "rail/harness.hpp"

namespace rail {

enum class SessionStatus { kWaiting, kQuery, kDone };

inline const char* to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::kWaiting: return "waiting";
    case SessionStatus::kQuery: return "query";
    case SessionStatus::kDone: return "done";
  }
  return "done";
}

struct SessionOptions {
  ExperimentConfig experiment;   // env, budget, seed, horizon, evaluation, learner params
  std::string learner = "rail-dw";
  std::size_t trial = 0;         // selects the learner stream, as in run_experiment
  std::chrono::milliseconds idle_timeout{0};  // 0: wait forever
};

struct PendingQuery {
  std::uint64_t id = 0;
  StateVec state;
};

struct LabelResult {
  enum class Outcome { kAccepted, kStale, kInvalidAction, kClosed };
  Outcome outcome = Outcome::kClosed;
  std::size_t queries_used = 0;
  std::uint64_t current_query_id = 0;  // 0 when no query is outstanding
  std::string message;
};

class ExpertSession {
 public:
  explicit ExpertSession(SessionOptions options)
      : options_(std::move(options)), envs_(make_experiment_env(options_.experiment)) {
    auto& cfg = options_.experiment;
    cfg.learner.budget = cfg.budget;
    if (!learner_supported(options_.learner, *envs_.train))
      throw ConfigError("learner '" + options_.learner + "' cannot run on '" + cfg.env + "'");
    expert_ = std::make_unique<ExpertOracle>([this](const StateVec& s) { return await_label(s); });
    learner_ = make_learner(options_.learner, *envs_.train, *expert_, cfg.learner, trial_stream(cfg.seed, options_.trial));
    std::random_device rd;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%08x%08x", rd(), rd());
    nonce_ = buf;
  }

  ~ExpertSession() {
    stop();
    if (worker_.joinable()) worker_.join();
  }

  ExpertSession(const ExpertSession&) = delete;
  ExpertSession& operator=(const ExpertSession&) = delete;

  void start() {
    std::lock_guard lock(mutex_);
    if (started_) return;
    started_ = true;
    worker_ = std::thread([this] { run(); });
  }

  // Ends the session; a blocked learner is released.
  void stop(const std::string& reason = "stopped") {
    std::lock_guard lock(mutex_);
    if (status_ == SessionStatus::kDone) return;
    stop_requested_ = true;
    if (reason_.empty()) reason_ = reason;
    if (!started_) status_ = SessionStatus::kDone;
    cv_.notify_all();
  }

  // Blocks until the session is done.
  void wait() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return status_ == SessionStatus::kDone; });
  }

  const std::string& nonce() const { return nonce_; }
  const Environment& env() const { return *envs_.train; }
  const SessionOptions& options() const { return options_; }

  SessionStatus status() const {
    std::lock_guard lock(mutex_);
    return status_;
  }
  std::string end_reason() const {
    std::lock_guard lock(mutex_);
    return reason_;
  }
  std::size_t queries_used() const {
    std::lock_guard lock(mutex_);
    return answered_;
  }
  std::optional<PendingQuery> pending() const {
    std::lock_guard lock(mutex_);
    if (status_ != SessionStatus::kQuery) return std::nullopt;
    return PendingQuery{query_id_, pending_state_};
  }
  std::vector<CurveRow> curve() const {
    std::lock_guard lock(mutex_);
    return curve_;
  }
  // Answered queries in order.
  std::vector<Step> labelled() const {
    std::lock_guard lock(mutex_);
    return labelled_;
  }

  LabelResult submit_label(std::uint64_t query_id, long long action) {
    std::lock_guard lock(mutex_);
    LabelResult r;
    r.queries_used = answered_;
    if (status_ != SessionStatus::kQuery) {
      r.outcome = LabelResult::Outcome::kClosed;
      r.message = status_ == SessionStatus::kDone ? "session is done" : "no query is outstanding";
      return r;
    }
    r.current_query_id = query_id_;
    if (query_id != query_id_) {
      r.outcome = LabelResult::Outcome::kStale;
      r.message = "stale query_id " + std::to_string(query_id);
      return r;
    }
    if (action < 0 || static_cast<std::size_t>(action) >= envs_.train->spec().num_actions) {
      r.outcome = LabelResult::Outcome::kInvalidAction;
      r.message = "action " + std::to_string(action) + " outside [0, " +
                  std::to_string(envs_.train->spec().num_actions) + ")";
      return r;
    }
    label_ = static_cast<int>(action);
    labelled_.push_back({pending_state_, label_.value()});
    ++answered_;
    status_ = SessionStatus::kWaiting;
    last_activity_ = std::chrono::steady_clock::now();
    cv_.notify_all();
    r.outcome = LabelResult::Outcome::kAccepted;
    r.queries_used = answered_;
    r.current_query_id = 0;
    return r;
  }

 private:
  struct Stopped {};

  int await_label(const StateVec& state) {
    std::unique_lock lock(mutex_);
    if (stop_requested_) throw Stopped{};
    ++query_id_;
    pending_state_ = state;
    label_.reset();
    status_ = SessionStatus::kQuery;
    last_activity_ = std::chrono::steady_clock::now();
    cv_.notify_all();
    auto ready = [this] { return label_.has_value() || stop_requested_; };
    if (options_.idle_timeout.count() > 0) {
      while (!ready()) {
        const auto deadline = last_activity_ + options_.idle_timeout;
        if (cv_.wait_until(lock, deadline) == std::cv_status::timeout && !ready() &&
            std::chrono::steady_clock::now() >= last_activity_ + options_.idle_timeout) {
          stop_requested_ = true;
          if (reason_.empty()) reason_ = "idle timeout";
        }
      }
    } else {
      cv_.wait(lock, ready);
    }
    if (!label_) throw Stopped{};
    return *label_;
  }

  void evaluate(std::size_t queries) {
    const auto& cfg = options_.experiment;
    CurveRow row;
    row.queries = queries;
    row.values.push_back(evaluate_learner(*envs_.eval, *learner_, cfg.eval_episodes, eval_stream(cfg.seed, options_.trial)));
    summarize(row);
    std::lock_guard lock(mutex_);
    curve_.push_back(std::move(row));
  }

  void run() {
    const auto& cfg = options_.experiment;
    try {
      for (std::size_t q : evaluation_points(cfg.budget, cfg.eval_interval)) {
        while (learner_->queries_used() < q && !learner_->exhausted()) learner_->step();
        evaluate(q);
      }
    } catch (const Stopped&) {
    } catch (const std::exception& e) {
      std::lock_guard lock(mutex_);
      reason_ = std::string("error: ") + e.what();
    }
    std::lock_guard lock(mutex_);
    if (reason_.empty()) reason_ = learner_->stopped() ? "learner stopped" : "budget reached";
    status_ = SessionStatus::kDone;
    cv_.notify_all();
  }

  SessionOptions options_;
  EnvBundle envs_;
  std::unique_ptr<ExpertOracle> expert_;
  std::unique_ptr<Learner> learner_;
  std::string nonce_;

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::thread worker_;
  bool started_ = false;
  bool stop_requested_ = false;
  SessionStatus status_ = SessionStatus::kWaiting;
  std::string reason_;
  std::uint64_t query_id_ = 0;
  StateVec pending_state_;
  std::optional<int> label_;
  std::size_t answered_ = 0;
  std::vector<Step> labelled_;
  std::vector<CurveRow> curve_;
  std::chrono::steady_clock::time_point last_activity_ = std::chrono::steady_clock::now();
};

}  // namespace rail
