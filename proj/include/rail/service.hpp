#pragma once

// HTTP/JSON front end of an ExpertSession.
//
//   GET  /session  {nonce, env, learner, budget, queries_used, status, reason}
//   GET  /query    {nonce, status:"query", query_id, state_values, render, action_labels}
//                  or {nonce, status:"waiting"|"done"}
//   POST /label    {query_id, action[, nonce]} -> {nonce, accepted, queries_used}
//                  422 invalid action, 409 stale query_id / nonce mismatch / no query
//   GET  /curve    {nonce, rows:[{queries, mean, stderr, trial_values}]}
//   POST /stop     {nonce, status}

#include <memory>
#include <string>
#include <thread>

// before httplib: <resolv.h> defines a _res macro that breaks Eigen
#include "rail/session.hpp"

#include <httplib.h>
#include <json.hpp>

namespace rail {

class ExpertService {
 public:
  explicit ExpertService(ExpertSession& session) : session_(session) { routes(); }

  ~ExpertService() { stop(); }

  ExpertService(const ExpertService&) = delete;
  ExpertService& operator=(const ExpertService&) = delete;

  // Binds and serves in a background thread; port 0 picks a free port.
  // Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    int bound = port;
    if (port == 0) {
      bound = server_.bind_to_any_port(host);
    } else if (!server_.bind_to_port(host, port)) {
      bound = -1;
    }
    if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return bound;
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  httplib::Server& server() { return server_; }

 private:
  using Json = nlohmann::ordered_json;

  void reply(httplib::Response& res, int status, Json body) {
    body["nonce"] = session_.nonce();
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  Json query_json() {
    const auto q = session_.pending();
    if (!q) return Json{{"status", to_string(session_.status())}};
    const Environment& env = session_.env();
    Json render = Json::object();
    for (const auto& [k, v] : env.render_fields(q->state)) render[k] = v;
    return Json{{"status", "query"},
                {"query_id", q->id},
                {"state_values", q->state},
                {"render", render},
                {"action_labels", env.action_labels()}};
  }

  void routes() {
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                 {"Access-Control-Allow-Headers", "Content-Type"},
                                 {"Cache-Control", "no-store"}});
    server_.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server_.Get("/session", [this](const httplib::Request&, httplib::Response& res) {
      const auto& opt = session_.options();
      Json body{{"env", opt.experiment.env},
                {"learner", opt.learner},
                {"budget", opt.experiment.budget},
                {"queries_used", session_.queries_used()},
                {"status", to_string(session_.status())}};
      if (session_.status() == SessionStatus::kDone) body["reason"] = session_.end_reason();
      reply(res, 200, std::move(body));
    });

    server_.Get("/query", [this](const httplib::Request&, httplib::Response& res) { reply(res, 200, query_json()); });

    server_.Post("/label", [this](const httplib::Request& req, httplib::Response& res) {
      Json in;
      try {
        in = Json::parse(req.body);
      } catch (const nlohmann::json::parse_error&) {
        reply(res, 400, {{"accepted", false}, {"error", "body is not JSON"}});
        return;
      }
      if (!in.is_object() || !in.contains("query_id") || !in["query_id"].is_number_unsigned()) {
        reply(res, 400, {{"accepted", false}, {"error", "query_id must be a non-negative integer"}});
        return;
      }
      if (in.contains("nonce") && in["nonce"] != session_.nonce()) {
        reply(res, 409, {{"accepted", false}, {"error", "nonce does not match this session"}});
        return;
      }
      if (!in.contains("action") || !in["action"].is_number_integer()) {
        Json body{{"accepted", false}, {"error", "action must be an integer index"}};
        body["query"] = query_json();
        reply(res, 422, std::move(body));
        return;
      }
      const auto r = session_.submit_label(in["query_id"].get<std::uint64_t>(), in["action"].get<long long>());
      Json body{{"accepted", r.outcome == LabelResult::Outcome::kAccepted}, {"queries_used", r.queries_used}};
      switch (r.outcome) {
        case LabelResult::Outcome::kAccepted:
          reply(res, 200, std::move(body));
          return;
        case LabelResult::Outcome::kInvalidAction:
          body["error"] = r.message;
          body["query"] = query_json();
          reply(res, 422, std::move(body));
          return;
        case LabelResult::Outcome::kStale:
        case LabelResult::Outcome::kClosed:
          body["error"] = r.message;
          body["query"] = query_json();
          reply(res, 409, std::move(body));
          return;
      }
    });

    server_.Get("/curve", [this](const httplib::Request&, httplib::Response& res) {
      Json rows = Json::array();
      for (const auto& r : session_.curve())
        rows.push_back({{"queries", r.queries}, {"mean", r.mean}, {"stderr", r.std_error}, {"trial_values", r.values}});
      reply(res, 200, {{"rows", rows}});
    });

    server_.Post("/stop", [this](const httplib::Request&, httplib::Response& res) {
      session_.stop("stopped by client");
      reply(res, 200, {{"status", to_string(session_.status())}});
    });
  }

  ExpertSession& session_;
  httplib::Server server_;
  std::thread thread_;
};

}  // namespace rail
