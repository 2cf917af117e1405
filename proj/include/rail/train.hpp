#pragma once

// L2-regularised multinomial logistic regression.
//
//   f(W) = (1/n) sum_i -log softmax(W phi_i)[y_i] + (l2/2) ||W||^2
//
// minimised by damped Newton steps with Armijo backtracking. The objective is
// non-increasing across iterations and the result is a deterministic function
// of (dataset order, config, starting point).

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "rail/policy.hpp"

namespace rail {

struct TrainConfig {
  double l2 = 1e-4;
  std::size_t max_iterations = 2000;
  double tolerance = 1e-6;  // on the Euclidean norm of the gradient

  void validate() const {
    require(l2 >= 0.0, "TrainConfig: l2 must be >= 0");
    require(tolerance > 0.0, "TrainConfig: tolerance must be > 0");
    require(max_iterations >= 1, "TrainConfig: max_iterations must be >= 1");
  }
};

struct TrainReport {
  LinearPolicy policy;
  std::vector<double> objective_trace;  // objective before each iteration, then final
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

struct SparseRow {
  std::vector<std::pair<std::size_t, double>> nz;
  int label = 0;
};

inline std::vector<SparseRow> sparse_rows(const Dataset& data) {
  std::vector<SparseRow> rows;
  rows.reserve(data.size());
  for (const auto& ex : data) {
    SparseRow r;
    r.label = ex.label;
    for (std::size_t j = 0; j < ex.features.size(); ++j)
      if (ex.features[j] != 0.0) r.nz.emplace_back(j, ex.features[j]);
    rows.push_back(std::move(r));
  }
  return rows;
}

// Row softmax for one example; returns log p[label].
inline double softmax_row(const std::vector<double>& w, std::size_t num_actions, std::size_t dim,
                          const SparseRow& row, double* prob) {
  double top = -INFINITY;
  for (std::size_t a = 0; a < num_actions; ++a) {
    double s = 0.0;
    for (const auto& [j, v] : row.nz) s += w[a * dim + j] * v;
    prob[a] = s;
    top = std::max(top, s);
  }
  double z = 0.0;
  for (std::size_t a = 0; a < num_actions; ++a) z += std::exp(prob[a] - top);
  const double log_z = top + std::log(z);
  const double log_label = prob[row.label] - log_z;
  for (std::size_t a = 0; a < num_actions; ++a) prob[a] = std::exp(prob[a] - log_z);
  return log_label;
}

class LogisticProblem {
 public:
  LogisticProblem(const Dataset& data, std::size_t num_actions, double l2)
      : rows_(sparse_rows(data)), num_actions_(num_actions), dim_(data.feature_dim()), l2_(l2) {}

  std::size_t size() const { return num_actions_ * dim_; }

  double objective(const std::vector<double>& w) const {
    std::vector<double> prob(num_actions_);
    double nll = 0.0;
    for (const auto& r : rows_) nll -= softmax_row(w, num_actions_, dim_, r, prob.data());
    double sq = 0.0;
    for (double v : w) sq += v * v;
    return nll / static_cast<double>(rows_.size()) + 0.5 * l2_ * sq;
  }

  std::vector<double> gradient(const std::vector<double>& w) const {
    std::vector<double> g(size(), 0.0), prob(num_actions_);
    const double inv_n = 1.0 / static_cast<double>(rows_.size());
    for (const auto& r : rows_) {
      softmax_row(w, num_actions_, dim_, r, prob.data());
      for (std::size_t a = 0; a < num_actions_; ++a) {
        const double c = (prob[a] - (static_cast<int>(a) == r.label ? 1.0 : 0.0)) * inv_n;
        for (const auto& [j, v] : r.nz) g[a * dim_ + j] += c * v;
      }
    }
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += l2_ * w[k];
    return g;
  }

  Eigen::MatrixXd hessian(const std::vector<double>& w) const {
    const std::size_t n = size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::vector<double> prob(num_actions_);
    const double inv_n = 1.0 / static_cast<double>(rows_.size());
    for (const auto& r : rows_) {
      softmax_row(w, num_actions_, dim_, r, prob.data());
      for (std::size_t a = 0; a < num_actions_; ++a)
        for (std::size_t b = a; b < num_actions_; ++b) {
          const double c = prob[a] * ((a == b ? 1.0 : 0.0) - prob[b]) * inv_n;
          if (c == 0.0) continue;
          for (const auto& [j, vj] : r.nz)
            for (const auto& [k, vk] : r.nz)
              h(static_cast<Eigen::Index>(a * dim_ + j), static_cast<Eigen::Index>(b * dim_ + k)) +=
                  c * vj * vk;
        }
    }
    // upper block triangle -> full symmetric
    for (std::size_t a = 0; a < num_actions_; ++a)
      for (std::size_t b = a + 1; b < num_actions_; ++b) {
        const auto ra = static_cast<Eigen::Index>(a * dim_), rb = static_cast<Eigen::Index>(b * dim_);
        const auto d = static_cast<Eigen::Index>(dim_);
        h.block(rb, ra, d, d) = h.block(ra, rb, d, d).transpose();
      }
    h.diagonal().array() += l2_;
    return h;
  }

 private:
  std::vector<SparseRow> rows_;
  std::size_t num_actions_;
  std::size_t dim_;
  double l2_;
};

inline double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace detail

inline double logistic_objective(const Dataset& data, const LinearPolicy& policy, double l2) {
  require(!data.empty(), "logistic_objective: empty dataset");
  return detail::LogisticProblem(data, policy.num_actions(), l2).objective(policy.weights());
}

inline std::vector<double> logistic_gradient(const Dataset& data, const LinearPolicy& policy,
                                             double l2) {
  require(!data.empty(), "logistic_gradient: empty dataset");
  return detail::LogisticProblem(data, policy.num_actions(), l2).gradient(policy.weights());
}

// `warm_start`, when given, is the first iterate; otherwise zero weights.
inline TrainReport train_logistic_report(const Dataset& data, const TrainConfig& config,
                                         const LinearPolicy* warm_start = nullptr,
                                         std::string feature_map = {}) {
  config.validate();
  require(!data.empty(), "train_logistic: empty dataset (use LinearPolicy::zero for cold start)");
  require(data.num_actions() >= 1, "train_logistic: dataset has no action count");
  const std::size_t num_actions = data.num_actions();
  const std::size_t dim = data.feature_dim();
  const detail::LogisticProblem problem(data, num_actions, config.l2);

  std::vector<double> w(num_actions * dim, 0.0);
  if (warm_start) {
    require(warm_start->num_actions() == num_actions && warm_start->feature_dim() == dim,
            "train_logistic: warm start shape mismatch");
    w = warm_start->weights();
  }

  TrainReport report;
  double f = problem.objective(w);
  std::vector<double> g = problem.gradient(w);
  report.objective_trace.push_back(f);
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    if (detail::norm2(g) <= config.tolerance) {
      report.converged = true;
      break;
    }
    const Eigen::MatrixXd h = problem.hessian(w);
    const Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(g.size()));
    Eigen::VectorXd dir = h.ldlt().solve(-gv);
    double slope = gv.dot(dir);
    if (!dir.allFinite() || !(slope < 0.0)) {
      dir = -gv;
      slope = -gv.squaredNorm();
    }
    double step = 1.0;
    std::vector<double> trial(w.size());
    double f_trial = f;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings, step *= 0.5) {
      for (std::size_t k = 0; k < w.size(); ++k) trial[k] = w[k] + step * dir[static_cast<Eigen::Index>(k)];
      f_trial = problem.objective(trial);
      if (f_trial <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
    }
    ++report.iterations;
    if (!accepted) break;  // no representable decrease left
    w.swap(trial);
    f = f_trial;
    g = problem.gradient(w);
    report.objective_trace.push_back(f);
  }
  report.gradient_norm = detail::norm2(g);
  report.converged = report.converged || report.gradient_norm <= config.tolerance;
  report.policy = LinearPolicy(num_actions, dim, std::move(w), std::move(feature_map));
  return report;
}

inline LinearPolicy train_logistic(const Dataset& data, const TrainConfig& config = {},
                                   const LinearPolicy* warm_start = nullptr) {
  return train_logistic_report(data, config, warm_start).policy;
}

}  // namespace rail
