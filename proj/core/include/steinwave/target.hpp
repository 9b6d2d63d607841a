#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <utility>
#include <vector>

namespace steinwave::vi {

/// Log-density a sampler can draw toward. Implementations must be safe to
/// evaluate from concurrent workers (per-call scratch only).
class Target {
 public:
  virtual ~Target() = default;

  virtual int dim() const = 0;
  /// Log posterior up to a constant; -inf for infeasible theta.
  virtual double log_posterior(const Eigen::VectorXd& theta) const = 0;
  /// Data term of the log posterior (used by the ELBO); -inf when infeasible.
  virtual double log_likelihood(const Eigen::VectorXd& theta) const = 0;
  /// Throws on infeasible theta.
  virtual Eigen::VectorXd grad_log_posterior(const Eigen::VectorXd& theta) const = 0;

  virtual const Eigen::VectorXd& prior_mean() const = 0;
  virtual const Eigen::MatrixXd& prior_cov() const = 0;

  /// Hard feasibility box; empty when unbounded.
  virtual std::vector<std::pair<double, double>> bounds() const { return {}; }

  long forward_solve_count() const { return solves_.load(std::memory_order_relaxed); }
  void reset_forward_solve_count() const { solves_.store(0, std::memory_order_relaxed); }

 protected:
  void count_solves(long n) const { solves_.fetch_add(n, std::memory_order_relaxed); }

 private:
  mutable std::atomic<long> solves_{0};
};

}  // namespace steinwave::vi
