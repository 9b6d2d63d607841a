#pragma once

// Shared test-only helpers: an exact rational solver used as the independent
// oracle for the five-point systems, small analytic sampler targets, and the
// coarse-grid desk problems reused across posterior/inference/baseline tests.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>

#include "steinwave/bayes.hpp"
#include "steinwave/target.hpp"
#include "steinwave/wave.hpp"

namespace testsupport {

struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Fraction of(std::int64_t n, std::int64_t d = 1) {
    if (d == 0) throw std::runtime_error("fraction with zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
    return g ? Fraction{n / g, d / g} : Fraction{0, 1};
  }
  Fraction operator+(const Fraction& o) const {
    return of(num * o.den + o.num * den, den * o.den);
  }
  Fraction operator-(const Fraction& o) const {
    return of(num * o.den - o.num * den, den * o.den);
  }
  Fraction operator*(const Fraction& o) const { return of(num * o.num, den * o.den); }
  Fraction operator/(const Fraction& o) const { return of(num * o.den, den * o.num); }
  bool is_zero() const { return num == 0; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Exact Gaussian elimination with partial (first-nonzero) pivoting on a 5x5
/// rational system. Integer inputs stay exactly representable throughout.
inline std::array<Fraction, 5> solve5_rational(std::array<std::array<Fraction, 5>, 5> a,
                                               std::array<Fraction, 5> b) {
  for (int col = 0; col < 5; ++col) {
    int pivot = -1;
    for (int r = col; r < 5; ++r)
      if (!a[r][col].is_zero()) {
        pivot = r;
        break;
      }
    if (pivot < 0) throw std::runtime_error("singular rational system");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (int r = 0; r < 5; ++r) {
      if (r == col || a[r][col].is_zero()) continue;
      const Fraction f = a[r][col] / a[col][col];
      for (int c = col; c < 5; ++c) a[r][c] = a[r][c] - f * a[col][c];
      b[r] = b[r] - f * b[col];
    }
  }
  std::array<Fraction, 5> x;
  for (int i = 0; i < 5; ++i) x[i] = b[i] / a[i][i];
  return x;
}

/// Oracle: exact rational coefficients of the five-point system for the given
/// offsets, derivative order and dx = 1 (rescale by dx^order outside).
inline std::array<double, 5> stencil_oracle_unit_dx(const std::array<int, 5>& offsets,
                                                    int order) {
  std::array<std::array<Fraction, 5>, 5> a;
  for (int r = 0; r < 5; ++r)
    for (int j = 0; j < 5; ++j) {
      std::int64_t p = 1;
      for (int k = 0; k < r; ++k) p *= offsets[j];
      a[r][j] = Fraction::of(p);
    }
  std::array<Fraction, 5> rhs{};
  std::int64_t fact = 1;
  for (int k = 2; k <= order; ++k) fact *= k;
  rhs[order] = Fraction::of(fact);
  const auto x = solve5_rational(a, rhs);
  std::array<double, 5> out;
  for (int i = 0; i < 5; ++i) out[i] = x[i].value();
  return out;
}

/// Gaussian target N(mean, cov) posed as a Target: the whole density is the
/// prior and the likelihood term is zero, so ELBO(q) = -KL(q || target).
class GaussianToy : public steinwave::vi::Target {
 public:
  GaussianToy(Eigen::VectorXd mean, Eigen::MatrixXd cov)
      : mean_(std::move(mean)), cov_(std::move(cov)) {
    precision_ = cov_.llt().solve(Eigen::MatrixXd::Identity(cov_.rows(), cov_.cols()));
  }

  int dim() const override { return static_cast<int>(mean_.size()); }
  double log_likelihood(const Eigen::VectorXd&) const override {
    count_solves(1);
    return 0.0;
  }
  double log_posterior(const Eigen::VectorXd& theta) const override {
    count_solves(1);
    const Eigen::VectorXd d = theta - mean_;
    return -0.5 * d.dot(precision_ * d);
  }
  Eigen::VectorXd grad_log_posterior(const Eigen::VectorXd& theta) const override {
    count_solves(1);
    return -(precision_ * (theta - mean_));
  }
  const Eigen::VectorXd& prior_mean() const override { return mean_; }
  const Eigen::MatrixXd& prior_cov() const override { return cov_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_, precision_;
};

/// Conjugate Gaussian problem: likelihood N(theta; a, s2 I) with prior
/// N(theta0, M). The posterior is Gaussian with known moments, which makes it
/// an exact oracle for ELBO and line-search behavior.
class GaussianPosteriorToy : public steinwave::vi::Target {
 public:
  GaussianPosteriorToy(Eigen::VectorXd a, double s2, Eigen::VectorXd theta0, Eigen::MatrixXd m)
      : a_(std::move(a)), s2_(s2), theta0_(std::move(theta0)), m_(std::move(m)) {
    m_inv_ = m_.llt().solve(Eigen::MatrixXd::Identity(m_.rows(), m_.cols()));
    const Eigen::MatrixXd post_prec =
        Eigen::MatrixXd::Identity(m_.rows(), m_.cols()) / s2_ + m_inv_;
    post_cov_ = post_prec.llt().solve(Eigen::MatrixXd::Identity(m_.rows(), m_.cols()));
    post_mean_ = post_cov_ * (a_ / s2_ + m_inv_ * theta0_);
  }

  int dim() const override { return static_cast<int>(a_.size()); }
  double log_likelihood(const Eigen::VectorXd& theta) const override {
    count_solves(1);
    return -0.5 * (theta - a_).squaredNorm() / s2_;
  }
  double log_posterior(const Eigen::VectorXd& theta) const override {
    count_solves(1);
    const Eigen::VectorXd d = theta - theta0_;
    return -0.5 * (theta - a_).squaredNorm() / s2_ - 0.5 * d.dot(m_inv_ * d);
  }
  Eigen::VectorXd grad_log_posterior(const Eigen::VectorXd& theta) const override {
    count_solves(1);
    return -(theta - a_) / s2_ - m_inv_ * (theta - theta0_);
  }
  const Eigen::VectorXd& prior_mean() const override { return theta0_; }
  const Eigen::MatrixXd& prior_cov() const override { return m_; }

  const Eigen::VectorXd& posterior_mean() const { return post_mean_; }
  const Eigen::MatrixXd& posterior_cov() const { return post_cov_; }

 private:
  Eigen::VectorXd a_;
  double s2_;
  Eigen::VectorXd theta0_;
  Eigen::MatrixXd m_, m_inv_, post_cov_;
  Eigen::VectorXd post_mean_;
};

/// Two-layer desk problem in the physical speed-squared range, coarse grid.
inline steinwave::bayes::HighContrastProblem toy_high_contrast_problem() {
  steinwave::bayes::HighContrastProblem p;
  p.lengths = {1.0, 1.0};
  p.nodes = {61, 61};
  p.source = steinwave::wave::SourceSignal::gaussian_pulse(1.0, 0.008, 0.002);
  p.config.dt = 1.5e-4;
  // long enough for the interface reflections to revisit the sensors; they
  // carry most of the speed information
  p.config.t_end = 0.12;
  p.config.courant_limit = 0.5;
  p.obs_nodes = {0.4, 0.8, 1.3, 1.9};
  return p;
}

inline Eigen::VectorXd toy_high_contrast_truth() {
  Eigen::VectorXd theta(2);
  theta << 2000.0, 2600.0;
  return theta;
}

/// Synthetic-data model around the two-layer toy. Noise fraction is relative
/// to the clean record's peak; 0 keeps the data exact.
inline std::unique_ptr<steinwave::bayes::BayesModel> make_toy_high_contrast_model(
    double noise_frac = 0.0025, std::uint64_t data_seed = 42,
    Eigen::VectorXd theta_true = toy_high_contrast_truth()) {
  using namespace steinwave;
  auto problem = toy_high_contrast_problem();
  auto data = wave::solve_high_contrast(problem.medium_for(theta_true), problem.source,
                                        problem.config, problem.obs_nodes);
  const double peak = data.values.cwiseAbs().maxCoeff();
  const double sigma_val = std::max(noise_frac, 1e-4) * peak;
  if (noise_frac > 0.0) {
    std::mt19937_64 rng(data_seed);
    std::normal_distribution<double> noise(0.0, sigma_val);
    for (Eigen::Index i = 0; i < data.values.rows(); ++i)
      for (Eigen::Index j = 0; j < data.values.cols(); ++j) data.values(i, j) += noise(rng);
  }
  const auto n_obs = static_cast<Eigen::Index>(problem.obs_nodes.size());
  bayes::GaussianPrior prior{Eigen::VectorXd::Constant(2, 2250.0),
                             500.0 * 500.0 * Eigen::MatrixXd::Identity(2, 2)};
  return std::make_unique<bayes::BayesModel>(
      problem, std::move(data), Eigen::VectorXd::Constant(n_obs, sigma_val), prior,
      std::vector<std::pair<double, double>>{{1200.0, 3400.0}, {1200.0, 3400.0}});
}

/// Low-contrast desk problem: degree-1 spline with 4 coefficients on a
/// coarse grid.
inline steinwave::bayes::LowContrastProblem toy_low_contrast_problem(int n_coef = 4,
                                                                     int degree = 1) {
  steinwave::bayes::LowContrastProblem p;
  p.grid_nodes = 61;
  p.length = 1.0;
  p.basis = steinwave::bspline::BSplineBasis::clamped_uniform(n_coef, degree, 1.0);
  p.source = steinwave::wave::SourceSignal::gaussian_pulse(1.0, 0.008, 0.002);
  p.config.dt = 1.5e-4;
  p.config.t_end = 0.05;
  p.config.courant_limit = 0.5;
  p.obs_nodes = {0.25, 0.5, 0.75};
  return p;
}

inline std::unique_ptr<steinwave::bayes::BayesModel> make_toy_low_contrast_model(
    double noise_frac = 0.01, std::uint64_t data_seed = 47) {
  using namespace steinwave;
  auto problem = toy_low_contrast_problem();
  Eigen::VectorXd theta_true(4);
  theta_true << 1900.0, 2300.0, 2500.0, 2200.0;

  Eigen::VectorXd grid(static_cast<Eigen::Index>(problem.grid_nodes));
  for (std::size_t i = 0; i < problem.grid_nodes; ++i)
    grid[static_cast<Eigen::Index>(i)] =
        problem.length * static_cast<double>(i) / static_cast<double>(problem.grid_nodes - 1);
  auto data = wave::solve_low_contrast(problem.basis.matrix(grid) * theta_true, problem.length,
                                       problem.source, problem.config, problem.obs_nodes);
  const double peak = data.values.cwiseAbs().maxCoeff();
  const double sigma_val = std::max(noise_frac, 1e-4) * peak;
  if (noise_frac > 0.0) {
    std::mt19937_64 rng(data_seed);
    std::normal_distribution<double> noise(0.0, sigma_val);
    for (Eigen::Index i = 0; i < data.values.rows(); ++i)
      for (Eigen::Index j = 0; j < data.values.cols(); ++j) data.values(i, j) += noise(rng);
  }
  bayes::GaussianPrior prior{Eigen::VectorXd::Constant(4, 2250.0),
                             400.0 * 400.0 * Eigen::MatrixXd::Identity(4, 4)};
  return std::make_unique<bayes::BayesModel>(
      problem, std::move(data), Eigen::VectorXd::Constant(3, sigma_val), prior,
      std::vector<std::pair<double, double>>(4, {1200.0, 3400.0}));
}

}  // namespace testsupport
