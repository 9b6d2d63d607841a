#pragma once

#include <Eigen/Dense>

#include <random>
#include <utility>
#include <vector>

#include "steinwave/target.hpp"

namespace steinwave::vi {

/// Particles stored row-wise: m x d.
struct ParticleSet {
  Eigen::MatrixXd particles;
  int iteration = 0;

  int count() const { return static_cast<int>(particles.rows()); }
  int dim() const { return static_cast<int>(particles.cols()); }
};

/// k(x, x') = exp(-||x-x'||^2 / (2 h^2)).
struct RBFKernel {
  double bandwidth = 1.0;

  double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    const double d2 = (x - y).squaredNorm();
    return std::exp(-d2 / (2.0 * bandwidth * bandwidth));
  }
};

/// Median heuristic: h^2 = median(pairwise distance)^2 / log m, floored at
/// 1e-8 so a collapsed particle set keeps a usable kernel.
double median_bandwidth(const Eigen::MatrixXd& particles);

/// Kernelized Stein update direction phi(x_i) =
///   (1/m) sum_j [ k(x_j, x_i) grad_j + (x_i - x_j)/h^2 k(x_j, x_i) ].
Eigen::MatrixXd stein_direction(const Eigen::MatrixXd& particles, const Eigen::MatrixXd& grads,
                                double bandwidth);

/// Gaussian mixture centered at the particles with a diagonal per-dimension
/// bandwidth (Scott's rule by default).
class GaussianKDE {
 public:
  explicit GaussianKDE(const Eigen::MatrixXd& particles);
  GaussianKDE(const Eigen::MatrixXd& particles, Eigen::VectorXd bandwidth);

  double density(const Eigen::VectorXd& point) const;
  /// Exact mixture moments: mean of the particles, particle covariance plus
  /// diag(bandwidth^2).
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Eigen::VectorXd& bandwidth() const { return bandwidth_; }
  const Eigen::MatrixXd& support() const { return support_; }

  Eigen::VectorXd sample(std::mt19937_64& rng) const;
  /// Deterministic draw from frozen raw variates.
  Eigen::VectorXd sample_at(int pick, const Eigen::VectorXd& standard_normals) const;

 private:
  void finish();
  Eigen::MatrixXd support_;
  Eigen::VectorXd bandwidth_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

/// KL(q || p) between Gaussians; throws std::domain_error unless both
/// covariances are symmetric positive definite.
double gaussian_kl(const Eigen::VectorXd& mu_q, const Eigen::MatrixXd& cov_q,
                   const Eigen::VectorXd& mu_p, const Eigen::MatrixXd& cov_p);

/// Raw Monte Carlo randomness for one ELBO estimate, frozen so repeated
/// evaluations against moving particle sets share their noise.
struct ElboVariates {
  std::vector<int> picks;      // mixture component per draw
  Eigen::MatrixXd normals;     // draws x dim

  int count() const { return static_cast<int>(picks.size()); }
  static ElboVariates draw(int n_samples, int dim, int support_count, std::mt19937_64& rng);
};

/// ELBO(q) = mean log-likelihood over KDE draws - KL(q-moments || prior).
/// Infeasible draws (-inf likelihood) are skipped; -inf when every draw is
/// infeasible.
double elbo_estimate(const Target& model, const GaussianKDE& kde, const ElboVariates& variates);
double elbo_estimate(const Target& model, const GaussianKDE& kde, int n_samples,
                     std::mt19937_64& rng);

/// First m points of the Halton sequence (bases: the first d primes), mapped
/// affinely into per-dimension bounds.
Eigen::MatrixXd halton_init(int m, int d,
                            const std::vector<std::pair<double, double>>& bounds);

/// Radical inverse of `index` (1-based) in the given base.
double halton_value(long index, int base);

struct AdamState {
  Eigen::MatrixXd m1, m2;
  double beta1 = 0.9, beta2 = 0.999;
  double rate = 1e-2;
  double guard = 1e-8;
  long step = 0;

  static AdamState init(int particles, int dim, double rate);
};

/// Bias-corrected ADAM step aligned with `grad`; returns the step to add and
/// the advanced state.
std::pair<Eigen::MatrixXd, AdamState> adam_update(const AdamState& state,
                                                  const Eigen::MatrixXd& grad);

/// Per-particle gradient rows evaluated in parallel; rethrows with the
/// particle index on failure.
Eigen::MatrixXd batch_grad(const Target& model, const Eigen::MatrixXd& particles, int workers);

}  // namespace steinwave::vi
