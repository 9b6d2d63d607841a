#include "steinwave/vi.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "steinwave/parallel.hpp"

namespace steinwave::vi {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kBandwidthFloorSq = 1e-8;
}  // namespace

double median_bandwidth(const Eigen::MatrixXd& particles) {
  const auto m = particles.rows();
  if (m < 2) throw std::invalid_argument("median_bandwidth needs at least 2 particles");
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j)
      dist.push_back((particles.row(i) - particles.row(j)).norm());
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  double med = dist[mid];
  if (dist.size() % 2 == 0) {
    // lower middle is the max of the first half
    const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + lower);
  }
  const double h2 = std::max(med * med / std::log(static_cast<double>(m)), kBandwidthFloorSq);
  return std::sqrt(h2);
}

Eigen::MatrixXd stein_direction(const Eigen::MatrixXd& particles, const Eigen::MatrixXd& grads,
                                double bandwidth) {
  const auto m = particles.rows();
  const auto d = particles.cols();
  if (grads.rows() != m || grads.cols() != d)
    throw std::invalid_argument("stein_direction: gradient matrix shape mismatch");
  if (!grads.allFinite()) throw std::invalid_argument("stein_direction: non-finite gradients");
  const double h2 = bandwidth * bandwidth;

  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(m, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const Eigen::RowVectorXd diff = particles.row(i) - particles.row(j);
      const double k = std::exp(-diff.squaredNorm() / (2.0 * h2));
      phi.row(i) += k * grads.row(j) + (k / h2) * diff;
    }
    phi.row(i) /= static_cast<double>(m);
  }
  return phi;
}

GaussianKDE::GaussianKDE(const Eigen::MatrixXd& particles) : support_(particles) {
  const auto m = particles.rows();
  const auto d = particles.cols();
  if (m < 1) throw std::invalid_argument("KDE needs at least one particle");
  // Scott's rule per dimension, sample standard deviation
  const double factor = std::pow(static_cast<double>(m), -1.0 / (static_cast<double>(d) + 4.0));
  bandwidth_.resize(d);
  const Eigen::RowVectorXd mu = particles.colwise().mean();
  for (Eigen::Index k = 0; k < d; ++k) {
    double sd = 0.0;
    if (m > 1) {
      const double var =
          (particles.col(k).array() - mu[k]).square().sum() / static_cast<double>(m - 1);
      sd = std::sqrt(var);
    }
    bandwidth_[k] = std::max(factor * sd, std::sqrt(kBandwidthFloorSq));
  }
  finish();
}

GaussianKDE::GaussianKDE(const Eigen::MatrixXd& particles, Eigen::VectorXd bandwidth)
    : support_(particles), bandwidth_(std::move(bandwidth)) {
  if (bandwidth_.size() != particles.cols())
    throw std::invalid_argument("KDE bandwidth dimension mismatch");
  for (Eigen::Index k = 0; k < bandwidth_.size(); ++k)
    bandwidth_[k] = std::max(bandwidth_[k], std::sqrt(kBandwidthFloorSq));
  finish();
}

void GaussianKDE::finish() {
  const auto m = support_.rows();
  mean_ = support_.colwise().mean().transpose();
  // exact mixture covariance: population particle covariance + diag(bw^2)
  const Eigen::MatrixXd centered = support_.rowwise() - mean_.transpose();
  cov_ = centered.transpose() * centered / static_cast<double>(m);
  cov_ += bandwidth_.cwiseProduct(bandwidth_).asDiagonal();
}

double GaussianKDE::density(const Eigen::VectorXd& point) const {
  const auto m = support_.rows();
  const auto d = support_.cols();
  double norm = 1.0;
  for (Eigen::Index k = 0; k < d; ++k) norm *= std::sqrt(2.0 * M_PI) * bandwidth_[k];
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    double e = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double z = (point[k] - support_(i, k)) / bandwidth_[k];
      e += z * z;
    }
    acc += std::exp(-0.5 * e);
  }
  return acc / (static_cast<double>(m) * norm);
}

Eigen::VectorXd GaussianKDE::sample_at(int pick, const Eigen::VectorXd& standard_normals) const {
  return support_.row(pick).transpose() + bandwidth_.cwiseProduct(standard_normals);
}

Eigen::VectorXd GaussianKDE::sample(std::mt19937_64& rng) const {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(support_.rows()) - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(support_.cols());
  for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = normal(rng);
  return sample_at(pick(rng), z);
}

double gaussian_kl(const Eigen::VectorXd& mu_q, const Eigen::MatrixXd& cov_q,
                   const Eigen::VectorXd& mu_p, const Eigen::MatrixXd& cov_p) {
  const auto d = mu_q.size();
  Eigen::LLT<Eigen::MatrixXd> llt_q(cov_q);
  Eigen::LLT<Eigen::MatrixXd> llt_p(cov_p);
  if (llt_q.info() != Eigen::Success || llt_p.info() != Eigen::Success)
    throw std::domain_error("gaussian_kl: covariance not symmetric positive definite");

  auto logdet = [](const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  };
  const double logdet_q = logdet(llt_q);
  const double logdet_p = logdet(llt_p);
  const double trace = llt_p.solve(cov_q).trace();
  const Eigen::VectorXd dm = mu_p - mu_q;
  const double maha = dm.dot(llt_p.solve(dm));
  return 0.5 * (logdet_p - logdet_q - static_cast<double>(d) + trace + maha);
}

ElboVariates ElboVariates::draw(int n_samples, int dim, int support_count, std::mt19937_64& rng) {
  if (n_samples < 1) throw std::invalid_argument("ELBO needs at least one sample");
  ElboVariates v;
  v.picks.resize(static_cast<std::size_t>(n_samples));
  v.normals.resize(n_samples, dim);
  std::uniform_int_distribution<int> pick(0, support_count - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int s = 0; s < n_samples; ++s) {
    v.picks[static_cast<std::size_t>(s)] = pick(rng);
    for (int k = 0; k < dim; ++k) v.normals(s, k) = normal(rng);
  }
  return v;
}

double elbo_estimate(const Target& model, const GaussianKDE& kde, const ElboVariates& variates) {
  const int n = variates.count();
  double acc = 0.0;
  int feasible = 0;
  for (int s = 0; s < n; ++s) {
    const Eigen::VectorXd z =
        kde.sample_at(variates.picks[static_cast<std::size_t>(s)], variates.normals.row(s).transpose());
    const double ll = model.log_likelihood(z);
    if (std::isfinite(ll)) {
      acc += ll;
      ++feasible;
    }
  }
  if (feasible == 0) return kNegInf;
  const double expected_ll = acc / static_cast<double>(feasible);
  const double kl = gaussian_kl(kde.mean(), kde.covariance(), model.prior_mean(), model.prior_cov());
  return expected_ll - kl;
}

double elbo_estimate(const Target& model, const GaussianKDE& kde, int n_samples,
                     std::mt19937_64& rng) {
  const auto v = ElboVariates::draw(n_samples, static_cast<int>(kde.support().cols()),
                                    static_cast<int>(kde.support().rows()), rng);
  return elbo_estimate(model, kde, v);
}

double halton_value(long index, int base) {
  double f = 1.0, r = 0.0;
  long current = index;
  while (current > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(current % base);
    current /= base;
  }
  return r;
}

Eigen::MatrixXd halton_init(int m, int d, const std::vector<std::pair<double, double>>& bounds) {
  static constexpr int primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                   43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
  if (m < 1) throw std::invalid_argument("halton_init: need m >= 1");
  if (d < 1 || d > static_cast<int>(std::size(primes)))
    throw std::invalid_argument("halton_init: dimension out of range");
  if (static_cast<int>(bounds.size()) != d)
    throw std::invalid_argument("halton_init: bounds size mismatch");
  for (const auto& [lo, hi] : bounds)
    if (!(lo < hi)) throw std::invalid_argument("halton_init: empty bound interval");

  Eigen::MatrixXd pts(m, d);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < d; ++k) {
      const double u = halton_value(i + 1, primes[k]);
      pts(i, k) = bounds[static_cast<std::size_t>(k)].first +
                  u * (bounds[static_cast<std::size_t>(k)].second -
                       bounds[static_cast<std::size_t>(k)].first);
    }
  return pts;
}

AdamState AdamState::init(int particles, int dim, double rate) {
  AdamState s;
  s.m1 = Eigen::MatrixXd::Zero(particles, dim);
  s.m2 = Eigen::MatrixXd::Zero(particles, dim);
  s.rate = rate;
  return s;
}

std::pair<Eigen::MatrixXd, AdamState> adam_update(const AdamState& state,
                                                  const Eigen::MatrixXd& grad) {
  if (grad.rows() != state.m1.rows() || grad.cols() != state.m1.cols())
    throw std::invalid_argument("adam_update: shape mismatch");
  AdamState next = state;
  next.step = state.step + 1;
  next.m1 = state.beta1 * state.m1 + (1.0 - state.beta1) * grad;
  next.m2 = state.beta2 * state.m2 + (1.0 - state.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(next.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(next.step));
  const Eigen::MatrixXd mhat = next.m1 / bc1;
  const Eigen::MatrixXd vhat = next.m2 / bc2;
  Eigen::MatrixXd step_mat =
      state.rate * mhat.cwiseQuotient(vhat.cwiseSqrt().array().matrix() +
                                      Eigen::MatrixXd::Constant(grad.rows(), grad.cols(), state.guard));
  return {std::move(step_mat), std::move(next)};
}

Eigen::MatrixXd batch_grad(const Target& model, const Eigen::MatrixXd& particles, int workers) {
  Eigen::MatrixXd grads(particles.rows(), particles.cols());
  parallel_for(static_cast<std::size_t>(particles.rows()), workers, [&](std::size_t i) {
    try {
      grads.row(static_cast<Eigen::Index>(i)) =
          model.grad_log_posterior(particles.row(static_cast<Eigen::Index>(i)).transpose())
              .transpose();
    } catch (const std::exception& e) {
      throw std::runtime_error("gradient failure at particle " + std::to_string(i) + ": " +
                               e.what());
    }
  });
  return grads;
}

}  // namespace steinwave::vi
