#include "steinwave/bayes.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace steinwave::bayes {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
thread_local std::string g_last_failure;
}  // namespace

const std::string& BayesModel::last_failure() { return g_last_failure; }

wave::LayeredMedium HighContrastProblem::medium_for(const Eigen::VectorXd& theta) const {
  if (static_cast<std::size_t>(theta.size()) != lengths.size())
    throw std::invalid_argument("theta size does not match the layer count");
  wave::LayeredMedium medium;
  for (std::size_t i = 0; i < lengths.size(); ++i)
    medium.layers.push_back({lengths[i], theta[static_cast<Eigen::Index>(i)], nodes[i]});
  return medium;
}

namespace {

Eigen::VectorXd trapezoid_weights(const std::vector<double>& times) {
  const auto n = static_cast<Eigen::Index>(times.size());
  if (n < 2) throw std::invalid_argument("record needs at least two time samples");
  const double dt = times[1] - times[0];
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, dt);
  w[0] = 0.5 * dt;
  w[n - 1] = 0.5 * dt;
  return w;
}

Eigen::MatrixXd precision_of(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("prior covariance is not symmetric positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
}

}  // namespace

BayesModel::BayesModel(HighContrastProblem problem, wave::ObservationRecord data,
                       Eigen::VectorXd sigma_per_obs, GaussianPrior prior,
                       std::vector<std::pair<double, double>> bounds)
    : problem_(std::move(problem)),
      data_(std::move(data)),
      sigma_(std::move(sigma_per_obs)),
      prior_(std::move(prior)),
      bounds_(std::move(bounds)) {
  quad_weights_ = trapezoid_weights(data_.times);
  prior_precision_ = precision_of(prior_.cov);
  const auto& p = std::get<HighContrastProblem>(problem_);
  if (data_.values.rows() != static_cast<Eigen::Index>(p.obs_nodes.size()) ||
      sigma_.size() != data_.values.rows())
    throw std::invalid_argument("data/sigma node count does not match obs_nodes");
  if (data_.times.size() != p.config.step_count() + 1)
    throw std::invalid_argument("data time grid does not match the simulation config");
}

BayesModel::BayesModel(LowContrastProblem problem, wave::ObservationRecord data,
                       Eigen::VectorXd sigma_per_obs, GaussianPrior prior,
                       std::vector<std::pair<double, double>> bounds)
    : problem_(std::move(problem)),
      data_(std::move(data)),
      sigma_(std::move(sigma_per_obs)),
      prior_(std::move(prior)),
      bounds_(std::move(bounds)) {
  quad_weights_ = trapezoid_weights(data_.times);
  prior_precision_ = precision_of(prior_.cov);
  const auto& p = std::get<LowContrastProblem>(problem_);
  if (data_.values.rows() != static_cast<Eigen::Index>(p.obs_nodes.size()) ||
      sigma_.size() != data_.values.rows())
    throw std::invalid_argument("data/sigma node count does not match obs_nodes");
  if (data_.times.size() != p.config.step_count() + 1)
    throw std::invalid_argument("data time grid does not match the simulation config");
}

int BayesModel::dim() const {
  if (const auto* hc = std::get_if<HighContrastProblem>(&problem_))
    return static_cast<int>(hc->lengths.size());
  return std::get<LowContrastProblem>(problem_).basis.count;
}

const wave::SimulationConfig& BayesModel::sim_config() const {
  if (const auto* hc = std::get_if<HighContrastProblem>(&problem_)) return hc->config;
  return std::get<LowContrastProblem>(problem_).config;
}

bool BayesModel::in_bounds(const Eigen::VectorXd& theta) const {
  if (bounds_.empty()) return true;
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (theta[i] < bounds_[static_cast<std::size_t>(i)].first ||
        theta[i] > bounds_[static_cast<std::size_t>(i)].second)
      return false;
  return true;
}

std::unique_ptr<wave::WaveSystem> BayesModel::make_system(const Eigen::VectorXd& theta) const {
  if (const auto* hc = std::get_if<HighContrastProblem>(&problem_)) {
    const auto medium = hc->medium_for(theta);
    medium.validate();
    wave::check_cfl(medium, hc->config);
    return std::make_unique<wave::HighContrastSystem>(medium, hc->source, hc->obs_nodes);
  }
  const auto& lc = std::get<LowContrastProblem>(problem_);
  Eigen::VectorXd grid(static_cast<Eigen::Index>(lc.grid_nodes));
  const double dx = lc.length / static_cast<double>(lc.grid_nodes - 1);
  for (std::size_t i = 0; i < lc.grid_nodes; ++i)
    grid[static_cast<Eigen::Index>(i)] = static_cast<double>(i) * dx;
  auto system = std::make_unique<wave::LowContrastSystem>(lc.basis.matrix(grid), theta, lc.length,
                                                          lc.source, lc.obs_nodes);
  wave::check_cfl(system->max_speed(), system->dx(), lc.config);
  return system;
}

wave::ObservationRecord BayesModel::forward(const Eigen::VectorXd& theta) const {
  auto system = make_system(theta);
  count_solves(1);
  if (const auto* hc = std::get_if<HighContrastProblem>(&problem_))
    return wave::integrate(*system, hc->config, hc->obs_nodes);
  const auto& lc = std::get<LowContrastProblem>(problem_);
  return wave::integrate(*system, lc.config, lc.obs_nodes);
}

double BayesModel::misfit(const wave::ObservationRecord& rec) const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < data_.values.rows(); ++i) {
    const double s2 = sigma_[i] * sigma_[i];
    const Eigen::VectorXd r = (data_.values.row(i) - rec.values.row(i)).transpose();
    acc += r.cwiseProduct(r).dot(quad_weights_) / (2.0 * s2);
  }
  return acc;
}

double BayesModel::prior_logdensity(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd d = theta - prior_.mean;
  return -0.5 * d.dot(prior_precision_ * d);
}

double BayesModel::log_likelihood(const Eigen::VectorXd& theta) const {
  if (!in_bounds(theta)) {
    g_last_failure = "theta outside bounds";
    return kNegInf;
  }
  try {
    return -misfit(forward(theta));
  } catch (const std::exception& e) {
    g_last_failure = e.what();
    return kNegInf;
  }
}

double BayesModel::log_posterior(const Eigen::VectorXd& theta) const {
  const double ll = log_likelihood(theta);
  if (!std::isfinite(ll)) return kNegInf;
  return ll + prior_logdensity(theta);
}

Eigen::VectorXd BayesModel::grad_log_posterior(const Eigen::VectorXd& theta) const {
  return method_ == GradientMethod::Adjoint ? grad_adjoint(theta)
                                            : grad_finite_difference(theta);
}

Eigen::VectorXd BayesModel::grad_finite_difference(const Eigen::VectorXd& theta) const {
  const auto d = theta.size();
  Eigen::VectorXd grad(d);
  Eigen::VectorXd probe = theta;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double h = 1e-4 * (1.0 + std::abs(theta[i]));
    double lo = theta[i] - h, hi = theta[i] + h;
    if (!bounds_.empty()) {
      const auto& [bl, bh] = bounds_[static_cast<std::size_t>(i)];
      if (lo < bl) lo = theta[i];  // one-sided near the boundary
      if (hi > bh) hi = theta[i];
    }
    if (lo == hi) throw std::runtime_error("finite-difference step collapsed at component " +
                                           std::to_string(i));
    probe[i] = hi;
    const double fp = log_posterior(probe);
    probe[i] = lo;
    const double fm = log_posterior(probe);
    probe[i] = theta[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::runtime_error("infeasible finite-difference probe at component " +
                               std::to_string(i) + ": " + last_failure());
    grad[i] = (fp - fm) / (hi - lo);
  }
  return grad;
}

Eigen::VectorXd BayesModel::grad_adjoint(const Eigen::VectorXd& theta) const {
  if (!in_bounds(theta)) throw std::runtime_error("grad_log_posterior: theta outside bounds");
  std::unique_ptr<wave::WaveSystem> system;
  try {
    system = make_system(theta);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("grad_log_posterior: forward failure: ") + e.what());
  }

  const auto& config = sim_config();
  Eigen::MatrixXd traj;
  const std::vector<double>& obs =
      std::holds_alternative<HighContrastProblem>(problem_)
          ? std::get<HighContrastProblem>(problem_).obs_nodes
          : std::get<LowContrastProblem>(problem_).obs_nodes;
  const auto rec = wave::integrate(*system, config, obs, &traj);
  // forward storage pass + reverse sweep of comparable cost
  count_solves(3);

  const double h = config.dt;
  const std::size_t steps = config.step_count();
  const Eigen::VectorXd inv_s2 = sigma_.cwiseProduct(sigma_).cwiseInverse();

  // d(logL)/d(u_obs at step s) scattered back into state space
  auto misfit_grad = [&](std::size_t s) -> Eigen::VectorXd {
    const auto col = static_cast<Eigen::Index>(s);
    const Eigen::VectorXd r = (data_.values.col(col) - rec.values.col(col))
                                  .cwiseProduct(inv_s2) * quad_weights_[col];
    return system->observer().transpose() * r;
  };

  const auto& AT = system->A_transpose();

  // Reverse-mode differentiation through the RK4 stages. The stage inputs
  // Y_i are recomputed from the stored state (they carry the source terms,
  // which A multiplies inside the step, so d(step)/dtheta sees them too);
  // the v-chain both weights the dA bilinears and, because every term is a
  // polynomial in the one matrix A, yields the transposed propagator as
  // Phi(h A^T) lam = lam + A^T (v1+v2+v3+v4).
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(system->parameter_count());
  Eigen::VectorXd mu = misfit_grad(steps);
  Eigen::VectorXd lt, k1(traj.rows()), k2(traj.rows()), k3(traj.rows());
  Eigen::VectorXd y2, y3, y4, v1, v2, v3, v4;

  for (std::size_t s = steps; s >= 1; --s) {
    system->accumulate_dprojection(mu, traj.col(static_cast<Eigen::Index>(s)), grad);
    lt = mu;
    system->project_transpose(lt);

    const double t0 = static_cast<double>(s - 1) * h;
    const Eigen::VectorXd w = traj.col(static_cast<Eigen::Index>(s - 1));
    system->rhs(t0, w, k1);
    y2 = w + (0.5 * h) * k1;
    system->rhs(t0 + 0.5 * h, y2, k2);
    y3 = w + (0.5 * h) * k2;
    system->rhs(t0 + 0.5 * h, y3, k3);
    y4 = w + h * k3;

    v4 = (h / 6.0) * lt;
    v3 = (h / 3.0) * lt + h * (AT * v4);
    v2 = (h / 3.0) * lt + (0.5 * h) * (AT * v3);
    v1 = (h / 6.0) * lt + (0.5 * h) * (AT * v2);

    system->accumulate_dA(v1, w, grad);
    system->accumulate_dA(v2, y2, grad);
    system->accumulate_dA(v3, y3, grad);
    system->accumulate_dA(v4, y4, grad);

    mu = lt;
    mu.noalias() += AT * (v1 + v2 + v3 + v4);
    if (s >= 2) mu += misfit_grad(s - 1);
  }

  grad.noalias() -= prior_precision_ * (theta - prior_.mean);
  return grad;
}

}  // namespace steinwave::bayes
