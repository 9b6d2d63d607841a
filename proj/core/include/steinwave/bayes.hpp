#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "steinwave/bspline.hpp"
#include "steinwave/target.hpp"
#include "steinwave/wave.hpp"

namespace steinwave::bayes {

enum class GradientMethod { Adjoint, FiniteDifference };

struct GaussianPrior {
  Eigen::VectorXd mean;  // theta_0
  Eigen::MatrixXd cov;   // M, symmetric positive definite
};

/// High-contrast geometry with the squared layer speeds left as parameters.
struct HighContrastProblem {
  std::vector<double> lengths;
  std::vector<std::size_t> nodes;
  wave::SourceSignal source;
  wave::SimulationConfig config;
  std::vector<double> obs_nodes;

  wave::LayeredMedium medium_for(const Eigen::VectorXd& theta) const;
};

/// Low-contrast grid with c^2(x) parameterized by B-spline coefficients.
struct LowContrastProblem {
  std::size_t grid_nodes = 0;
  double length = 1.0;
  bspline::BSplineBasis basis;
  wave::SourceSignal source;
  wave::SimulationConfig config;
  std::vector<double> obs_nodes;
};

/// Gaussian additive-noise posterior over velocity parameters. The forward
/// map is one of the two wave models; the likelihood integrates the residual
/// in time with trapezoidal weights; the prior is Gaussian.
class BayesModel : public vi::Target {
 public:
  BayesModel(HighContrastProblem problem, wave::ObservationRecord data,
             Eigen::VectorXd sigma_per_obs, GaussianPrior prior,
             std::vector<std::pair<double, double>> bounds = {});
  BayesModel(LowContrastProblem problem, wave::ObservationRecord data,
             Eigen::VectorXd sigma_per_obs, GaussianPrior prior,
             std::vector<std::pair<double, double>> bounds = {});

  int dim() const override;
  double log_likelihood(const Eigen::VectorXd& theta) const override;
  double log_posterior(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd grad_log_posterior(const Eigen::VectorXd& theta) const override;
  const Eigen::VectorXd& prior_mean() const override { return prior_.mean; }
  const Eigen::MatrixXd& prior_cov() const override { return prior_.cov; }
  std::vector<std::pair<double, double>> bounds() const override { return bounds_; }

  void set_gradient_method(GradientMethod m) { method_ = m; }
  GradientMethod gradient_method() const { return method_; }

  /// Central finite-difference reference gradient, step 1e-4*(1+|theta_i|);
  /// falls back to a one-sided difference when the step would leave bounds.
  Eigen::VectorXd grad_finite_difference(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd grad_adjoint(const Eigen::VectorXd& theta) const;

  /// Noise-free forward solve at theta (counts one forward solve).
  wave::ObservationRecord forward(const Eigen::VectorXd& theta) const;

  const wave::ObservationRecord& data() const { return data_; }
  const Eigen::VectorXd& sigma() const { return sigma_; }
  const wave::SimulationConfig& sim_config() const;

  /// Diagnostic for the last -inf returned by log_likelihood on this thread.
  static const std::string& last_failure();

 private:
  std::unique_ptr<wave::WaveSystem> make_system(const Eigen::VectorXd& theta) const;
  bool in_bounds(const Eigen::VectorXd& theta) const;
  double misfit(const wave::ObservationRecord& rec) const;
  double prior_logdensity(const Eigen::VectorXd& theta) const;

  std::variant<HighContrastProblem, LowContrastProblem> problem_;
  wave::ObservationRecord data_;
  Eigen::VectorXd sigma_;        // per observation node
  Eigen::VectorXd quad_weights_; // trapezoid weights over the record grid
  GaussianPrior prior_;
  Eigen::MatrixXd prior_precision_;
  std::vector<std::pair<double, double>> bounds_;
  GradientMethod method_ = GradientMethod::Adjoint;
};

}  // namespace steinwave::bayes
