#include <doctest.h>

#include <cmath>
#include <random>

#include "steinwave/bayes.hpp"
#include "support.hpp"

using namespace steinwave;

namespace {

// componentwise relative gap with an absolute floor for near-zero entries
double max_rel_gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double floor_abs = 1e-10 * std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor_abs});
    if (denom > 0.0) worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace

TEST_SUITE_BEGIN("posterior");

TEST_CASE("zero-noise data evaluated at the generating theta has zero misfit") {
  auto model = testsupport::make_toy_high_contrast_model(0.0);
  const auto theta = testsupport::toy_high_contrast_truth();
  CHECK(std::abs(model->log_likelihood(theta)) <= 1e-18);
  // and beats a 10% perturbation in either coordinate
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd off = theta;
    off[k] *= 1.1;
    CHECK(model->log_likelihood(theta) > model->log_likelihood(off));
  }
}

TEST_CASE("misfit scales as 1/sigma^2 and is monotone in sigma") {
  auto problem = testsupport::toy_high_contrast_problem();
  const auto theta_true = testsupport::toy_high_contrast_truth();
  auto data = wave::solve_high_contrast(problem.medium_for(theta_true), problem.source,
                                        problem.config, problem.obs_nodes);
  bayes::GaussianPrior prior{Eigen::VectorXd::Constant(2, 2250.0),
                             500.0 * 500.0 * Eigen::MatrixXd::Identity(2, 2)};
  bayes::BayesModel m1(problem, data, Eigen::VectorXd::Constant(4, 0.01), prior);
  bayes::BayesModel m2(problem, data, Eigen::VectorXd::Constant(4, 0.02), prior);

  Eigen::VectorXd theta(2);
  theta << 2100.0, 2500.0;
  const double l1 = m1.log_likelihood(theta);
  const double l2 = m2.log_likelihood(theta);
  CHECK(l1 < 0.0);
  CHECK(l2 == doctest::Approx(l1 / 4.0).epsilon(1e-12));  // sigma x2 -> misfit /4
  CHECK(l2 > l1);                                         // less negative
}

TEST_CASE("likelihood depends on the data only through the weighted residual") {
  auto problem = testsupport::toy_high_contrast_problem();
  const auto theta_true = testsupport::toy_high_contrast_truth();
  auto data = wave::solve_high_contrast(problem.medium_for(theta_true), problem.source,
                                        problem.config, problem.obs_nodes);
  bayes::GaussianPrior prior{Eigen::VectorXd::Constant(2, 2250.0),
                             500.0 * 500.0 * Eigen::MatrixXd::Identity(2, 2)};
  const double sigma = 0.01;

  Eigen::VectorXd theta(2);
  theta << 2200.0, 2400.0;
  bayes::BayesModel base(problem, data, Eigen::VectorXd::Constant(4, sigma), prior);
  const auto rec = base.forward(theta);

  const double c = 0.37;
  auto shifted = data;
  shifted.values.array() += c;
  bayes::BayesModel moved(problem, shifted, Eigen::VectorXd::Constant(4, sigma), prior);

  // predicted change of the quadratic misfit under a uniform data shift
  const double dt = data.times[1] - data.times[0];
  Eigen::VectorXd w = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(data.times.size()), dt);
  w[0] = 0.5 * dt;
  w[w.size() - 1] = 0.5 * dt;
  double delta = 0.0;
  for (Eigen::Index i = 0; i < data.values.rows(); ++i) {
    const Eigen::VectorXd r = (data.values.row(i) - rec.values.row(i)).transpose();
    delta += (2.0 * c * r.dot(w) + c * c * w.sum()) / (2.0 * sigma * sigma);
  }
  CHECK(moved.log_likelihood(theta) ==
        doctest::Approx(base.log_likelihood(theta) - delta).epsilon(1e-9));
}

TEST_CASE("prior term behaves like the Gaussian quadratic") {
  auto problem = testsupport::toy_high_contrast_problem();
  const auto theta_true = testsupport::toy_high_contrast_truth();
  auto data = wave::solve_high_contrast(problem.medium_for(theta_true), problem.source,
                                        problem.config, problem.obs_nodes);

  SUBCASE("theta at the prior mean contributes nothing") {
    bayes::GaussianPrior prior{theta_true, 300.0 * 300.0 * Eigen::MatrixXd::Identity(2, 2)};
    bayes::BayesModel m(problem, data, Eigen::VectorXd::Constant(4, 0.01), prior);
    CHECK(m.log_posterior(theta_true) ==
          doctest::Approx(m.log_likelihood(theta_true)).epsilon(1e-14));
  }
  SUBCASE("unit covariance: one step along e1 costs exactly 1/2") {
    bayes::GaussianPrior prior{theta_true, Eigen::MatrixXd::Identity(2, 2)};
    bayes::BayesModel m(problem, data, Eigen::VectorXd::Constant(4, 0.01), prior);
    Eigen::VectorXd theta = theta_true;
    theta[0] += 1.0;
    const double prior_term = m.log_posterior(theta) - m.log_likelihood(theta);
    CHECK(prior_term == doctest::Approx(-0.5).epsilon(1e-9));
  }
  SUBCASE("wide prior: posterior minus likelihood is constant in theta") {
    bayes::GaussianPrior prior{theta_true, 1e12 * Eigen::MatrixXd::Identity(2, 2)};
    bayes::BayesModel m(problem, data, Eigen::VectorXd::Constant(4, 0.01), prior);
    Eigen::VectorXd t1(2), t2(2);
    t1 << 2000.0, 2600.0;
    t2 << 2300.0, 2100.0;
    const double d1 = m.log_posterior(t1) - m.log_likelihood(t1);
    const double d2 = m.log_posterior(t2) - m.log_likelihood(t2);
    CHECK(std::abs(d1 - d2) <= 1e-6);
  }
}

TEST_CASE("posterior concentrates as 1/sigma^2 on zero-noise data") {
  auto problem = testsupport::toy_high_contrast_problem();
  const auto theta_true = testsupport::toy_high_contrast_truth();
  auto data = wave::solve_high_contrast(problem.medium_for(theta_true), problem.source,
                                        problem.config, problem.obs_nodes);
  bayes::GaussianPrior prior{Eigen::VectorXd::Constant(2, 2250.0),
                             500.0 * 500.0 * Eigen::MatrixXd::Identity(2, 2)};
  Eigen::VectorXd wrong(2);
  wrong << 2150.0, 2450.0;

  bayes::BayesModel tight(problem, data, Eigen::VectorXd::Constant(4, 0.0025), prior);
  bayes::BayesModel loose(problem, data, Eigen::VectorXd::Constant(4, 0.01), prior);
  const double gap_tight = tight.log_likelihood(theta_true) - tight.log_likelihood(wrong);
  const double gap_loose = loose.log_likelihood(theta_true) - loose.log_likelihood(wrong);
  CHECK(gap_tight == doctest::Approx(16.0 * gap_loose).epsilon(1e-10));
}

TEST_CASE("adjoint gradient matches the central-FD oracle on the 2-layer toy") {
  auto model = testsupport::make_toy_high_contrast_model(0.01);
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> draw(1600.0, 3000.0);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd theta(2);
    theta << draw(rng), draw(rng);
    const auto adj = model->grad_adjoint(theta);
    const auto fd = model->grad_finite_difference(theta);
    CHECK(max_rel_gap(adj, fd) <= 1e-4);
  }
}

TEST_CASE("adjoint gradient matches the central-FD oracle on the spline model") {
  auto model = testsupport::make_toy_low_contrast_model(0.01);
  std::mt19937_64 rng(321);
  std::uniform_real_distribution<double> draw(1700.0, 2900.0);
  for (int rep = 0; rep < 8; ++rep) {
    Eigen::VectorXd theta(4);
    for (int k = 0; k < 4; ++k) theta[k] = draw(rng);
    const auto adj = model->grad_adjoint(theta);
    const auto fd = model->grad_finite_difference(theta);
    CHECK(max_rel_gap(adj, fd) <= 1e-4);
  }
}

TEST_CASE("prior-only gradient is the exact Gaussian score") {
  // a likelihood drowned by huge noise leaves only the prior term
  auto problem = testsupport::toy_high_contrast_problem();
  const auto theta_true = testsupport::toy_high_contrast_truth();
  auto data = wave::solve_high_contrast(problem.medium_for(theta_true), problem.source,
                                        problem.config, problem.obs_nodes);
  bayes::GaussianPrior prior{Eigen::VectorXd::Constant(2, 2250.0),
                             500.0 * 500.0 * Eigen::MatrixXd::Identity(2, 2)};
  bayes::BayesModel m(problem, data, Eigen::VectorXd::Constant(4, 1e9), prior);

  Eigen::VectorXd theta(2);
  theta << 2000.0, 2700.0;
  const Eigen::VectorXd expect = -(theta - prior.mean) / (500.0 * 500.0);
  const auto grad = m.grad_adjoint(theta);
  CHECK((grad - expect).cwiseAbs().maxCoeff() <= 1e-10 * expect.cwiseAbs().maxCoeff());
}

TEST_CASE("gradient vanishes at the posterior mode") {
  // zero-noise data + prior centered at the truth puts the mode at the truth
  auto problem = testsupport::toy_high_contrast_problem();
  const auto theta_true = testsupport::toy_high_contrast_truth();
  auto data = wave::solve_high_contrast(problem.medium_for(theta_true), problem.source,
                                        problem.config, problem.obs_nodes);
  const double peak = data.values.cwiseAbs().maxCoeff();
  bayes::GaussianPrior prior{theta_true, 500.0 * 500.0 * Eigen::MatrixXd::Identity(2, 2)};
  bayes::BayesModel m(problem, data, Eigen::VectorXd::Constant(4, 0.01 * peak), prior);

  const auto grad = m.grad_adjoint(theta_true);
  // scale: gradient one percent away from the mode
  Eigen::VectorXd nearby = theta_true;
  nearby[0] *= 1.01;
  const double scale = m.grad_adjoint(nearby).cwiseAbs().maxCoeff();
  CHECK(grad.cwiseAbs().maxCoeff() <= 1e-4 * scale);
}

TEST_CASE("infeasible evaluations fail loudly") {
  auto model = testsupport::make_toy_high_contrast_model(0.01);
  Eigen::VectorXd outside(2);
  outside << 100.0, 2000.0;  // below the feasibility box
  CHECK(model->log_likelihood(outside) == -std::numeric_limits<double>::infinity());
  CHECK(!bayes::BayesModel::last_failure().empty());
  CHECK(std::isinf(model->log_posterior(outside)));
  CHECK_THROWS_AS(model->grad_log_posterior(outside), std::runtime_error);
}

TEST_CASE("theta-derivative hooks match matrix finite differences") {
  // three layers exercise the interface rows from both sides
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal(0.0, 1.0);

  SUBCASE("high contrast") {
    auto sys_at = [](const Eigen::VectorXd& theta) {
      wave::LayeredMedium medium{{{1.0, theta[0], 31}, {0.8, theta[1], 25}, {1.2, theta[2], 37}}};
      return wave::HighContrastSystem(medium, wave::SourceSignal::gaussian_pulse(1.0, 0.01, 0.003),
                                      std::vector<double>{0.5});
    };
    Eigen::VectorXd theta(3);
    theta << 2000.0, 2600.0, 1800.0;
    const auto sys = sys_at(theta);
    Eigen::VectorXd lam(sys.state_size()), x(sys.state_size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      lam[i] = normal(rng);
      x[i] = normal(rng);
    }
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(3);
    sys.accumulate_dA(lam, x, grad);
    Eigen::VectorXd grad_proj = Eigen::VectorXd::Zero(3);
    sys.accumulate_dprojection(lam, x, grad_proj);

    for (int p = 0; p < 3; ++p) {
      const double h = 1e-5 * theta[p];
      Eigen::VectorXd tp = theta, tm = theta;
      tp[p] += h;
      tm[p] -= h;
      const auto sp = sys_at(tp);
      const auto sm = sys_at(tm);
      const Eigen::VectorXd dax = (sp.A() * x - sm.A() * x) / (2.0 * h);
      CHECK(grad[p] == doctest::Approx(lam.dot(dax)).epsilon(1e-5));

      Eigen::VectorXd wp = x, wm = x;
      sp.project(0.0123, wp);
      sm.project(0.0123, wm);
      const Eigen::VectorXd dproj = (wp - wm) / (2.0 * h);
      CHECK(grad_proj[p] == doctest::Approx(lam.dot(dproj)).epsilon(1e-5));
    }
  }

  SUBCASE("low contrast spline") {
    const auto basis = bspline::BSplineBasis::clamped_uniform(4, 1, 1.0);
    Eigen::VectorXd grid(41);
    for (int i = 0; i < 41; ++i) grid[i] = i / 40.0;
    const Eigen::MatrixXd B = basis.matrix(grid);
    auto sys_at = [&](const Eigen::VectorXd& theta) {
      return wave::LowContrastSystem(B, theta, 1.0,
                                     wave::SourceSignal::gaussian_pulse(1.0, 0.01, 0.003),
                                     std::vector<double>{0.5});
    };
    Eigen::VectorXd theta(4);
    theta << 1900.0, 2300.0, 2500.0, 2200.0;
    const auto sys = sys_at(theta);
    Eigen::VectorXd lam(sys.state_size()), x(sys.state_size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      lam[i] = normal(rng);
      x[i] = normal(rng);
    }
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(4);
    sys.accumulate_dA(lam, x, grad);
    for (int p = 0; p < 4; ++p) {
      const double h = 1e-5 * theta[p];
      Eigen::VectorXd tp = theta, tm = theta;
      tp[p] += h;
      tm[p] -= h;
      const Eigen::VectorXd dax = (sys_at(tp).A() * x - sys_at(tm).A() * x) / (2.0 * h);
      CHECK(grad[p] == doctest::Approx(lam.dot(dax)).epsilon(1e-5));
    }
  }
}

TEST_SUITE_END();
