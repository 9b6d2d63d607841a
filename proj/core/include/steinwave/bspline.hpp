#pragma once

#include <Eigen/Dense>

#include <vector>

namespace steinwave::bspline {

/// Cox-de Boor evaluation of B_{i,k} on an arbitrary nondecreasing knot
/// vector; 0/0 terms are dropped and x outside the knot span returns 0. The
/// last nonempty span is treated as closed so the curve is defined at the
/// right endpoint.
double basis_value(int i, int k, double x, const std::vector<double>& knots);

/// Clamped basis of `count` functions of degree `degree` on [0, length].
/// Knots are uniform with the end knots repeated degree+1 times.
struct BSplineBasis {
  int degree = 0;
  int count = 1;  // number of basis functions (n)
  std::vector<double> knots;

  static BSplineBasis clamped_uniform(int count, int degree, double length);

  double domain_end() const { return knots.back(); }
  double value(int i, double x) const { return basis_value(i, degree, x, knots); }

  /// All `count` basis values at x.
  Eigen::VectorXd row(double x) const;
  /// Collocation matrix: one row per grid point, one column per basis function.
  Eigen::MatrixXd matrix(const Eigen::VectorXd& grid) const;
};

/// Squared-velocity field c^2(x) = sum_j theta_j B_{j,k}(x).
struct VelocityField {
  BSplineBasis basis;
  Eigen::VectorXd theta;  // [m^2/s^2]

  double operator()(double x) const;
  /// Pointwise samples; throws naming the offending node if any sample <= 0.
  Eigen::VectorXd evaluate(const Eigen::VectorXd& grid) const;
};

}  // namespace steinwave::bspline
