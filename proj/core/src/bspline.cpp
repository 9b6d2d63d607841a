#include "steinwave/bspline.hpp"

#include <stdexcept>
#include <string>

namespace steinwave::bspline {

double basis_value(int i, int k, double x, const std::vector<double>& knots) {
  const int n_knots = static_cast<int>(knots.size());
  if (i < 0 || i + k + 1 >= n_knots) return 0.0;
  if (k == 0) {
    if (knots[i] <= x && x < knots[i + 1]) return 1.0;
    // closed right end: x at the very end of the knot span falls into the
    // last nonempty interval
    if (x == knots.back() && knots[i] < knots[i + 1] && knots[i + 1] == knots.back()) return 1.0;
    return 0.0;
  }
  double acc = 0.0;
  const double dl = knots[i + k] - knots[i];
  if (dl > 0.0) acc += (x - knots[i]) / dl * basis_value(i, k - 1, x, knots);
  const double dr = knots[i + k + 1] - knots[i + 1];
  if (dr > 0.0) acc += (knots[i + k + 1] - x) / dr * basis_value(i + 1, k - 1, x, knots);
  return acc;
}

BSplineBasis BSplineBasis::clamped_uniform(int count, int degree, double length) {
  if (degree < 0) throw std::invalid_argument("spline degree must be nonnegative");
  if (count < degree + 1)
    throw std::invalid_argument("need at least degree+1 coefficients: n=" +
                                std::to_string(count) + ", k=" + std::to_string(degree));
  if (!(length > 0.0)) throw std::invalid_argument("spline domain length must be positive");

  BSplineBasis b;
  b.degree = degree;
  b.count = count;
  b.knots.reserve(static_cast<std::size_t>(count + degree + 1));
  const int spans = count - degree;  // nonempty intervals
  for (int i = 0; i <= degree; ++i) b.knots.push_back(0.0);
  for (int j = 1; j < spans; ++j)
    b.knots.push_back(length * static_cast<double>(j) / static_cast<double>(spans));
  for (int i = 0; i <= degree; ++i) b.knots.push_back(length);
  return b;
}

Eigen::VectorXd BSplineBasis::row(double x) const {
  Eigen::VectorXd r(count);
  for (int j = 0; j < count; ++j) r[j] = value(j, x);
  return r;
}

Eigen::MatrixXd BSplineBasis::matrix(const Eigen::VectorXd& grid) const {
  Eigen::MatrixXd m(grid.size(), count);
  for (Eigen::Index i = 0; i < grid.size(); ++i) m.row(i) = row(grid[i]).transpose();
  return m;
}

double VelocityField::operator()(double x) const { return basis.row(x).dot(theta); }

Eigen::VectorXd VelocityField::evaluate(const Eigen::VectorXd& grid) const {
  if (theta.size() != basis.count)
    throw std::invalid_argument("coefficient count does not match the basis");
  Eigen::VectorXd out(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    out[i] = (*this)(grid[i]);
    if (!(out[i] > 0.0))
      throw std::domain_error("nonpositive velocity: c^2 = " + std::to_string(out[i]) +
                              " at node " + std::to_string(i) + " (x=" + std::to_string(grid[i]) +
                              ")");
  }
  return out;
}

}  // namespace steinwave::bspline
