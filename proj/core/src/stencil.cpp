#include "steinwave/stencil.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace steinwave::fd {

const char* to_string(StencilPosition pos) {
  switch (pos) {
    case StencilPosition::LeftEdge:   return "LeftEdge";
    case StencilPosition::LeftInner:  return "LeftInner";
    case StencilPosition::Interior:   return "Interior";
    case StencilPosition::RightInner: return "RightInner";
    case StencilPosition::RightEdge:  return "RightEdge";
  }
  return "?";
}

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Spread factor s in the (s*dx)^5 remainder term.
double spread(StencilPosition pos) {
  switch (pos) {
    case StencilPosition::Interior: return 2.0;
    case StencilPosition::LeftInner:
    case StencilPosition::RightInner: return 3.0;
    default: return 4.0;
  }
}

double noncenter_alpha_sum(const FivePointCoefficients& c) {
  const int ctr = center_index(c.position);
  double s = 0.0;
  for (int j = 0; j < 5; ++j)
    if (j != ctr) s += std::abs(c.alpha[j]);
  return s;
}

}  // namespace

FivePointCoefficients solve_stencil_system(StencilPosition position, double dx, int order) {
  if (order < 1 || order > 4)
    throw std::invalid_argument("solve_stencil_system: order must be in [1,4], got " +
                                std::to_string(order));
  if (!(dx > 0.0))
    throw std::invalid_argument("solve_stencil_system: dx must be positive");

  const auto off = offsets(position);
  Eigen::Matrix<double, 5, 5> A;
  for (int r = 0; r < 5; ++r)
    for (int j = 0; j < 5; ++j)
      A(r, j) = std::pow(static_cast<double>(off[j]), r);  // 0^0 == 1

  Eigen::Matrix<double, 5, 1> rhs = Eigen::Matrix<double, 5, 1>::Zero();
  rhs(order) = factorial(order) / std::pow(dx, order);

  Eigen::Matrix<double, 5, 1> alpha = A.fullPivLu().solve(rhs);

  const double residual = (A * alpha - rhs).cwiseAbs().maxCoeff();
  const double scale = rhs.cwiseAbs().maxCoeff();
  if (residual > 1e-12 * scale)
    throw std::runtime_error("solve_stencil_system: singular or ill-conditioned system");

  FivePointCoefficients out;
  out.position = position;
  out.order = order;
  out.dx = dx;
  for (int j = 0; j < 5; ++j) out.alpha[j] = alpha(j);
  return out;
}

std::array<FivePointCoefficients, 4> solve_all_orders(StencilPosition position, double dx) {
  return {solve_stencil_system(position, dx, 1), solve_stencil_system(position, dx, 2),
          solve_stencil_system(position, dx, 3), solve_stencil_system(position, dx, 4)};
}

DerivativeMatrix::DerivativeMatrix(std::size_t nodes, double dx, int order)
    : nodes_(nodes), dx_(dx), order_(order) {
  if (nodes < 5)
    throw std::invalid_argument("DerivativeMatrix: need at least 5 nodes, got " +
                                std::to_string(nodes));
  const StencilPosition all[5] = {StencilPosition::LeftEdge, StencilPosition::LeftInner,
                                  StencilPosition::Interior, StencilPosition::RightInner,
                                  StencilPosition::RightEdge};
  for (int p = 0; p < 5; ++p) coeff_[p] = solve_stencil_system(all[p], dx, order).alpha;
}

StencilPosition DerivativeMatrix::row_position(std::size_t i) const {
  if (i == 0) return StencilPosition::LeftEdge;
  if (i == 1) return StencilPosition::LeftInner;
  if (i == nodes_ - 2) return StencilPosition::RightInner;
  if (i == nodes_ - 1) return StencilPosition::RightEdge;
  return StencilPosition::Interior;
}

std::size_t DerivativeMatrix::first_col(std::size_t i) const {
  if (i < 2) return 0;
  if (i >= nodes_ - 2) return nodes_ - 5;
  return i - 2;
}

const std::array<double, 5>& DerivativeMatrix::row(std::size_t i) const {
  return coeff_[static_cast<int>(row_position(i))];
}

double DerivativeMatrix::apply_row(std::size_t i, Eigen::Ref<const Eigen::VectorXd> values) const {
  const auto& a = row(i);
  const std::size_t c0 = first_col(i);
  double acc = 0.0;
  for (int j = 0; j < 5; ++j) acc += a[j] * values[static_cast<Eigen::Index>(c0 + j)];
  return acc;
}

void DerivativeMatrix::apply_into(Eigen::Ref<const Eigen::VectorXd> values,
                                  Eigen::VectorXd& out) const {
  out.resize(static_cast<Eigen::Index>(nodes_));
  for (std::size_t i = 0; i < nodes_; ++i) out[static_cast<Eigen::Index>(i)] = apply_row(i, values);
}

Eigen::VectorXd DerivativeMatrix::apply(Eigen::Ref<const Eigen::VectorXd> values) const {
  Eigen::VectorXd out;
  apply_into(values, out);
  return out;
}

DerivativeMatrix build_derivative_matrix(std::size_t nodes, double dx, int order) {
  return DerivativeMatrix(nodes, dx, order);
}

double remainder_bound(const FivePointCoefficients& coeffs, double dx, double f5_bound) {
  const double s = spread(coeffs.position);
  return f5_bound * std::pow(s * dx, 5) / 120.0 * noncenter_alpha_sum(coeffs);
}

double min_resolution(double epsilon, double f5_bound, const FivePointCoefficients& coeffs) {
  const double s = spread(coeffs.position);
  return (1.0 / s) * std::pow(120.0 * epsilon / (f5_bound * noncenter_alpha_sum(coeffs)), 0.2);
}

}  // namespace steinwave::fd
