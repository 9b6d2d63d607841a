#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>

namespace steinwave::fd {

/// Node position of a five-point stencil inside a bounded 1D grid.
/// The two rows next to each boundary need one-sided or lopsided stencils;
/// everything else uses the centered one.
enum class StencilPosition { LeftEdge, LeftInner, Interior, RightInner, RightEdge };

/// Offsets of the five sample nodes relative to the evaluation node.
constexpr std::array<int, 5> offsets(StencilPosition pos) {
  switch (pos) {
    case StencilPosition::LeftEdge:   return {0, 1, 2, 3, 4};
    case StencilPosition::LeftInner:  return {-1, 0, 1, 2, 3};
    case StencilPosition::Interior:   return {-2, -1, 0, 1, 2};
    case StencilPosition::RightInner: return {-3, -2, -1, 0, 1};
    case StencilPosition::RightEdge:  return {-4, -3, -2, -1, 0};
  }
  return {};
}

/// Index of the evaluation node (offset 0) within the stencil.
constexpr int center_index(StencilPosition pos) {
  switch (pos) {
    case StencilPosition::LeftEdge:   return 0;
    case StencilPosition::LeftInner:  return 1;
    case StencilPosition::Interior:   return 2;
    case StencilPosition::RightInner: return 3;
    case StencilPosition::RightEdge:  return 4;
  }
  return 0;
}

const char* to_string(StencilPosition pos);

/// Coefficients alpha such that sum_j alpha[j] * f(x + offset_j * dx)
/// approximates d^order f / dx^order at x, exact for polynomials of
/// degree <= 4.
struct FivePointCoefficients {
  StencilPosition position;
  int order;                    // derivative order, 1..4
  std::array<double, 5> alpha;
  double dx;
};

/// Solve the 5x5 Taylor system for one stencil position and derivative order.
/// The system matrix has rows offset^r (r = 0..4); the right-hand side is
/// order!/dx^order in row `order`, zero elsewhere (row 0 fixed to zero).
/// Throws std::invalid_argument on bad order/dx and std::runtime_error if the
/// solve residual exceeds 1e-12 (cannot happen for the five listed systems).
FivePointCoefficients solve_stencil_system(StencilPosition position, double dx, int order);

/// Convenience: coefficients for all four derivative orders at once.
std::array<FivePointCoefficients, 4> solve_all_orders(StencilPosition position, double dx);

/// Banded derivative operator on a uniform grid of `nodes` points.
/// Rows 0 and 1 use the LeftEdge/LeftInner stencils, the last two rows the
/// right-hand counterparts, everything in between the centered stencil, so
/// every row has exactly five nonzeros.
class DerivativeMatrix {
 public:
  DerivativeMatrix(std::size_t nodes, double dx, int order);

  std::size_t nodes() const { return nodes_; }
  double dx() const { return dx_; }
  int order() const { return order_; }

  /// First column covered by row i's five coefficients.
  std::size_t first_col(std::size_t i) const;
  /// The five coefficients of row i.
  const std::array<double, 5>& row(std::size_t i) const;

  Eigen::VectorXd apply(Eigen::Ref<const Eigen::VectorXd> values) const;

  /// y[i] = sum_j row(i)[j] * values[first_col(i)+j], written into y.
  void apply_into(Eigen::Ref<const Eigen::VectorXd> values, Eigen::VectorXd& out) const;

  /// Single-row application; `i` may be any row (used for boundary rows).
  double apply_row(std::size_t i, Eigen::Ref<const Eigen::VectorXd> values) const;

 private:
  std::size_t nodes_;
  double dx_;
  int order_;
  std::array<std::array<double, 5>, 5> coeff_;  // indexed by StencilPosition
  StencilPosition row_position(std::size_t i) const;
};

/// Assemble the banded derivative matrix; `nodes` >= 5 so all five stencils fit.
DerivativeMatrix build_derivative_matrix(std::size_t nodes, double dx, int order);

/// Lagrange remainder bound |f5|*(s*dx)^5/5! * sum of the four non-center
/// |alpha|, with s = 2 (Interior), 3 (inner rows), 4 (edge rows). The
/// coefficient magnitudes are taken from `coeffs` as stored; only the spatial
/// step in the (s*dx)^5 factor is the `dx` argument.
double remainder_bound(const FivePointCoefficients& coeffs, double dx, double f5_bound);

/// Largest dx for which remainder_bound stays below epsilon: the fifth-root
/// formula with prefactor 1/2, 1/3 or 1/4 depending on the stencil position.
double min_resolution(double epsilon, double f5_bound, const FivePointCoefficients& coeffs);

}  // namespace steinwave::fd
