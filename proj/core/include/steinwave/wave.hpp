#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "steinwave/signal.hpp"
#include "steinwave/stencil.hpp"

namespace steinwave::wave {

using SpMat = Eigen::SparseMatrix<double>;

struct HomogeneousLayer {
  double length = 1.0;      // [m]
  double speed_sq = 1.0;    // c^2 [m^2/s^2]
  std::size_t nodes = 5;    // grid nodes including both ends

  double dx() const { return length / static_cast<double>(nodes - 1); }
  double speed() const;
  void validate() const;
};

/// Contiguous stack of homogeneous layers; adjacent layers share their
/// interface node (each layer owns a copy of it).
struct LayeredMedium {
  std::vector<HomogeneousLayer> layers;

  double total_length() const;
  /// Global coordinate of layer `i`'s left end.
  double layer_start(std::size_t i) const;
  void validate() const;
};

struct WaveState {
  Eigen::VectorXd u;   // displacement [m]
  Eigen::VectorXd ut;  // velocity [m/s]
  double time = 0.0;

  static WaveState zero(std::size_t nodes);
};

struct SimulationConfig {
  double dt = 1e-3;            // [s]
  double t_end = 1.0;          // [s]
  double courant_limit = 0.5;  // max allowed c*dt/dx

  std::size_t step_count() const;
};

/// Throws if any layer (or the max speed on a low-contrast grid) violates
/// c*dt/dx <= courant_limit.
void check_cfl(const LayeredMedium& medium, const SimulationConfig& config);
void check_cfl(double max_speed, double dx, const SimulationConfig& config);

/// Displacement time series at a fixed set of grid nodes.
struct ObservationRecord {
  std::vector<double> node_positions;
  std::vector<double> times;
  Eigen::MatrixXd values;  // node x time

  /// ||a - b||_F / ||b||_F over the sample matrices.
  static double relative_l2(const ObservationRecord& a, const ObservationRecord& b);
};

/// Reflection and transmission coefficients for a wave passing from a medium
/// with speed c_i into one with speed c_j.
std::pair<double, double> reflection_transmission(double c_i, double c_j);

/// Boundary source values exchanged across one interface: the right-end source
/// of the left layer and the left-end source of the right layer.
std::pair<double, double> interface_sources(double u_r_left_layer, double u_l_right_layer,
                                            double r_ij, double t_ij, double r_ji, double t_ji);

enum class Direction { Rightward, Leftward };

/// Discretization used for the first-order absorbing boundary condition.
/// FivePoint is the production scheme; the 3-point variants exist for the
/// boundary-operator comparison study.
enum class AbsorbingVariant { FivePoint, Backward3, Centered3 };

/// Advance one homogeneous-layer system (a single travel direction) by one
/// RK4 step. The driven boundary takes its Dirichlet value from `driven`;
/// the opposite boundary absorbs.
WaveState step_homogeneous(const WaveState& state, const HomogeneousLayer& layer,
                           Direction direction, const SourceSignal& driven, double dt);

// ---------------------------------------------------------------------------
// Semi-discrete systems.
//
// Both wave models reduce to W' = A W + b(t) with a theta-independent source b
// and a post-step projection W <- P(theta) W + sigma(t) that pins the driven
// Dirichlet nodes. A and the projection are materialized as sparse matrices
// (probed from the hand-written right-hand side, which is exact for a linear
// map), so the adjoint pass can use their transposes directly.
// ---------------------------------------------------------------------------

struct ProjectionTerm {
  int col = -1;
  double weight = 0.0;
  // d(weight)/d(theta_p) for the at most two parameters the weight depends on.
  int p0 = -1, p1 = -1;
  double dw0 = 0.0, dw1 = 0.0;
};

struct ProjectionRow {
  int row = -1;
  std::vector<ProjectionTerm> terms;  // empty for externally driven rows
};

class WaveSystem {
 public:
  virtual ~WaveSystem() = default;

  Eigen::Index state_size() const { return A_.rows(); }
  int parameter_count() const { return n_params_; }
  const SpMat& A() const { return A_; }
  const SpMat& A_transpose() const { return AT_; }
  const SpMat& observer() const { return S_; }

  /// out = A x + b(t).
  void rhs(double t, const Eigen::VectorXd& x, Eigen::VectorXd& out) const;
  /// Post-step constraint projection at time t (in place).
  void project(double t, Eigen::VectorXd& w) const;
  /// lam <- P^T lam (the linear part of project).
  void project_transpose(Eigen::VectorXd& lam) const;

  /// grad_p += lam^T (dA/dtheta_p) x for every parameter p.
  virtual void accumulate_dA(const Eigen::VectorXd& lam, const Eigen::VectorXd& x,
                             Eigen::VectorXd& grad) const = 0;
  /// grad_p += lam^T (dP/dtheta_p) w for every parameter p; `w` is the
  /// post-step state (its projection inputs are untouched by P).
  void accumulate_dprojection(const Eigen::VectorXd& lam, const Eigen::VectorXd& w,
                              Eigen::VectorXd& grad) const;

 protected:
  struct ExternalRow {
    int row = -1;
    int derivative = 0;  // source derivative order feeding this row
  };

  void finalize(const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& rhs_hand,
                Eigen::Index n);

  SourceSignal source_;
  std::vector<ExternalRow> external_rows_;      // rows of b(t): S^(k)(t)
  std::vector<ExternalRow> external_settings_;  // projection: row <- S^(k)(t)
  std::vector<ProjectionRow> projection_rows_;
  SpMat A_, AT_, S_;
  int n_params_ = 0;
};

/// Union of homogeneous layers coupled through reflection/transmission
/// interface sources; two first-order subsystems (rightward/leftward wave)
/// per layer. Parameters are the per-layer squared speeds.
class HighContrastSystem : public WaveSystem {
 public:
  HighContrastSystem(const LayeredMedium& medium, const SourceSignal& source_left,
                     const std::vector<double>& obs_nodes);

  void accumulate_dA(const Eigen::VectorXd& lam, const Eigen::VectorXd& x,
                     Eigen::VectorXd& grad) const override;

  /// State indices of (u, ut) for a global position; sums r and l subsystems.
  Eigen::VectorXd displacement(const Eigen::VectorXd& w) const;

 private:
  struct Layer {
    std::size_t nodes;
    double dx, c, c2;
    int base;  // state offset: [u_r, v_r, u_l, v_l], each `nodes` long
    fd::DerivativeMatrix d1, d2;
  };
  struct Interface {
    // forward = wave passing left->right, backward = right->left
    double r_f, t_f, r_b, t_b;
    double dr_d0, dr_d1;  // dR_f/dtheta_left, dR_f/dtheta_right (dT_f == dR_f)
  };

  void rhs_hand(const Eigen::VectorXd& x, Eigen::VectorXd& out) const;
  int iu_r(std::size_t l, std::size_t i) const;
  int iv_r(std::size_t l, std::size_t i) const;
  int iu_l(std::size_t l, std::size_t i) const;
  int iv_l(std::size_t l, std::size_t i) const;

  std::vector<Layer> layers_;
  std::vector<Interface> interfaces_;
};

/// Smooth-velocity model on a single grid: u_tt = g(x) D u + c^2(x) L u with
/// g = D c^2, left Dirichlet source, right absorbing boundary. Parameters, if
/// present, are coefficients theta with c^2 = basis * theta.
class LowContrastSystem : public WaveSystem {
 public:
  /// Fixed c^2 samples; no parameter sensitivities.
  LowContrastSystem(const Eigen::VectorXd& c2_samples, double length,
                    const SourceSignal& source_left, const std::vector<double>& obs_nodes,
                    AbsorbingVariant variant = AbsorbingVariant::FivePoint);

  /// Parameterized c^2 = basis * theta (basis: nodes x n_params).
  LowContrastSystem(const Eigen::MatrixXd& basis, const Eigen::VectorXd& theta, double length,
                    const SourceSignal& source_left, const std::vector<double>& obs_nodes);

  void accumulate_dA(const Eigen::VectorXd& lam, const Eigen::VectorXd& x,
                     Eigen::VectorXd& grad) const override;

  double max_speed() const { return max_speed_; }
  double dx() const { return dx_; }

 private:
  void build(const Eigen::VectorXd& c2, double length, const std::vector<double>& obs_nodes,
             AbsorbingVariant variant);
  void rhs_hand(const Eigen::VectorXd& x, Eigen::VectorXd& out) const;

  std::size_t nodes_ = 0;
  double dx_ = 0.0, max_speed_ = 0.0, c_right_ = 0.0;
  Eigen::VectorXd c2_, gvec_;
  Eigen::MatrixXd basis_, dbasis_;  // B and D*B (empty when unparameterized)
  std::unique_ptr<fd::DerivativeMatrix> d1_, d2_;
  AbsorbingVariant variant_ = AbsorbingVariant::FivePoint;
};

/// RK4 integration of a WaveSystem, sampling the observer every step.
/// When `trajectory` is non-null the post-projection state of every step
/// (including the zero initial state) is stored column-wise for adjoint use.
ObservationRecord integrate(const WaveSystem& system, const SimulationConfig& config,
                            const std::vector<double>& obs_positions,
                            Eigen::MatrixXd* trajectory = nullptr);

ObservationRecord solve_high_contrast(const LayeredMedium& medium, const SourceSignal& source_left,
                                      const SimulationConfig& config,
                                      const std::vector<double>& obs_nodes);

ObservationRecord solve_low_contrast(const Eigen::VectorXd& c2_samples, double length,
                                     const SourceSignal& source_left,
                                     const SimulationConfig& config,
                                     const std::vector<double>& obs_nodes,
                                     AbsorbingVariant variant = AbsorbingVariant::FivePoint);

ObservationRecord solve_low_contrast(const std::function<double(double)>& c2_of_x,
                                     std::size_t nodes, double length,
                                     const SourceSignal& source_left,
                                     const SimulationConfig& config,
                                     const std::vector<double>& obs_nodes);

}  // namespace steinwave::wave
