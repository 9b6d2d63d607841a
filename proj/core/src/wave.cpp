#include "steinwave/wave.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace steinwave::wave {

double HomogeneousLayer::speed() const { return std::sqrt(speed_sq); }

void HomogeneousLayer::validate() const {
  if (!(length > 0.0)) throw std::invalid_argument("layer length must be positive");
  if (!(speed_sq > 0.0)) throw std::invalid_argument("layer speed_sq must be positive");
  if (nodes < 5) throw std::invalid_argument("layer needs at least 5 nodes");
}

double LayeredMedium::total_length() const {
  double l = 0.0;
  for (const auto& layer : layers) l += layer.length;
  return l;
}

double LayeredMedium::layer_start(std::size_t i) const {
  double x = 0.0;
  for (std::size_t k = 0; k < i; ++k) x += layers[k].length;
  return x;
}

void LayeredMedium::validate() const {
  if (layers.empty()) throw std::invalid_argument("medium needs at least one layer");
  for (const auto& layer : layers) layer.validate();
}

WaveState WaveState::zero(std::size_t nodes) {
  WaveState s;
  s.u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nodes));
  s.ut = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nodes));
  return s;
}

std::size_t SimulationConfig::step_count() const {
  return static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
}

void check_cfl(double max_speed, double dx, const SimulationConfig& config) {
  const double courant = max_speed * config.dt / dx;
  if (courant > config.courant_limit)
    throw std::runtime_error("CFL violation: c*dt/dx = " + std::to_string(courant) +
                             " exceeds limit " + std::to_string(config.courant_limit));
}

void check_cfl(const LayeredMedium& medium, const SimulationConfig& config) {
  for (const auto& layer : medium.layers) check_cfl(layer.speed(), layer.dx(), config);
}

double ObservationRecord::relative_l2(const ObservationRecord& a, const ObservationRecord& b) {
  const double denom = b.values.norm();
  if (denom == 0.0) return a.values.norm() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (a.values - b.values).norm() / denom;
}

std::pair<double, double> reflection_transmission(double c_i, double c_j) {
  if (!(c_i > 0.0) || !(c_j > 0.0))
    throw std::domain_error("reflection_transmission: wave speeds must be positive");
  const double s = c_i + c_j;
  return {(c_j - c_i) / s, 2.0 * c_j / s};
}

std::pair<double, double> interface_sources(double u_r_left_layer, double u_l_right_layer,
                                            double r_ij, double t_ij, double r_ji, double t_ji) {
  const double f_right_of_left = r_ij * u_r_left_layer + t_ji * u_l_right_layer;
  const double f_left_of_right = r_ji * u_l_right_layer + t_ij * u_r_left_layer;
  return {f_right_of_left, f_left_of_right};
}

// ---------------------------------------------------------------------------
// WaveSystem base
// ---------------------------------------------------------------------------

void WaveSystem::finalize(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& rhs_hand,
    Eigen::Index n) {
  // The hand-written right-hand side is linear, so probing it with unit
  // vectors recovers A column by column, exactly.
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd col(n);
  std::vector<Eigen::Triplet<double>> trips;
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    rhs_hand(e, col);
    e[j] = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (col[i] != 0.0) trips.emplace_back(i, j, col[i]);
  }
  A_.resize(n, n);
  A_.setFromTriplets(trips.begin(), trips.end());
  A_.makeCompressed();
  AT_ = A_.transpose();
  AT_.makeCompressed();
}

void WaveSystem::rhs(double t, const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  out.noalias() = A_ * x;
  for (const auto& er : external_rows_) {
    const double s = er.derivative == 1 ? source_.d1(t) : source_.d2(t);
    out[er.row] += s;
  }
}

void WaveSystem::project(double t, Eigen::VectorXd& w) const {
  for (const auto& pr : projection_rows_) {
    double v = 0.0;
    for (const auto& term : pr.terms) v += term.weight * w[term.col];
    w[pr.row] = v;
  }
  for (const auto& es : external_settings_)
    w[es.row] = es.derivative == 0 ? source_.value(t) : source_.d1(t);
}

void WaveSystem::project_transpose(Eigen::VectorXd& lam) const {
  for (const auto& pr : projection_rows_) {
    const double v = lam[pr.row];
    lam[pr.row] = 0.0;
    for (const auto& term : pr.terms) lam[term.col] += term.weight * v;
  }
  for (const auto& es : external_settings_) lam[es.row] = 0.0;
}

void WaveSystem::accumulate_dprojection(const Eigen::VectorXd& lam, const Eigen::VectorXd& w,
                                        Eigen::VectorXd& grad) const {
  for (const auto& pr : projection_rows_) {
    const double l = lam[pr.row];
    if (l == 0.0) continue;
    for (const auto& term : pr.terms) {
      if (term.p0 >= 0) grad[term.p0] += l * term.dw0 * w[term.col];
      if (term.p1 >= 0) grad[term.p1] += l * term.dw1 * w[term.col];
    }
  }
}

// ---------------------------------------------------------------------------
// HighContrastSystem
// ---------------------------------------------------------------------------

namespace {

// Observation node -> (layer, local index). Interface nodes belong to the
// left layer.
struct ObsLocation {
  std::size_t layer;
  std::size_t local;
};

ObsLocation locate_node(const LayeredMedium& medium, double x) {
  const double total = medium.total_length();
  const double tol = 1e-9 * std::max(total, 1.0);
  if (x < -tol || x > total + tol)
    throw std::invalid_argument("observation node outside the medium: x=" + std::to_string(x));
  double start = 0.0;
  for (std::size_t l = 0; l < medium.layers.size(); ++l) {
    const auto& layer = medium.layers[l];
    const double end = start + layer.length;
    if (x <= end + tol) {
      const double local_x = x - start;
      const auto idx = static_cast<std::size_t>(std::llround(local_x / layer.dx()));
      if (std::abs(local_x - static_cast<double>(idx) * layer.dx()) > tol)
        throw std::invalid_argument("observation node not on the grid: x=" + std::to_string(x));
      return {l, std::min<std::size_t>(idx, layer.nodes - 1)};
    }
    start = end;
  }
  return {medium.layers.size() - 1, medium.layers.back().nodes - 1};
}

}  // namespace

int HighContrastSystem::iu_r(std::size_t l, std::size_t i) const {
  return layers_[l].base + static_cast<int>(i);
}
int HighContrastSystem::iv_r(std::size_t l, std::size_t i) const {
  return layers_[l].base + static_cast<int>(layers_[l].nodes + i);
}
int HighContrastSystem::iu_l(std::size_t l, std::size_t i) const {
  return layers_[l].base + static_cast<int>(2 * layers_[l].nodes + i);
}
int HighContrastSystem::iv_l(std::size_t l, std::size_t i) const {
  return layers_[l].base + static_cast<int>(3 * layers_[l].nodes + i);
}

HighContrastSystem::HighContrastSystem(const LayeredMedium& medium,
                                       const SourceSignal& source_left,
                                       const std::vector<double>& obs_nodes) {
  medium.validate();
  source_ = source_left;
  n_params_ = static_cast<int>(medium.layers.size());

  int base = 0;
  for (const auto& ml : medium.layers) {
    Layer layer{ml.nodes,
                ml.dx(),
                ml.speed(),
                ml.speed_sq,
                base,
                fd::DerivativeMatrix(ml.nodes, ml.dx(), 1),
                fd::DerivativeMatrix(ml.nodes, ml.dx(), 2)};
    layers_.push_back(std::move(layer));
    base += static_cast<int>(4 * ml.nodes);
  }
  const Eigen::Index n_state = base;

  for (std::size_t m = 0; m + 1 < layers_.size(); ++m) {
    const double c0 = layers_[m].c, c1 = layers_[m + 1].c;
    const double s = c0 + c1;
    Interface f;
    f.r_f = (c1 - c0) / s;
    f.t_f = 2.0 * c1 / s;
    f.r_b = -f.r_f;
    f.t_b = 2.0 - f.t_f;
    f.dr_d0 = -c1 / (c0 * s * s);  // d(R_f)/d(theta_m), via c = sqrt(theta)
    f.dr_d1 = c0 / (c1 * s * s);   // d(R_f)/d(theta_{m+1})
    interfaces_.push_back(f);
  }

  // External Dirichlet drive: u_r of the first layer at its left node.
  external_rows_.push_back({iu_r(0, 0), 1});
  external_rows_.push_back({iv_r(0, 0), 2});
  external_settings_.push_back({iu_r(0, 0), 0});
  external_settings_.push_back({iv_r(0, 0), 1});

  // The last layer's leftward wave is driven by a zero source from the right:
  // projection rows with no terms pin it to zero.
  {
    const std::size_t k = layers_.size() - 1;
    const std::size_t last = layers_[k].nodes - 1;
    projection_rows_.push_back({iu_l(k, last), {}});
    projection_rows_.push_back({iv_l(k, last), {}});
  }

  // Interface handoffs. All four weights share the derivative of R_f up to
  // sign (T = 1 + R, backward coefficients are the negations).
  for (std::size_t m = 0; m + 1 < layers_.size(); ++m) {
    const auto& f = interfaces_[m];
    const std::size_t last = layers_[m].nodes - 1;
    const int pm = static_cast<int>(m), pm1 = static_cast<int>(m + 1);
    auto term = [&](int col, double w, double sgn) {
      return ProjectionTerm{col, w, pm, pm1, sgn * f.dr_d0, sgn * f.dr_d1};
    };
    projection_rows_.push_back({iu_l(m, last),
                                {term(iu_r(m, last), f.r_f, +1.0), term(iu_l(m + 1, 0), f.t_b, -1.0)}});
    projection_rows_.push_back({iv_l(m, last),
                                {term(iv_r(m, last), f.r_f, +1.0), term(iv_l(m + 1, 0), f.t_b, -1.0)}});
    projection_rows_.push_back({iu_r(m + 1, 0),
                                {term(iu_l(m + 1, 0), f.r_b, -1.0), term(iu_r(m, last), f.t_f, +1.0)}});
    projection_rows_.push_back({iv_r(m + 1, 0),
                                {term(iv_l(m + 1, 0), f.r_b, -1.0), term(iv_r(m, last), f.t_f, +1.0)}});
  }

  // Observer: u = u_r + u_l of the owning layer at each observation node.
  {
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t k = 0; k < obs_nodes.size(); ++k) {
      const auto loc = locate_node(medium, obs_nodes[k]);
      trips.emplace_back(static_cast<int>(k), iu_r(loc.layer, loc.local), 1.0);
      trips.emplace_back(static_cast<int>(k), iu_l(loc.layer, loc.local), 1.0);
    }
    S_.resize(static_cast<Eigen::Index>(obs_nodes.size()), n_state);
    S_.setFromTriplets(trips.begin(), trips.end());
    S_.makeCompressed();
  }

  finalize([this](const Eigen::VectorXd& x, Eigen::VectorXd& out) { rhs_hand(x, out); }, n_state);
}

void HighContrastSystem::rhs_hand(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  out.setZero(x.size());
  const std::size_t K = layers_.size();
  for (std::size_t l = 0; l < K; ++l) {
    const auto& L = layers_[l];
    const auto n = static_cast<Eigen::Index>(L.nodes);
    const std::size_t last = L.nodes - 1;
    const auto x_ur = x.segment(iu_r(l, 0), n);
    const auto x_vr = x.segment(iv_r(l, 0), n);
    const auto x_ul = x.segment(iu_l(l, 0), n);
    const auto x_vl = x.segment(iv_l(l, 0), n);

    // interior nodes of both subsystems
    for (std::size_t i = 1; i < last; ++i) {
      out[iu_r(l, i)] = x_vr[static_cast<Eigen::Index>(i)];
      out[iv_r(l, i)] = L.c2 * L.d2.apply_row(i, x_ur);
      out[iu_l(l, i)] = x_vl[static_cast<Eigen::Index>(i)];
      out[iv_l(l, i)] = L.c2 * L.d2.apply_row(i, x_ul);
    }

    // absorbing ends: one-way advection of both components
    out[iu_r(l, last)] = -L.c * L.d1.apply_row(last, x_ur);
    out[iv_r(l, last)] = -L.c * L.d1.apply_row(last, x_vr);
    out[iu_l(l, 0)] = L.c * L.d1.apply_row(0, x_ul);
    out[iv_l(l, 0)] = L.c * L.d1.apply_row(0, x_vl);

    // driven ends fed by the neighboring layers (time derivative of the
    // interface source; the source value itself is pinned by project()).
    if (l > 0) {
      const auto& f = interfaces_[l - 1];
      const auto& P = layers_[l - 1];
      const std::size_t plast = P.nodes - 1;
      const auto p_vr = x.segment(iv_r(l - 1, 0), static_cast<Eigen::Index>(P.nodes));
      const double accel_prev = -P.c * P.d1.apply_row(plast, p_vr);
      const double accel_self = L.c * L.d1.apply_row(0, x_vl);
      out[iu_r(l, 0)] = f.r_b * x_vl[0] + f.t_f * p_vr[static_cast<Eigen::Index>(plast)];
      out[iv_r(l, 0)] = f.r_b * accel_self + f.t_f * accel_prev;
    }
    if (l + 1 < K) {
      const auto& f = interfaces_[l];
      const auto& N = layers_[l + 1];
      const auto n_vl = x.segment(iv_l(l + 1, 0), static_cast<Eigen::Index>(N.nodes));
      const double accel_next = N.c * N.d1.apply_row(0, n_vl);
      const double accel_self = -L.c * L.d1.apply_row(last, x_vr);
      out[iu_l(l, last)] = f.r_f * x_vr[static_cast<Eigen::Index>(last)] + f.t_b * n_vl[0];
      out[iv_l(l, last)] = f.r_f * accel_self + f.t_b * accel_next;
    }
  }
  // external driven rows stay zero; rhs() adds the source terms
  out[iu_r(0, 0)] = 0.0;
  out[iv_r(0, 0)] = 0.0;
  {
    const std::size_t k = K - 1;
    const std::size_t last = layers_[k].nodes - 1;
    out[iu_l(k, last)] = 0.0;
    out[iv_l(k, last)] = 0.0;
  }
}

void HighContrastSystem::accumulate_dA(const Eigen::VectorXd& lam, const Eigen::VectorXd& x,
                                       Eigen::VectorXd& grad) const {
  const std::size_t K = layers_.size();
  for (std::size_t l = 0; l < K; ++l) {
    const auto& L = layers_[l];
    const auto n = static_cast<Eigen::Index>(L.nodes);
    const std::size_t last = L.nodes - 1;
    const int p = static_cast<int>(l);
    const auto x_ur = x.segment(iu_r(l, 0), n);
    const auto x_vr = x.segment(iv_r(l, 0), n);
    const auto x_ul = x.segment(iu_l(l, 0), n);
    const auto x_vl = x.segment(iv_l(l, 0), n);

    // d(c^2 L u)/d(theta_l) = L u on interior v-rows
    double acc = 0.0;
    for (std::size_t i = 1; i < last; ++i) {
      acc += lam[iv_r(l, i)] * L.d2.apply_row(i, x_ur);
      acc += lam[iv_l(l, i)] * L.d2.apply_row(i, x_ul);
    }
    // absorbing rows carry c = sqrt(theta_l)
    const double half_inv_c = 0.5 / L.c;
    acc -= half_inv_c * lam[iu_r(l, last)] * L.d1.apply_row(last, x_ur);
    acc -= half_inv_c * lam[iv_r(l, last)] * L.d1.apply_row(last, x_vr);
    acc += half_inv_c * lam[iu_l(l, 0)] * L.d1.apply_row(0, x_ul);
    acc += half_inv_c * lam[iv_l(l, 0)] * L.d1.apply_row(0, x_vl);
    grad[p] += acc;
  }

  for (std::size_t m = 0; m + 1 < K; ++m) {
    const auto& f = interfaces_[m];
    const auto& Lm = layers_[m];
    const auto& Ln = layers_[m + 1];
    const std::size_t last = Lm.nodes - 1;
    const int p0 = static_cast<int>(m), p1 = static_cast<int>(m + 1);
    const auto m_vr = x.segment(iv_r(m, 0), static_cast<Eigen::Index>(Lm.nodes));
    const auto n_vl = x.segment(iv_l(m + 1, 0), static_cast<Eigen::Index>(Ln.nodes));

    const double dvr = Lm.d1.apply_row(last, m_vr);
    const double dvl = Ln.d1.apply_row(0, n_vl);
    const double accel_m = -Lm.c * dvr;  // absorbing accel, right end of (m, r)
    const double accel_n = Ln.c * dvl;   // absorbing accel, left end of (m+1, l)

    // u_l^m[last]' = R_f v_r + T_b v_l'   and   u_r^{m+1}[0]' = R_b v_l' + T_f v_r
    const double du_rows = lam[iu_l(m, last)] + lam[iu_r(m + 1, 0)];
    const double vdiff = m_vr[static_cast<Eigen::Index>(last)] - n_vl[0];
    grad[p0] += du_rows * f.dr_d0 * vdiff;
    grad[p1] += du_rows * f.dr_d1 * vdiff;

    // v-rows: R/T weights on the two absorbing accelerations, plus the chain
    // through c inside each acceleration.
    const double lvm = lam[iv_l(m, last)];
    const double lvn = lam[iv_r(m + 1, 0)];
    const double adiff = accel_m - accel_n;
    grad[p0] += (lvm + lvn) * f.dr_d0 * adiff;
    grad[p1] += (lvm + lvn) * f.dr_d1 * adiff;
    // d(accel_m)/d(theta_m) = -dvr/(2 c_m); d(accel_n)/d(theta_{m+1}) = dvl/(2 c_{m+1})
    grad[p0] += (lvm * f.r_f + lvn * f.t_f) * (-dvr / (2.0 * Lm.c));
    grad[p1] += (lvm * f.t_b + lvn * f.r_b) * (dvl / (2.0 * Ln.c));
  }
}

Eigen::VectorXd HighContrastSystem::displacement(const Eigen::VectorXd& w) const {
  Eigen::Index total = 0;
  for (const auto& l : layers_) total += static_cast<Eigen::Index>(l.nodes);
  Eigen::VectorXd u(total);
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto n = static_cast<Eigen::Index>(layers_[l].nodes);
    u.segment(at, n) = w.segment(iu_r(l, 0), n) + w.segment(iu_l(l, 0), n);
    at += n;
  }
  return u;
}

// ---------------------------------------------------------------------------
// LowContrastSystem
// ---------------------------------------------------------------------------

LowContrastSystem::LowContrastSystem(const Eigen::VectorXd& c2_samples, double length,
                                     const SourceSignal& source_left,
                                     const std::vector<double>& obs_nodes,
                                     AbsorbingVariant variant) {
  source_ = source_left;
  n_params_ = 0;
  build(c2_samples, length, obs_nodes, variant);
}

LowContrastSystem::LowContrastSystem(const Eigen::MatrixXd& basis, const Eigen::VectorXd& theta,
                                     double length, const SourceSignal& source_left,
                                     const std::vector<double>& obs_nodes) {
  source_ = source_left;
  n_params_ = static_cast<int>(theta.size());
  basis_ = basis;
  build(basis * theta, length, obs_nodes, AbsorbingVariant::FivePoint);
  dbasis_.resize(basis.rows(), basis.cols());
  for (Eigen::Index j = 0; j < basis.cols(); ++j) dbasis_.col(j) = d1_->apply(basis.col(j));
}

void LowContrastSystem::build(const Eigen::VectorXd& c2, double length,
                              const std::vector<double>& obs_nodes, AbsorbingVariant variant) {
  nodes_ = static_cast<std::size_t>(c2.size());
  if (nodes_ < 5) throw std::invalid_argument("low-contrast grid needs at least 5 nodes");
  dx_ = length / static_cast<double>(nodes_ - 1);
  variant_ = variant;
  for (Eigen::Index i = 0; i < c2.size(); ++i)
    if (!(c2[i] > 0.0))
      throw std::domain_error("nonpositive velocity: c^2 = " + std::to_string(c2[i]) +
                              " at node " + std::to_string(i));
  c2_ = c2;
  max_speed_ = std::sqrt(c2.maxCoeff());
  c_right_ = std::sqrt(c2[c2.size() - 1]);
  d1_ = std::make_unique<fd::DerivativeMatrix>(nodes_, dx_, 1);
  d2_ = std::make_unique<fd::DerivativeMatrix>(nodes_, dx_, 2);
  gvec_ = d1_->apply(c2_);

  const auto n = static_cast<Eigen::Index>(nodes_);
  external_rows_.push_back({0, 1});
  external_rows_.push_back({static_cast<int>(n), 2});
  external_settings_.push_back({0, 0});
  external_settings_.push_back({static_cast<int>(n), 1});

  {
    const double tol = 1e-9 * std::max(length, 1.0);
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t k = 0; k < obs_nodes.size(); ++k) {
      const double x = obs_nodes[k];
      const auto idx = static_cast<Eigen::Index>(std::llround(x / dx_));
      if (idx < 0 || idx >= n || std::abs(x - static_cast<double>(idx) * dx_) > tol)
        throw std::invalid_argument("observation node not on the grid: x=" + std::to_string(x));
      trips.emplace_back(static_cast<int>(k), idx, 1.0);
    }
    S_.resize(static_cast<Eigen::Index>(obs_nodes.size()), 2 * n);
    S_.setFromTriplets(trips.begin(), trips.end());
    S_.makeCompressed();
  }

  finalize([this](const Eigen::VectorXd& x, Eigen::VectorXd& out) { rhs_hand(x, out); }, 2 * n);
}

void LowContrastSystem::rhs_hand(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  const auto n = static_cast<Eigen::Index>(nodes_);
  out.setZero(2 * n);
  const auto xu = x.segment(0, n);
  const auto xv = x.segment(n, n);
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    out[i] = xv[i];
    out[n + i] = gvec_[i] * d1_->apply_row(static_cast<std::size_t>(i), xu) +
                 c2_[i] * d2_->apply_row(static_cast<std::size_t>(i), xu);
  }
  auto boundary_d = [&](Eigen::Ref<const Eigen::VectorXd> f) {
    switch (variant_) {
      case AbsorbingVariant::FivePoint:
        return d1_->apply_row(nodes_ - 1, f);
      case AbsorbingVariant::Backward3:
        return (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx_);
      case AbsorbingVariant::Centered3:
        return (f[n - 1] - f[n - 3]) / (2.0 * dx_);
    }
    return 0.0;
  };
  out[n - 1] = -c_right_ * boundary_d(xu);
  out[2 * n - 1] = -c_right_ * boundary_d(xv);
  // node 0 rows stay zero: externally driven
}

void LowContrastSystem::accumulate_dA(const Eigen::VectorXd& lam, const Eigen::VectorXd& x,
                                      Eigen::VectorXd& grad) const {
  if (n_params_ == 0) return;
  const auto n = static_cast<Eigen::Index>(nodes_);
  const auto xu = x.segment(0, n);
  const auto xv = x.segment(n, n);

  // interior rows: d/dtheta_j [g_i (D u)_i + c2_i (L u)_i] = (DB)_ij (Du)_i + B_ij (Lu)_i
  Eigen::VectorXd wd = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd wl = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const double lv = lam[n + i];
    if (lv == 0.0) continue;
    wd[i] = lv * d1_->apply_row(static_cast<std::size_t>(i), xu);
    wl[i] = lv * d2_->apply_row(static_cast<std::size_t>(i), xu);
  }
  grad.noalias() += dbasis_.transpose() * wd;
  grad.noalias() += basis_.transpose() * wl;

  // absorbing rows carry c(L) = sqrt(c2[-1])
  const double du = d1_->apply_row(nodes_ - 1, xu);
  const double dv = d1_->apply_row(nodes_ - 1, xv);
  const double w = -(lam[n - 1] * du + lam[2 * n - 1] * dv) / (2.0 * c_right_);
  grad.noalias() += w * basis_.row(n - 1).transpose();
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

ObservationRecord integrate(const WaveSystem& system, const SimulationConfig& config,
                            const std::vector<double>& obs_positions,
                            Eigen::MatrixXd* trajectory) {
  const Eigen::Index n = system.state_size();
  const std::size_t steps = config.step_count();
  const double dt = config.dt;

  ObservationRecord rec;
  rec.node_positions = obs_positions;
  rec.times.resize(steps + 1);
  rec.values.resize(system.observer().rows(), static_cast<Eigen::Index>(steps + 1));

  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), tmp(n);

  if (trajectory) trajectory->resize(n, static_cast<Eigen::Index>(steps + 1));

  for (std::size_t s = 0; s <= steps; ++s) {
    const double t = static_cast<double>(s) * dt;
    rec.times[s] = t;
    rec.values.col(static_cast<Eigen::Index>(s)) = system.observer() * w;
    if (trajectory) trajectory->col(static_cast<Eigen::Index>(s)) = w;
    if (s == steps) break;

    system.rhs(t, w, k1);
    tmp = w + (0.5 * dt) * k1;
    system.rhs(t + 0.5 * dt, tmp, k2);
    tmp = w + (0.5 * dt) * k2;
    system.rhs(t + 0.5 * dt, tmp, k3);
    tmp = w + dt * k3;
    system.rhs(t + dt, tmp, k4);
    w += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    system.project(t + dt, w);
  }
  return rec;
}

ObservationRecord solve_high_contrast(const LayeredMedium& medium, const SourceSignal& source_left,
                                      const SimulationConfig& config,
                                      const std::vector<double>& obs_nodes) {
  medium.validate();
  check_cfl(medium, config);
  HighContrastSystem system(medium, source_left, obs_nodes);
  return integrate(system, config, obs_nodes);
}

ObservationRecord solve_low_contrast(const Eigen::VectorXd& c2_samples, double length,
                                     const SourceSignal& source_left,
                                     const SimulationConfig& config,
                                     const std::vector<double>& obs_nodes,
                                     AbsorbingVariant variant) {
  LowContrastSystem system(c2_samples, length, source_left, obs_nodes, variant);
  check_cfl(system.max_speed(), system.dx(), config);
  return integrate(system, config, obs_nodes);
}

ObservationRecord solve_low_contrast(const std::function<double(double)>& c2_of_x,
                                     std::size_t nodes, double length,
                                     const SourceSignal& source_left,
                                     const SimulationConfig& config,
                                     const std::vector<double>& obs_nodes) {
  Eigen::VectorXd c2(static_cast<Eigen::Index>(nodes));
  const double dx = length / static_cast<double>(nodes - 1);
  for (std::size_t i = 0; i < nodes; ++i)
    c2[static_cast<Eigen::Index>(i)] = c2_of_x(static_cast<double>(i) * dx);
  return solve_low_contrast(c2, length, source_left, config, obs_nodes);
}

// ---------------------------------------------------------------------------
// Single-subsystem step (public building block)
// ---------------------------------------------------------------------------

namespace {

struct SingleSystem {
  const HomogeneousLayer& layer;
  Direction dir;
  const SourceSignal& sig;
  fd::DerivativeMatrix d1, d2;

  SingleSystem(const HomogeneousLayer& l, Direction d, const SourceSignal& s)
      : layer(l), dir(d), sig(s), d1(l.nodes, l.dx(), 1), d2(l.nodes, l.dx(), 2) {}

  std::size_t driven() const { return dir == Direction::Rightward ? 0 : layer.nodes - 1; }
  std::size_t absorbing() const { return dir == Direction::Rightward ? layer.nodes - 1 : 0; }
  double outflow_sign() const { return dir == Direction::Rightward ? -1.0 : 1.0; }

  void rhs(double t, const Eigen::VectorXd& u, const Eigen::VectorXd& v, Eigen::VectorXd& du,
           Eigen::VectorXd& dv) const {
    const auto n = static_cast<Eigen::Index>(layer.nodes);
    const double c = layer.speed();
    du.resize(n);
    dv.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      du[i] = v[i];
      dv[i] = layer.speed_sq * d2.apply_row(static_cast<std::size_t>(i), u);
    }
    const std::size_t b = absorbing();
    const double sgn = outflow_sign();
    du[static_cast<Eigen::Index>(b)] = sgn * c * d1.apply_row(b, u);
    dv[static_cast<Eigen::Index>(b)] = sgn * c * d1.apply_row(b, v);
    const std::size_t g = driven();
    du[static_cast<Eigen::Index>(g)] = sig.d1(t);
    dv[static_cast<Eigen::Index>(g)] = sig.d2(t);
  }
};

}  // namespace

WaveState step_homogeneous(const WaveState& state, const HomogeneousLayer& layer,
                           Direction direction, const SourceSignal& driven, double dt) {
  layer.validate();
  if (state.u.size() != static_cast<Eigen::Index>(layer.nodes) || state.u.size() != state.ut.size())
    throw std::invalid_argument("step_homogeneous: state size does not match the layer grid");

  SingleSystem sys(layer, direction, driven);
  const double t = state.time;
  Eigen::VectorXd du1, dv1, du2, dv2, du3, dv3, du4, dv4;
  sys.rhs(t, state.u, state.ut, du1, dv1);
  Eigen::VectorXd u2 = state.u + 0.5 * dt * du1, v2 = state.ut + 0.5 * dt * dv1;
  sys.rhs(t + 0.5 * dt, u2, v2, du2, dv2);
  Eigen::VectorXd u3 = state.u + 0.5 * dt * du2, v3 = state.ut + 0.5 * dt * dv2;
  sys.rhs(t + 0.5 * dt, u3, v3, du3, dv3);
  Eigen::VectorXd u4 = state.u + dt * du3, v4 = state.ut + dt * dv3;
  sys.rhs(t + dt, u4, v4, du4, dv4);

  WaveState out;
  out.u = state.u + (dt / 6.0) * (du1 + 2.0 * du2 + 2.0 * du3 + du4);
  out.ut = state.ut + (dt / 6.0) * (dv1 + 2.0 * dv2 + 2.0 * dv3 + dv4);
  out.time = t + dt;
  const auto g = static_cast<Eigen::Index>(sys.driven());
  out.u[g] = driven.value(out.time);
  out.ut[g] = driven.d1(out.time);
  return out;
}

}  // namespace steinwave::wave
