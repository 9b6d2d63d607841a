#pragma once

#include <Eigen/Dense>

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "steinwave/target.hpp"
#include "steinwave/vi.hpp"

namespace steinwave::vi {

struct LossConfig {
  double omega = 0.5;       // trade-off weight, in [0, 1]
  double xi = 1.0;          // max line-search step
  double epsilon = 1e-3;    // stopping threshold on the loss
  int elbo_samples = 32;    // Monte Carlo draws per ELBO estimate
  int max_iters = 100;
  int line_search_probes = 12;
  int workers = 1;

  void validate() const;
};

/// Loss terms: L = (1-omega) * sup-norm of gradients - omega * ELBO.
struct LossValue {
  double loss = 0.0;
  double sup_norm = 0.0;
  double elbo = 0.0;
};

/// Full loss at a particle set. The gradient term is skipped when omega == 1
/// and the ELBO term when omega == 0 (the remaining term's value is
/// unchanged either way). Throws on gradient failure, naming the particle.
LossValue loss(const Eigen::MatrixXd& particles, const GaussianKDE& kde, const Target& model,
               const LossConfig& config, const ElboVariates& variates);

/// Spec-facing overload drawing fresh ELBO randomness from `rng`.
double loss(const Eigen::MatrixXd& particles, const GaussianKDE& kde, const Target& model,
            const LossConfig& config, std::mt19937_64& rng);

struct TraceRow {
  int iteration = 0;
  double loss = 0.0;
  double elbo = 0.0;
  double sup_norm = 0.0;
  double alpha = 0.0;  // step accepted when leaving this state (0 on the last row)
  long forward_solves = 0;
};

struct Trace {
  std::vector<TraceRow> rows;
  bool converged = false;       // loss <= epsilon fired (vs. max_iters)
  std::string stop_reason;
  double wall_seconds = 0.0;
};

/// One evaluated line-search candidate.
struct LineSearchResult {
  double alpha = 0.0;
  LossValue value;
  Eigen::MatrixXd candidate;              // Theta + alpha * phi
  std::optional<Eigen::MatrixXd> grads;   // gradients at the candidate, when computed
};

/// Derivative-free (golden-section) minimization of
///   alpha -> L(Theta + alpha*phi, KDE(Theta + alpha*phi))
/// over (0, xi]. Returns the best probe if it does not exceed
/// `baseline_loss`, otherwise the smallest-alpha probe. Throws when every
/// probe is infeasible.
LineSearchResult line_search_alpha(const Eigen::MatrixXd& particles,
                                   const Eigen::MatrixXd& directions, const Target& model,
                                   const LossConfig& config, const ElboVariates& variates,
                                   double baseline_loss);

/// Greedy SVGD: per-iteration KDE test distribution, loss-based stopping, and
/// a bounded line search for a single global step size.
std::pair<ParticleSet, Trace> gsvgd_run(const Target& model, ParticleSet init,
                                        const LossConfig& config, std::mt19937_64& rng);

/// SVGD with ADAM-scaled steps; the loss is evaluated for reporting only.
std::pair<ParticleSet, Trace> asvgd_run(const Target& model, ParticleSet init, AdamState adam,
                                        int iters, const LossConfig& report_config,
                                        std::mt19937_64& rng);

}  // namespace steinwave::vi
