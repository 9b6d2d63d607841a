#include "steinwave/gsvgd.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "steinwave/parallel.hpp"

namespace steinwave::vi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sup_norm_of(const Eigen::MatrixXd& grads) { return grads.cwiseAbs().maxCoeff(); }

// Likelihood values at the particles are not needed by the loss; only
// gradients (sup-norm term) and KDE draws (ELBO term) are.
LossValue loss_terms(const Eigen::MatrixXd& particles, const GaussianKDE& kde,
                     const Target& model, const LossConfig& config, const ElboVariates& variates,
                     const Eigen::MatrixXd* grads_opt, Eigen::MatrixXd* grads_out) {
  LossValue v;
  if (config.omega < 1.0) {
    if (grads_opt) {
      v.sup_norm = sup_norm_of(*grads_opt);
      if (grads_out) *grads_out = *grads_opt;
    } else {
      Eigen::MatrixXd g = batch_grad(model, particles, config.workers);
      v.sup_norm = sup_norm_of(g);
      if (grads_out) *grads_out = std::move(g);
    }
    v.loss += (1.0 - config.omega) * v.sup_norm;
  }
  if (config.omega > 0.0) {
    v.elbo = elbo_estimate(model, kde, variates);
    v.loss -= config.omega * v.elbo;
  }
  return v;
}

}  // namespace

void LossConfig::validate() const {
  if (omega < 0.0 || omega > 1.0)
    throw std::invalid_argument("LossConfig: omega must lie in [0,1]");
  if (!(xi > 0.0)) throw std::invalid_argument("LossConfig: xi must be positive");
  if (elbo_samples < 1) throw std::invalid_argument("LossConfig: elbo_samples must be >= 1");
  if (line_search_probes < 3)
    throw std::invalid_argument("LossConfig: need at least 3 line-search probes");
}

LossValue loss(const Eigen::MatrixXd& particles, const GaussianKDE& kde, const Target& model,
               const LossConfig& config, const ElboVariates& variates) {
  config.validate();
  return loss_terms(particles, kde, model, config, variates, nullptr, nullptr);
}

double loss(const Eigen::MatrixXd& particles, const GaussianKDE& kde, const Target& model,
            const LossConfig& config, std::mt19937_64& rng) {
  const auto v = ElboVariates::draw(config.elbo_samples, static_cast<int>(particles.cols()),
                                    static_cast<int>(particles.rows()), rng);
  return loss(particles, kde, model, config, v).loss;
}

LineSearchResult line_search_alpha(const Eigen::MatrixXd& particles,
                                   const Eigen::MatrixXd& directions, const Target& model,
                                   const LossConfig& config, const ElboVariates& variates,
                                   double baseline_loss) {
  config.validate();
  if (directions.rows() != particles.rows() || directions.cols() != particles.cols())
    throw std::invalid_argument("line_search_alpha: direction shape mismatch");

  struct Probe {
    double alpha;
    LossValue value;
    Eigen::MatrixXd candidate;
    Eigen::MatrixXd grads;
    bool feasible = false;
  };

  int evals_left = config.line_search_probes;
  auto evaluate = [&](double alpha) -> Probe {
    Probe p;
    p.alpha = alpha;
    p.candidate = particles + alpha * directions;
    --evals_left;
    try {
      GaussianKDE kde(p.candidate);
      Eigen::MatrixXd grads;
      p.value = loss_terms(p.candidate, kde, model, config, variates,
                           nullptr, config.omega < 1.0 ? &grads : nullptr);
      p.grads = std::move(grads);
      p.feasible = std::isfinite(p.value.loss);
    } catch (const std::exception&) {
      p.feasible = false;
      p.value.loss = kInf;
    }
    return p;
  };

  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;  // 1/golden ratio
  double a = 0.0, b = config.xi;
  Probe best;
  best.value.loss = kInf;
  Probe smallest;
  smallest.value.loss = kInf;
  smallest.alpha = kInf;
  bool any_feasible = false;

  auto consider = [&](Probe&& p) {
    if (!p.feasible) return;
    any_feasible = true;
    if (p.value.loss < best.value.loss ||
        (p.value.loss == best.value.loss && p.alpha < best.alpha))
      best = p;
    if (p.alpha < smallest.alpha) smallest = std::move(p);
  };

  // the closed endpoint alpha = xi is part of the search interval
  consider(evaluate(config.xi));

  double xc = b - gr * (b - a);
  double xd = a + gr * (b - a);
  Probe pc = evaluate(xc);
  Probe pd = evaluate(xd);
  // infeasible probes rank as +inf, which shrinks the bracket toward 0
  while (evals_left > 0) {
    const double fc = pc.feasible ? pc.value.loss : kInf;
    const double fd = pd.feasible ? pd.value.loss : kInf;
    if (fc < fd) {
      b = xd;
      xd = xc;
      consider(std::move(pd));
      pd = pc;
      xc = b - gr * (b - a);
      pc = evaluate(xc);
    } else {
      a = xc;
      xc = xd;
      consider(std::move(pc));
      pc = pd;
      xd = a + gr * (b - a);
      pd = evaluate(xd);
    }
  }
  consider(std::move(pc));
  consider(std::move(pd));

  if (!any_feasible)
    throw std::runtime_error("line_search_alpha: every probe was infeasible");

  const Probe& chosen = (best.value.loss <= baseline_loss) ? best : smallest;
  LineSearchResult out;
  out.alpha = chosen.alpha;
  out.value = chosen.value;
  out.candidate = chosen.candidate;
  if (chosen.grads.size() > 0) out.grads = chosen.grads;
  return out;
}

std::pair<ParticleSet, Trace> gsvgd_run(const Target& model, ParticleSet init,
                                        const LossConfig& config, std::mt19937_64& rng) {
  config.validate();
  const auto t_start = std::chrono::steady_clock::now();

  // One frozen set of ELBO variates for the whole run: the loss becomes a
  // deterministic function of the particle set, so line-search acceptance
  // translates directly into a non-increasing recorded trace.
  const auto variates = ElboVariates::draw(config.elbo_samples, init.dim(), init.count(), rng);

  Trace trace;
  Eigen::MatrixXd theta = init.particles;
  std::optional<Eigen::MatrixXd> grads;
  std::optional<LossValue> carried;  // loss of theta, carried from the accepted probe

  int iter = init.iteration;
  for (;; ++iter) {
    GaussianKDE kde(theta);
    LossValue lv;
    if (carried) {
      lv = *carried;
    } else {
      Eigen::MatrixXd g;
      lv = loss_terms(theta, kde, model, config, variates, grads ? &*grads : nullptr,
                      grads ? nullptr : &g);
      if (!grads && config.omega < 1.0) grads = std::move(g);
    }

    TraceRow row;
    row.iteration = iter;
    row.loss = lv.loss;
    row.elbo = lv.elbo;
    row.sup_norm = lv.sup_norm;
    row.forward_solves = model.forward_solve_count();
    trace.rows.push_back(row);

    if (lv.loss <= config.epsilon) {
      trace.converged = true;
      trace.stop_reason = "loss <= epsilon";
      break;
    }
    if (iter - init.iteration >= config.max_iters) {
      trace.converged = false;
      trace.stop_reason = "max_iters";
      break;
    }

    if (!grads) grads = batch_grad(model, theta, config.workers);
    const double h = theta.rows() >= 2 ? median_bandwidth(theta) : 1.0;
    const Eigen::MatrixXd phi = stein_direction(theta, *grads, h);

    auto ls = line_search_alpha(theta, phi, model, config, variates, lv.loss);
    if (ls.value.loss > lv.loss) {
      // even the smallest probe worsens the (deterministic) loss: the descent
      // has stalled, and taking the step would break the non-increasing trace
      trace.converged = false;
      trace.stop_reason = "line_search_stall";
      break;
    }
    trace.rows.back().alpha = ls.alpha;
    theta = std::move(ls.candidate);
    grads = std::move(ls.grads);
    carried = ls.value;
    if (config.omega >= 1.0) grads.reset();  // probes skip gradients at omega == 1
  }

  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  ParticleSet out;
  out.particles = std::move(theta);
  out.iteration = iter;
  return {std::move(out), std::move(trace)};
}

std::pair<ParticleSet, Trace> asvgd_run(const Target& model, ParticleSet init, AdamState adam,
                                        int iters, const LossConfig& report_config,
                                        std::mt19937_64& rng) {
  report_config.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const auto variates =
      ElboVariates::draw(report_config.elbo_samples, init.dim(), init.count(), rng);

  Trace trace;
  Eigen::MatrixXd theta = init.particles;

  for (int iter = 0; iter <= iters; ++iter) {
    Eigen::MatrixXd grads = batch_grad(model, theta, report_config.workers);
    GaussianKDE kde(theta);
    // reporting only: the loss never steers A-SVGD
    LossValue lv = loss_terms(theta, kde, model, report_config, variates, &grads, nullptr);

    TraceRow row;
    row.iteration = init.iteration + iter;
    row.loss = lv.loss;
    row.elbo = lv.elbo;
    row.sup_norm = lv.sup_norm;
    row.forward_solves = model.forward_solve_count();
    trace.rows.push_back(row);
    if (iter == iters) break;

    const double h = theta.rows() >= 2 ? median_bandwidth(theta) : 1.0;
    const Eigen::MatrixXd phi = stein_direction(theta, grads, h);
    auto [step, next] = adam_update(adam, phi);
    adam = std::move(next);
    trace.rows.back().alpha = adam.rate;
    theta += step;
  }

  trace.converged = false;
  trace.stop_reason = "iteration budget";
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  ParticleSet out;
  out.particles = std::move(theta);
  out.iteration = init.iteration + iters;
  return {std::move(out), std::move(trace)};
}

}  // namespace steinwave::vi
