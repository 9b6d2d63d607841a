#include "steinwave/mcmc.hpp"

#include <cmath>
#include <stdexcept>

namespace steinwave::mcmc {

Chain rwm_sample(const vi::Target& model, int n_samples, const Eigen::VectorXd& init,
                 double proposal_scale, std::mt19937_64& rng, bool adapt) {
  if (n_samples < 1) throw std::invalid_argument("rwm_sample: need at least one sample");
  if (!(proposal_scale > 0.0))
    throw std::invalid_argument("rwm_sample: proposal scale must be positive");

  double lp = model.log_posterior(init);
  if (!std::isfinite(lp))
    throw std::invalid_argument("rwm_sample: infeasible initial state (log posterior = -inf)");

  const auto d = init.size();
  Chain chain;
  chain.samples.resize(n_samples, d);
  chain.log_posterior.resize(n_samples);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Eigen::VectorXd current = init;
  Eigen::VectorXd proposal(d);
  double scale = proposal_scale;

  const int adapt_until = adapt ? n_samples / 5 : 0;
  const int window = 50;
  int window_accepts = 0;

  for (int s = 0; s < n_samples; ++s) {
    for (Eigen::Index k = 0; k < d; ++k) proposal[k] = current[k] + scale * normal(rng);
    const double lp_prop = model.log_posterior(proposal);
    const double log_u = std::log(unif(rng));
    if (lp_prop - lp >= log_u) {
      current = proposal;
      lp = lp_prop;
      ++chain.accepted;
      ++window_accepts;
    }
    chain.samples.row(s) = current.transpose();
    chain.log_posterior[s] = lp;

    if (s < adapt_until && (s + 1) % window == 0) {
      const double rate = static_cast<double>(window_accepts) / window;
      if (rate < 0.25)
        scale /= 1.1;
      else if (rate > 0.40)
        scale *= 1.1;
      window_accepts = 0;
    }
  }
  chain.proposal_scale = scale;
  return chain;
}

}  // namespace steinwave::mcmc
