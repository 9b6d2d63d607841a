#pragma once

#include <Eigen/Dense>

#include <random>

#include "steinwave/target.hpp"

namespace steinwave::mcmc {

struct Chain {
  Eigen::MatrixXd samples;        // n x d
  Eigen::VectorXd log_posterior;  // per sample
  long accepted = 0;
  double proposal_scale = 0.0;    // scale in effect after adaptation

  double acceptance_rate() const {
    return samples.rows() > 0 ? static_cast<double>(accepted) / static_cast<double>(samples.rows())
                              : 0.0;
  }
};

/// Random-walk Metropolis with isotropic Gaussian proposals. When `adapt` is
/// set, the proposal scale is tuned toward 25-40% acceptance during the first
/// 20% of the chain and frozen afterwards, so the sampling phase keeps
/// detailed balance.
Chain rwm_sample(const vi::Target& model, int n_samples, const Eigen::VectorXd& init,
                 double proposal_scale, std::mt19937_64& rng, bool adapt = true);

}  // namespace steinwave::mcmc
