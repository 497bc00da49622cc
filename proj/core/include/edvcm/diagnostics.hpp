#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edvcm/hmc.hpp"

namespace edvcm {

// chains: n_draws x n_chains, one column per chain, one parameter.
// Both statistics follow the rank-normalized split formulation: chains are
// split in half, pooled values replaced by normal scores of their average
// ranks, then the classical estimators applied.

// NaN with a single chain; +inf when chains are stuck at distinct constants;
// 1.0 when every draw is identical.
double split_rhat(const Eigen::MatrixXd& chains);

// Bulk effective sample size via chain-averaged autocovariance with Geyer's
// initial monotone sequence truncation.  NaN for constant draws.
double bulk_ess(const Eigen::MatrixXd& chains);

struct ParameterDiagnostics {
  std::string name;
  double rhat = 0.0;
  double ess_bulk = 0.0;
};

std::vector<ParameterDiagnostics> compute_diagnostics(const PosteriorDraws& draws);

}  // namespace edvcm
