#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edvcm/posterior.hpp"

namespace edvcm {

struct SamplerConfig {
  int n_chains = 4;
  int n_warmup = 1000;
  int n_samples = 1000;
  double target_accept = 0.8;
  int max_leapfrog_steps = 1024;
  std::uint64_t seed = 0;
  int n_workers = 1;  // chain-level parallelism; draws identical for any value
};

struct ChainStats {
  int n_divergent = 0;         // post-warmup
  double mean_accept = 0.0;    // post-warmup mean acceptance probability
  double step_size = 0.0;
};

struct PosteriorDraws {
  std::vector<std::string> names;
  Eigen::MatrixXd constrained;    // (n_chains * n_samples) x dim
  Eigen::MatrixXd unconstrained;  // same shape
  std::vector<int> chain_index;   // per row
  int n_chains = 0;
  int n_samples = 0;
  std::vector<ChainStats> stats;

  int parameter_index(const std::string& name) const;
  Eigen::VectorXd parameter_draws(const std::string& name) const;
  int total_divergences() const;
};

// One leapfrog trajectory under a diagonal mass matrix (inv_mass given).
// Exposed for the integrator's reversibility and energy checks.
struct GradientTarget {
  std::function<PosteriorModel::Eval(const Eigen::VectorXd&)> eval;
};

struct LeapfrogState {
  Eigen::VectorXd position;
  Eigen::VectorXd momentum;
  double log_density = 0.0;
  Eigen::VectorXd grad;
  bool finite = false;
};

LeapfrogState leapfrog(const GradientTarget& target, Eigen::VectorXd position,
                       Eigen::VectorXd momentum, const Eigen::VectorXd& inv_mass,
                       double step_size, int n_steps);

// Static-trajectory HMC with jittered step counts, dual-averaging step-size
// adaptation and diagonal mass estimation during warmup.
PosteriorDraws run_hmc(const PosteriorModel& model, const SamplerConfig& config);

// Generic-target variant used by the sampler smoke tests.
PosteriorDraws run_hmc_target(const GradientTarget& target, int dim,
                              const std::vector<std::string>& names,
                              const std::function<Eigen::VectorXd(Rng&)>& init,
                              const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>&
                                  constrain,
                              const SamplerConfig& config);

}  // namespace edvcm
