#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edvcm/data.hpp"
#include "edvcm/kernel.hpp"
#include "edvcm/likelihood.hpp"
#include "edvcm/prior.hpp"
#include "edvcm/rng.hpp"

namespace edvcm {

// Joint log posterior over an unconstrained vector q laid out as
//   [z_beta | z_theta | zeta | log-hyperparameters].
// Under the GP prior the coefficient blocks are non-centered: beta = L_beta z
// with L_beta the Cholesky factor of the product-kernel covariance, so the
// log-hyperparameter gradient carries a factorization-sensitivity term.
// The independent-unit prior drops the hyperparameters entirely and places
// iid N(0,1) on each coefficient.
class PosteriorModel {
 public:
  enum class PriorKind { gp, independent_unit };

  PosteriorModel(const AnalyticDataset* data, PriorPreset priors,
                 PriorKind kind = PriorKind::gp);

  int dim() const { return dim_; }
  PriorKind kind() const { return kind_; }
  int lag_count() const { return max_lag_; }

  struct Eval {
    double value = 0.0;
    Eigen::VectorXd grad;
    bool finite = false;
  };
  Eval operator()(const Eigen::VectorXd& q) const;

  // Natural-scale coefficient set (beta = L z under the GP prior).
  ParameterSet parameters_at(const Eigen::VectorXd& q) const;

  // Constrained vector matching parameter_names(): beta, theta, zeta values
  // followed by positive-scale hyperparameters.
  Eigen::VectorXd constrain(const Eigen::VectorXd& q) const;
  const std::vector<std::string>& parameter_names() const { return names_; }

  // z and zeta entries uniform(-0.5, 0.5); hyperparameters at prior medians.
  Eigen::VectorXd initial_position(Rng& rng) const;

 private:
  struct Transform {
    ParameterSet params;
    CholeskyFactor l_beta;
    CholeskyFactor l_theta;
    std::vector<double> hyper;  // natural scale, slot order
  };
  Transform transform(const Eigen::VectorXd& q) const;

  const AnalyticDataset* data_;
  PriorPreset priors_;
  PriorKind kind_;
  int max_duration_ = 1;
  int max_lag_ = 0;
  int beta_size_ = 0;
  int theta_size_ = 0;
  int zeta_size_ = 0;
  int n_hyper_ = 0;
  int dim_ = 0;
  // hyper slot indices within the hyper block; -1 when absent
  int slot_sigma_beta_ = -1, slot_phi_ = -1, slot_tau_ = -1;
  int slot_sigma_theta_ = -1, slot_gamma_ = -1, slot_eta_ = -1;
  std::vector<HyperPrior> hyper_priors_;
  std::vector<std::string> names_;
  Eigen::MatrixXd beta_dist_d_, beta_dist_t_;
  Eigen::MatrixXd theta_dist_d_, theta_dist_l_;
};

}  // namespace edvcm
