#pragma once

#include <Eigen/Dense>

#include "edvcm/data.hpp"
#include "edvcm/grid.hpp"

namespace edvcm {

struct ParameterSet {
  CoefficientGrid beta;
  LagCoefficientGrid theta;  // max_lag == 0 when the model has no lag terms
  Eigen::VectorXd zeta;
};

ParameterSet make_parameter_set(int max_duration, int max_lag, int covariate_dim);

// beta_{d,t} for exposure-day units, theta_{d,l} for lag-day units, plus
// zeta'Z + log(P) for every unit.  Control units carry no coefficient term.
double unit_linear_predictor(const ExposureUnit& unit, const ParameterSet& params);

// log pi_i = eta_i - logsumexp(eta) within the stratum.  A single-unit
// stratum is degenerate: returns {0} (pi = 1).
Eigen::VectorXd stratum_log_probabilities(const Stratum& stratum,
                                          const ParameterSet& params);

// Multinomial kernel sum_i Y_i log pi_i over all strata; the normalizing
// coefficient is parameter-free and dropped.  Zero-count strata contribute 0.
double conditional_log_likelihood(const AnalyticDataset& data, const ParameterSet& params,
                                  int n_workers = 1);

struct LikelihoodGradient {
  double value = 0.0;
  Eigen::VectorXd d_beta;
  Eigen::VectorXd d_theta;
  Eigen::VectorXd d_zeta;
};

// Score sum_i (Y_i - W_s pi_i) x_i per parameter.  Strata are processed in
// parallel but reduced in stratum order, so results do not depend on
// n_workers.
LikelihoodGradient log_likelihood_gradient(const AnalyticDataset& data,
                                           const ParameterSet& params, int n_workers = 1);

}  // namespace edvcm
