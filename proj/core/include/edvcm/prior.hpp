#pragma once

#include <Eigen/Dense>

namespace edvcm {

// Hyperparameter priors evaluated on the unconstrained scale u = log(psi),
// Jacobian included, so the sampler sees a proper density in u.
struct HyperPrior {
  enum class Family { lognormal, half_t };
  Family family = Family::lognormal;
  double location = 0.0;  // lognormal mu; unused for half-t (centered at 0)
  double scale = 1.0;     // lognormal sigma, or half-t scale
  double dof = 3.0;       // half-t only

  double log_density(double u) const;
  double grad(double u) const;
  double log_median() const;  // u at the prior median of psi
};

HyperPrior lognormal_prior(double mu, double sigma);
HyperPrior half_t_prior(double dof, double scale);

// One Gaussian-process surface: marginal SD plus a lengthscale per axis.
struct GpPriorSpec {
  HyperPrior sigma;
  HyperPrior range_a;  // duration axis
  HyperPrior range_b;  // day axis for beta, lag axis for theta
};

struct PriorPreset {
  GpPriorSpec beta;
  GpPriorSpec lag;
  double zeta_sd = 10.0;
  // Reuse the beta surface's duration lengthscale for the lag surface.
  bool tie_lag_duration_range = false;
};

PriorPreset simulation_preset();
PriorPreset application_preset();

// Standard-normal log density of a vector, gradient is -z.
double standard_normal_log_density(const Eigen::VectorXd& z);

}  // namespace edvcm
