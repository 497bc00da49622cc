#include "edvcm/prior.hpp"

#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "edvcm/errors.hpp"

namespace edvcm {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454836;
}

double HyperPrior::log_density(double u) const {
  switch (family) {
    case Family::lognormal: {
      const double r = (u - location) / scale;
      return -std::log(scale) - 0.5 * kLogTwoPi - 0.5 * r * r;
    }
    case Family::half_t: {
      const double psi2 = std::exp(2.0 * u);
      const double s2 = scale * scale;
      const double log_norm = std::log(2.0) + std::lgamma(0.5 * (dof + 1.0)) -
                              std::lgamma(0.5 * dof) -
                              0.5 * std::log(dof * M_PI) - std::log(scale);
      // + u is the Jacobian of psi = exp(u)
      return log_norm + u - 0.5 * (dof + 1.0) * std::log1p(psi2 / (dof * s2));
    }
  }
  throw numeric_error("unsupported hyperprior family");
}

double HyperPrior::grad(double u) const {
  switch (family) {
    case Family::lognormal:
      return -(u - location) / (scale * scale);
    case Family::half_t: {
      const double psi2 = std::exp(2.0 * u);
      const double s2 = scale * scale;
      return 1.0 - (dof + 1.0) * psi2 / (dof * s2 + psi2);
    }
  }
  throw numeric_error("unsupported hyperprior family");
}

double HyperPrior::log_median() const {
  switch (family) {
    case Family::lognormal:
      return location;
    case Family::half_t: {
      boost::math::students_t dist(dof);
      return std::log(scale * boost::math::quantile(dist, 0.75));
    }
  }
  throw numeric_error("unsupported hyperprior family");
}

HyperPrior lognormal_prior(double mu, double sigma) {
  HyperPrior p;
  p.family = HyperPrior::Family::lognormal;
  p.location = mu;
  p.scale = sigma;
  return p;
}

HyperPrior half_t_prior(double dof, double scale) {
  HyperPrior p;
  p.family = HyperPrior::Family::half_t;
  p.dof = dof;
  p.scale = scale;
  return p;
}

PriorPreset simulation_preset() {
  PriorPreset p;
  p.beta.sigma = lognormal_prior(0.5 * std::log(0.3), 0.1);
  p.beta.range_a = lognormal_prior(std::log(0.3), 0.2);
  p.beta.range_b = lognormal_prior(std::log(0.3), 0.2);
  p.lag.sigma = lognormal_prior(0.5 * std::log(0.3), 0.1);
  p.lag.range_a = lognormal_prior(std::log(0.3), 0.2);
  p.lag.range_b = lognormal_prior(std::log(0.3), 0.2);
  p.zeta_sd = 10.0;
  return p;
}

PriorPreset application_preset() {
  PriorPreset p;
  p.beta.sigma = half_t_prior(3.0, 1.0);
  p.beta.range_a = lognormal_prior(0.0, 0.6);
  p.beta.range_b = lognormal_prior(0.0, 0.6);
  // Lag hyperpriors are unspecified for this preset; keep the weakly
  // informative lognormals so lagged fits remain possible.
  p.lag.sigma = half_t_prior(3.0, 1.0);
  p.lag.range_a = lognormal_prior(0.0, 0.6);
  p.lag.range_b = lognormal_prior(0.0, 0.6);
  p.zeta_sd = 10.0;
  return p;
}

double standard_normal_log_density(const Eigen::VectorXd& z) {
  return -0.5 * static_cast<double>(z.size()) * kLogTwoPi - 0.5 * z.squaredNorm();
}

}  // namespace edvcm
