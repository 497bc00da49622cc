#pragma once

#include <Eigen/Dense>
#include <vector>

#include "edvcm/data.hpp"

namespace edvcm {

// Per-coordinate identifiability state of the conditional MLE.
enum class GlmFlag {
  ok,
  separated_low,   // no events on this exposure day anywhere: MLE -> -inf
  separated_high,  // all events on this exposure day: MLE -> +inf
  non_identifiable
};

struct GlmFit {
  int duration = 0;
  Eigen::VectorXd estimate;   // beta_{d,1..d}
  Eigen::VectorXd std_error;
  Eigen::VectorXd ci_lower;   // Wald 95%
  Eigen::VectorXd ci_upper;
  std::vector<GlmFlag> flags;
  bool converged = false;
  int iterations = 0;
};

// Newton-Raphson MLE of the duration-d exposure coefficients under the
// conditional multinomial likelihood, restricted to strata of that duration.
// Standard errors come from the inverse observed information.  Covariates
// are not supported by this comparator.
GlmFit fit_frequentist_glm(const AnalyticDataset& data, int duration);

}  // namespace edvcm
