#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edvcm/data.hpp"
#include "edvcm/diagnostics.hpp"
#include "edvcm/hmc.hpp"

namespace edvcm {

// Linear-interpolation (type 7) sample quantile.
double quantile_type7(std::vector<double> values, double p);
double quantile_type7(const Eigen::VectorXd& values, double p);

struct IntervalSummary {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Mean plus the percentile interval at (1-level)/2 and 1-(1-level)/2.
IntervalSummary posterior_mean_ci(const Eigen::VectorXd& draws, double level = 0.95);

enum class Direction { harmful, protective, null_effect };
Direction classify_direction(double rr_lower, double rr_upper);
std::string direction_label(Direction d);

// Cumulative rate ratio draws for duration d.  beta_draws holds the natural
// scale coefficient triangle, one draw per row.  The unweighted form averages
// exp(beta_{d,t}) over t; the covariate form weights each exposed unit of
// duration d by exp(zeta'z_i).
Eigen::VectorXd cumulative_rr_no_covariates(const Eigen::MatrixXd& beta_draws,
                                            int max_duration, int d);
Eigen::VectorXd cumulative_rr_with_covariates(const Eigen::MatrixXd& beta_draws,
                                              const Eigen::MatrixXd& zeta_draws,
                                              int max_duration, int d,
                                              const AnalyticDataset& data);

// Column blocks of the constrained draw matrix, located by name prefix.
Eigen::MatrixXd draws_block(const PosteriorDraws& draws, const std::string& prefix);

// File assembly.  Every emitter starts with the version/config stamp line.
std::string draws_csv_string(const PosteriorDraws& draws, const std::string& config_text);
std::string summary_csv_string(const PosteriorDraws& draws, const std::string& config_text,
                               double level = 0.95);
std::string cumulative_csv_string(const PosteriorDraws& draws, const AnalyticDataset* data,
                                  const std::string& config_text, double level = 0.95);
std::string diagnostics_csv_string(const PosteriorDraws& draws,
                                   const std::vector<ParameterDiagnostics>& diagnostics,
                                   const std::string& config_text);

}  // namespace edvcm
