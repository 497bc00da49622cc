#pragma once

#include <Eigen/Dense>

namespace edvcm {

// Pairwise |Δd| and |Δt| over the duration-major triangle of (d, t) cells.
Eigen::MatrixXd triangle_duration_distances(int max_duration);
Eigen::MatrixXd triangle_day_distances(int max_duration);

// Pairwise |Δd| and |Δl| over the row-major duration x lag grid.
Eigen::MatrixXd lag_duration_distances(int max_duration, int max_lag);
Eigen::MatrixXd lag_lag_distances(int max_duration, int max_lag);

// sigma2 * exp(-|d - d'| / phi) * exp(-|t - t'| / tau)
double kernel_value(double sigma2, double phi, double tau, int d, int t, int dp, int tp);

// sigma^2 * exp(-dist_a / range_a) * exp(-dist_b / range_b), elementwise.
Eigen::MatrixXd separable_covariance(const Eigen::MatrixXd& dist_a,
                                     const Eigen::MatrixXd& dist_b, double sigma,
                                     double range_a, double range_b);

// separable_covariance plus relative_jitter * sigma^2 on the diagonal.
Eigen::MatrixXd build_covariance(const Eigen::MatrixXd& dist_a,
                                 const Eigen::MatrixXd& dist_b, double sigma,
                                 double range_a, double range_b,
                                 double relative_jitter = 1e-8);

struct CholeskyFactor {
  Eigen::MatrixXd lower;
  double jitter = 0.0;  // absolute amount added to every diagonal entry
};

// Lower Cholesky with jitter escalation.  Starts at 1e-8 * scale (scale is the
// prior variance sigma^2), multiplies by 10 on failure, and gives up past
// 1e-2 * scale with an error naming the smallest pivot encountered.
CholeskyFactor robust_cholesky(const Eigen::MatrixXd& matrix, double scale);

// Lower-triangle-with-halved-diagonal map used by the factorization
// sensitivity identity dL = L * phi(L^-1 dSigma L^-T).
Eigen::MatrixXd chol_phi(const Eigen::MatrixXd& a);

// g^T dL z for the factor of sigma_mat perturbed by sigma_dot, without
// forming dL: (L^T g)^T phi(L^-1 sigma_dot L^-T) z.
double chol_sensitivity_product(const CholeskyFactor& factor,
                                const Eigen::MatrixXd& sigma_dot,
                                const Eigen::VectorXd& grad, const Eigen::VectorXd& z);

}  // namespace edvcm
