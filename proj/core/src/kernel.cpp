#include "edvcm/kernel.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "edvcm/errors.hpp"
#include "edvcm/grid.hpp"

namespace edvcm {

namespace {

Eigen::MatrixXd pairwise_abs(const std::vector<int>& coords) {
  const auto n = static_cast<Eigen::Index>(coords.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out(i, j) = std::abs(coords[static_cast<std::size_t>(i)] -
                           coords[static_cast<std::size_t>(j)]);
    }
  }
  return out;
}

std::vector<int> triangle_coord(int max_duration, bool duration_axis) {
  std::vector<int> c;
  c.reserve(static_cast<std::size_t>(triangle_size(max_duration)));
  for (int d = 1; d <= max_duration; ++d) {
    for (int t = 1; t <= d; ++t) c.push_back(duration_axis ? d : t);
  }
  return c;
}

std::vector<int> lag_coord(int max_duration, int max_lag, bool duration_axis) {
  std::vector<int> c;
  c.reserve(static_cast<std::size_t>(max_duration) * static_cast<std::size_t>(max_lag));
  for (int d = 1; d <= max_duration; ++d) {
    for (int l = 1; l <= max_lag; ++l) c.push_back(duration_axis ? d : l);
  }
  return c;
}

// Plain unpivoted Cholesky so failures report the offending pivot.
bool try_cholesky(const Eigen::MatrixXd& a, Eigen::MatrixXd& lower, double& min_pivot) {
  const Eigen::Index n = a.rows();
  lower = Eigen::MatrixXd::Zero(n, n);
  min_pivot = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < n; ++j) {
    double diag = a(j, j) - lower.row(j).head(j).squaredNorm();
    if (diag < min_pivot) min_pivot = diag;
    if (!(diag > 0.0) || !std::isfinite(diag)) return false;
    const double ljj = std::sqrt(diag);
    lower(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double v = a(i, j) - lower.row(i).head(j).dot(lower.row(j).head(j));
      lower(i, j) = v / ljj;
    }
  }
  return true;
}

}  // namespace

Eigen::MatrixXd triangle_duration_distances(int max_duration) {
  return pairwise_abs(triangle_coord(max_duration, true));
}

Eigen::MatrixXd triangle_day_distances(int max_duration) {
  return pairwise_abs(triangle_coord(max_duration, false));
}

Eigen::MatrixXd lag_duration_distances(int max_duration, int max_lag) {
  return pairwise_abs(lag_coord(max_duration, max_lag, true));
}

Eigen::MatrixXd lag_lag_distances(int max_duration, int max_lag) {
  return pairwise_abs(lag_coord(max_duration, max_lag, false));
}

double kernel_value(double sigma2, double phi, double tau, int d, int t, int dp, int tp) {
  if (!(sigma2 > 0.0) || !(phi > 0.0) || !(tau > 0.0)) {
    throw numeric_error("covariance kernel requires positive sigma2 and lengthscales");
  }
  return sigma2 * std::exp(-std::abs(d - dp) / phi) * std::exp(-std::abs(t - tp) / tau);
}

Eigen::MatrixXd separable_covariance(const Eigen::MatrixXd& dist_a,
                                     const Eigen::MatrixXd& dist_b, double sigma,
                                     double range_a, double range_b) {
  if (!(sigma > 0.0) || !(range_a > 0.0) || !(range_b > 0.0)) {
    throw numeric_error("covariance kernel requires positive sigma and ranges");
  }
  return (sigma * sigma) *
         ((-dist_a / range_a).array().exp() * (-dist_b / range_b).array().exp()).matrix();
}

Eigen::MatrixXd build_covariance(const Eigen::MatrixXd& dist_a,
                                 const Eigen::MatrixXd& dist_b, double sigma,
                                 double range_a, double range_b, double relative_jitter) {
  Eigen::MatrixXd out = separable_covariance(dist_a, dist_b, sigma, range_a, range_b);
  out.diagonal().array() += relative_jitter * sigma * sigma;
  return out;
}

CholeskyFactor robust_cholesky(const Eigen::MatrixXd& matrix, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale) || !matrix.allFinite()) {
    throw numeric_error("covariance matrix is degenerate or has non-finite entries");
  }
  CholeskyFactor f;
  double min_pivot = 0.0;
  if (try_cholesky(matrix, f.lower, min_pivot)) return f;

  const double cap = 1e-2 * scale;
  double worst_pivot = min_pivot;
  double jitter = 1e-8 * scale;
  // 1e-8*scale up to the 1e-2*scale cap: seven escalations, counted so an
  // underflowing scale cannot stall the loop.
  for (int i = 0; i < 7; ++i, jitter *= 10.0) {
    Eigen::MatrixXd shifted = matrix;
    shifted.diagonal().array() += jitter;
    if (try_cholesky(shifted, f.lower, min_pivot)) {
      f.jitter = jitter;
      return f;
    }
    worst_pivot = min_pivot;
  }
  throw numeric_error("covariance matrix not positive definite after jitter up to " +
                      std::to_string(cap) + "; smallest pivot " +
                      std::to_string(worst_pivot));
}

Eigen::MatrixXd chol_phi(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd out = a.triangularView<Eigen::Lower>();
  out.diagonal() *= 0.5;
  return out;
}

double chol_sensitivity_product(const CholeskyFactor& factor,
                                const Eigen::MatrixXd& sigma_dot,
                                const Eigen::VectorXd& grad, const Eigen::VectorXd& z) {
  const auto lower = factor.lower.triangularView<Eigen::Lower>();
  Eigen::MatrixXd inner = lower.solve(sigma_dot);
  inner = lower.solve(inner.transpose()).transpose();  // L^-1 sigma_dot L^-T
  const Eigen::VectorXd u = factor.lower.transpose() * grad;
  return u.dot(chol_phi(inner) * z);
}

}  // namespace edvcm
