#include "edvcm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

namespace edvcm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// First and last floor(n/2) rows as separate columns (middle row dropped when
// n is odd).
Eigen::MatrixXd split_chains(const Eigen::MatrixXd& chains) {
  const Eigen::Index n = chains.rows();
  const Eigen::Index c = chains.cols();
  const Eigen::Index h = n / 2;
  Eigen::MatrixXd out(h, 2 * c);
  for (Eigen::Index j = 0; j < c; ++j) {
    out.col(2 * j) = chains.col(j).head(h);
    out.col(2 * j + 1) = chains.col(j).tail(h);
  }
  return out;
}

// Average ranks of the pooled values mapped through the normal quantile
// function: z = Phi^-1((r - 3/8) / (S + 1/4)).
Eigen::MatrixXd rank_normalize(const Eigen::MatrixXd& m) {
  const Eigen::Index total = m.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const double* flat = m.data();
  std::stable_sort(order.begin(), order.end(),
                   [flat](Eigen::Index a, Eigen::Index b) { return flat[a] < flat[b]; });

  Eigen::VectorXd rank(total);
  Eigen::Index i = 0;
  while (i < total) {
    Eigen::Index j = i;
    while (j + 1 < total && flat[order[static_cast<std::size_t>(j + 1)]] ==
                                flat[order[static_cast<std::size_t>(i)]]) {
      ++j;
    }
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) {
      rank[order[static_cast<std::size_t>(k)]] = avg;
    }
    i = j + 1;
  }

  const boost::math::normal dist;
  const double denom = static_cast<double>(total) + 0.25;
  Eigen::MatrixXd out(m.rows(), m.cols());
  double* out_flat = out.data();
  for (Eigen::Index k = 0; k < total; ++k) {
    out_flat[k] = boost::math::quantile(dist, (rank[k] - 0.375) / denom);
  }
  return out;
}

double classic_rhat(const Eigen::MatrixXd& m) {
  const double n = static_cast<double>(m.rows());
  const Eigen::Index c = m.cols();
  if (m.rows() < 2 || c < 2) return kNaN;
  Eigen::VectorXd mean(c), var(c);
  for (Eigen::Index j = 0; j < c; ++j) {
    mean[j] = m.col(j).mean();
    var[j] = (m.col(j).array() - mean[j]).square().sum() / (n - 1.0);
  }
  const double grand = mean.mean();
  const double b_over_n = (mean.array() - grand).square().sum() /
                          static_cast<double>(c - 1);  // B/n = var of chain means
  const double w = var.mean();
  if (w <= 0.0) {
    return b_over_n <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  const double var_plus = (n - 1.0) / n * w + b_over_n;
  return std::sqrt(var_plus / w);
}

Eigen::VectorXd mean_autocovariance(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  const Eigen::Index c = m.cols();
  Eigen::VectorXd acov = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < c; ++j) {
    const Eigen::VectorXd x = m.col(j).array() - m.col(j).mean();
    for (Eigen::Index t = 0; t < n; ++t) {
      double s = 0.0;
      for (Eigen::Index i = 0; i + t < n; ++i) s += x[i] * x[i + t];
      acov[t] += s / static_cast<double>(n);
    }
  }
  return acov / static_cast<double>(c);
}

double classic_ess(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  const Eigen::Index c = m.cols();
  if (n < 4 || c < 1) return kNaN;

  const Eigen::VectorXd acov = mean_autocovariance(m);
  const double nn = static_cast<double>(n);
  const double mean_var = acov[0] * nn / (nn - 1.0);
  if (!(mean_var > 0.0)) return kNaN;
  double var_plus = mean_var * (nn - 1.0) / nn;
  if (c > 1) {
    Eigen::VectorXd mean(c);
    for (Eigen::Index j = 0; j < c; ++j) mean[j] = m.col(j).mean();
    const double grand = mean.mean();
    var_plus += (mean.array() - grand).square().sum() / static_cast<double>(c - 1);
  }

  Eigen::VectorXd rho = Eigen::VectorXd::Zero(n);
  double rho_even = 1.0;
  rho[0] = rho_even;
  double rho_odd = 1.0 - (mean_var - acov[1]) / var_plus;
  rho[1] = rho_odd;
  Eigen::Index s = 1;
  while (s < n - 4 && rho_even + rho_odd > 0.0) {
    rho_even = 1.0 - (mean_var - acov[s + 1]) / var_plus;
    rho_odd = 1.0 - (mean_var - acov[s + 2]) / var_plus;
    if (rho_even + rho_odd >= 0.0) {
      rho[s + 1] = rho_even;
      rho[s + 2] = rho_odd;
    }
    s += 2;
  }
  const Eigen::Index max_s = s;
  if (rho_even > 0.0) rho[max_s + 1] = rho_even;

  // Geyer initial monotone sequence: cap each pair sum by its predecessor.
  for (Eigen::Index k = 1; k + 3 <= max_s; k += 2) {
    if (rho[k + 1] + rho[k + 2] > rho[k - 1] + rho[k]) {
      rho[k + 1] = 0.5 * (rho[k - 1] + rho[k]);
      rho[k + 2] = rho[k + 1];
    }
  }

  const double total = static_cast<double>(n) * static_cast<double>(c);
  const double tau = -1.0 + 2.0 * rho.head(max_s).sum() + rho[max_s + 1];
  if (!(tau > 0.0)) return total;
  return std::min(total / tau, total * std::log10(total));
}

}  // namespace

double split_rhat(const Eigen::MatrixXd& chains) {
  if (chains.cols() < 2) return kNaN;
  if (chains.rows() < 4) return kNaN;
  return classic_rhat(rank_normalize(split_chains(chains)));
}

double bulk_ess(const Eigen::MatrixXd& chains) {
  if (chains.rows() < 8 || chains.cols() < 1) return kNaN;
  return classic_ess(rank_normalize(split_chains(chains)));
}

std::vector<ParameterDiagnostics> compute_diagnostics(const PosteriorDraws& draws) {
  std::vector<ParameterDiagnostics> out;
  const Eigen::Index dim = draws.constrained.cols();
  out.reserve(static_cast<std::size_t>(dim));
  for (Eigen::Index p = 0; p < dim; ++p) {
    Eigen::MatrixXd chains(draws.n_samples, draws.n_chains);
    for (int c = 0; c < draws.n_chains; ++c) {
      chains.col(c) = draws.constrained.col(p).segment(
          static_cast<Eigen::Index>(c) * draws.n_samples, draws.n_samples);
    }
    ParameterDiagnostics d;
    d.name = draws.names[static_cast<std::size_t>(p)];
    d.rhat = split_rhat(chains);
    d.ess_bulk = bulk_ess(chains);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace edvcm
