#include "edvcm/posterior.hpp"

#include <cmath>
#include <limits>

#include "edvcm/errors.hpp"
#include "edvcm/grid.hpp"

namespace edvcm {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454836;

double centered_normal_log_density(const Eigen::VectorXd& x, double sd) {
  const auto n = static_cast<double>(x.size());
  return -0.5 * n * kLogTwoPi - n * std::log(sd) - 0.5 * x.squaredNorm() / (sd * sd);
}
}  // namespace

PosteriorModel::PosteriorModel(const AnalyticDataset* data, PriorPreset priors,
                               PriorKind kind)
    : data_(data), priors_(priors), kind_(kind) {
  if (data_ == nullptr) throw input_error("posterior model requires a dataset");
  max_duration_ = data_->max_duration;
  max_lag_ = data_->max_lag;
  zeta_size_ = data_->covariate_dim;
  beta_size_ = triangle_size(max_duration_);
  theta_size_ = max_lag_ > 0 ? max_duration_ * max_lag_ : 0;

  for (int d = 1; d <= max_duration_; ++d) {
    for (int t = 1; t <= d; ++t) {
      names_.push_back("beta[" + std::to_string(d) + "," + std::to_string(t) + "]");
    }
  }
  for (int d = 1; d <= max_duration_ && theta_size_ > 0; ++d) {
    for (int l = 1; l <= max_lag_; ++l) {
      names_.push_back("theta[" + std::to_string(d) + "," + std::to_string(l) + "]");
    }
  }
  for (int k = 1; k <= zeta_size_; ++k) names_.push_back("zeta[" + std::to_string(k) + "]");

  if (kind_ == PriorKind::gp) {
    beta_dist_d_ = triangle_duration_distances(max_duration_);
    beta_dist_t_ = triangle_day_distances(max_duration_);
    slot_sigma_beta_ = 0;
    slot_phi_ = 1;
    slot_tau_ = 2;
    hyper_priors_ = {priors_.beta.sigma, priors_.beta.range_a, priors_.beta.range_b};
    names_.push_back("sigma_beta");
    names_.push_back("phi");
    names_.push_back("tau");
    if (theta_size_ > 0) {
      theta_dist_d_ = lag_duration_distances(max_duration_, max_lag_);
      theta_dist_l_ = lag_lag_distances(max_duration_, max_lag_);
      slot_sigma_theta_ = static_cast<int>(hyper_priors_.size());
      hyper_priors_.push_back(priors_.lag.sigma);
      names_.push_back("sigma_theta");
      if (!priors_.tie_lag_duration_range) {
        slot_gamma_ = static_cast<int>(hyper_priors_.size());
        hyper_priors_.push_back(priors_.lag.range_a);
        names_.push_back("gamma");
      }
      slot_eta_ = static_cast<int>(hyper_priors_.size());
      hyper_priors_.push_back(priors_.lag.range_b);
      names_.push_back("eta");
    }
    n_hyper_ = static_cast<int>(hyper_priors_.size());
  }
  dim_ = beta_size_ + theta_size_ + zeta_size_ + n_hyper_;
}

PosteriorModel::Transform PosteriorModel::transform(const Eigen::VectorXd& q) const {
  Transform t;
  t.params = make_parameter_set(max_duration_, max_lag_, zeta_size_);
  const Eigen::VectorXd z_beta = q.segment(0, beta_size_);
  const Eigen::VectorXd z_theta = q.segment(beta_size_, theta_size_);
  t.params.zeta = q.segment(beta_size_ + theta_size_, zeta_size_);

  if (kind_ == PriorKind::independent_unit) {
    t.params.beta.values = z_beta;
    t.params.theta.values = z_theta;
    return t;
  }

  const Eigen::VectorXd u = q.tail(n_hyper_);
  t.hyper.resize(static_cast<std::size_t>(n_hyper_));
  for (int i = 0; i < n_hyper_; ++i) t.hyper[static_cast<std::size_t>(i)] = std::exp(u[i]);

  const double sigma_b = t.hyper[static_cast<std::size_t>(slot_sigma_beta_)];
  const double phi = t.hyper[static_cast<std::size_t>(slot_phi_)];
  const double tau = t.hyper[static_cast<std::size_t>(slot_tau_)];
  Eigen::MatrixXd sigma_mat = build_covariance(beta_dist_d_, beta_dist_t_, sigma_b, phi, tau);
  t.l_beta = robust_cholesky(sigma_mat, sigma_b * sigma_b);
  t.params.beta.values = t.l_beta.lower * z_beta;

  if (theta_size_ > 0) {
    const double sigma_t = t.hyper[static_cast<std::size_t>(slot_sigma_theta_)];
    const double gamma =
        priors_.tie_lag_duration_range ? phi : t.hyper[static_cast<std::size_t>(slot_gamma_)];
    const double eta = t.hyper[static_cast<std::size_t>(slot_eta_)];
    Eigen::MatrixXd lag_mat =
        build_covariance(theta_dist_d_, theta_dist_l_, sigma_t, gamma, eta);
    t.l_theta = robust_cholesky(lag_mat, sigma_t * sigma_t);
    t.params.theta.values = t.l_theta.lower * z_theta;
  }
  return t;
}

PosteriorModel::Eval PosteriorModel::operator()(const Eigen::VectorXd& q) const {
  Eval out;
  out.grad = Eigen::VectorXd::Zero(dim_);
  out.value = -std::numeric_limits<double>::infinity();
  if (q.size() != dim_ || !q.allFinite()) return out;

  try {
    const Transform t = transform(q);
    const LikelihoodGradient lik = log_likelihood_gradient(*data_, t.params);

    const Eigen::VectorXd z_beta = q.segment(0, beta_size_);
    const Eigen::VectorXd z_theta = q.segment(beta_size_, theta_size_);

    double value = lik.value + standard_normal_log_density(z_beta);
    if (theta_size_ > 0) value += standard_normal_log_density(z_theta);
    if (zeta_size_ > 0) value += centered_normal_log_density(t.params.zeta, priors_.zeta_sd);

    if (kind_ == PriorKind::independent_unit) {
      out.grad.segment(0, beta_size_) = lik.d_beta - z_beta;
      if (theta_size_ > 0) {
        out.grad.segment(beta_size_, theta_size_) = lik.d_theta - z_theta;
      }
    } else {
      out.grad.segment(0, beta_size_) =
          t.l_beta.lower.transpose() * lik.d_beta - z_beta;
      if (theta_size_ > 0) {
        out.grad.segment(beta_size_, theta_size_) =
            t.l_theta.lower.transpose() * lik.d_theta - z_theta;
      }
      const Eigen::VectorXd u = q.tail(n_hyper_);
      Eigen::VectorXd hyper_grad(n_hyper_);
      for (int i = 0; i < n_hyper_; ++i) {
        value += hyper_priors_[static_cast<std::size_t>(i)].log_density(u[i]);
        hyper_grad[i] = hyper_priors_[static_cast<std::size_t>(i)].grad(u[i]);
      }
      // d(beta)/d(log sigma) = beta itself, so that slot needs no solve
      hyper_grad[slot_sigma_beta_] += lik.d_beta.dot(t.params.beta.values);
      const double phi = t.hyper[static_cast<std::size_t>(slot_phi_)];
      const double tau = t.hyper[static_cast<std::size_t>(slot_tau_)];
      const Eigen::MatrixXd sigma_total = t.l_beta.lower * t.l_beta.lower.transpose();
      hyper_grad[slot_phi_] += chol_sensitivity_product(
          t.l_beta, sigma_total.cwiseProduct(beta_dist_d_) / phi, lik.d_beta, z_beta);
      hyper_grad[slot_tau_] += chol_sensitivity_product(
          t.l_beta, sigma_total.cwiseProduct(beta_dist_t_) / tau, lik.d_beta, z_beta);
      if (theta_size_ > 0) {
        hyper_grad[slot_sigma_theta_] += lik.d_theta.dot(t.params.theta.values);
        const double gamma = priors_.tie_lag_duration_range
                                 ? phi
                                 : t.hyper[static_cast<std::size_t>(slot_gamma_)];
        const double eta = t.hyper[static_cast<std::size_t>(slot_eta_)];
        const Eigen::MatrixXd lag_total = t.l_theta.lower * t.l_theta.lower.transpose();
        const double gamma_term = chol_sensitivity_product(
            t.l_theta, lag_total.cwiseProduct(theta_dist_d_) / gamma, lik.d_theta, z_theta);
        if (priors_.tie_lag_duration_range) {
          hyper_grad[slot_phi_] += gamma_term;
        } else {
          hyper_grad[slot_gamma_] += gamma_term;
        }
        hyper_grad[slot_eta_] += chol_sensitivity_product(
            t.l_theta, lag_total.cwiseProduct(theta_dist_l_) / eta, lik.d_theta, z_theta);
      }
      out.grad.tail(n_hyper_) = hyper_grad;
    }
    if (zeta_size_ > 0) {
      out.grad.segment(beta_size_ + theta_size_, zeta_size_) =
          lik.d_zeta - t.params.zeta / (priors_.zeta_sd * priors_.zeta_sd);
    }
    out.value = value;
  } catch (const numeric_error&) {
    return out;  // treated as a divergent point
  }
  out.finite = std::isfinite(out.value) && out.grad.allFinite();
  if (!out.finite) out.value = -std::numeric_limits<double>::infinity();
  return out;
}

ParameterSet PosteriorModel::parameters_at(const Eigen::VectorXd& q) const {
  return transform(q).params;
}

Eigen::VectorXd PosteriorModel::constrain(const Eigen::VectorXd& q) const {
  const Transform t = transform(q);
  Eigen::VectorXd out(dim_);
  out.segment(0, beta_size_) = t.params.beta.values;
  out.segment(beta_size_, theta_size_) = t.params.theta.values;
  out.segment(beta_size_ + theta_size_, zeta_size_) = t.params.zeta;
  for (int i = 0; i < n_hyper_; ++i) {
    out[beta_size_ + theta_size_ + zeta_size_ + i] = t.hyper[static_cast<std::size_t>(i)];
  }
  return out;
}

Eigen::VectorXd PosteriorModel::initial_position(Rng& rng) const {
  Eigen::VectorXd q(dim_);
  const int free_block = beta_size_ + theta_size_ + zeta_size_;
  for (int i = 0; i < free_block; ++i) q[i] = rng.uniform(-0.5, 0.5);
  for (int i = 0; i < n_hyper_; ++i) {
    q[free_block + i] = hyper_priors_[static_cast<std::size_t>(i)].log_median();
  }
  return q;
}

}  // namespace edvcm
