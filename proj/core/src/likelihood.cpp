#include "edvcm/likelihood.hpp"

#include <cmath>
#include <utility>
#include <vector>

#include "edvcm/errors.hpp"
#include "edvcm/threading.hpp"

namespace edvcm {

namespace {

struct StratumTerms {
  double value = 0.0;
  // (flat parameter index, contribution) of the beta/theta score entries
  std::vector<std::pair<int, double>> sparse;
  Eigen::VectorXd zeta;
};

Eigen::VectorXd stratum_predictors(const Stratum& s, const ParameterSet& params) {
  Eigen::VectorXd eta(static_cast<Eigen::Index>(s.units.size()));
  for (std::size_t i = 0; i < s.units.size(); ++i) {
    eta[static_cast<Eigen::Index>(i)] = unit_linear_predictor(s.units[i], params);
  }
  return eta;
}

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

int flat_coefficient_index(const ExposureUnit& u, const ParameterSet& params) {
  if (u.role == UnitRole::exposure_day) {
    return grid_index(u.duration, u.day_index, params.beta.max_duration);
  }
  if (u.role == UnitRole::lag_day) {
    if (params.theta.max_lag <= 0) {
      throw input_error("dataset has lag-day units but the model carries no lag terms");
    }
    return params.beta.size() + params.theta.index(u.duration, u.lag_index);
  }
  return -1;
}

StratumTerms stratum_score(const Stratum& s, const ParameterSet& params,
                           Eigen::Index zeta_dim) {
  StratumTerms out;
  out.zeta = Eigen::VectorXd::Zero(zeta_dim);
  if (s.total_count == 0) return out;
  const Eigen::VectorXd eta = stratum_predictors(s, params);
  const double lse = log_sum_exp(eta);
  const double w = static_cast<double>(s.total_count);
  for (std::size_t i = 0; i < s.units.size(); ++i) {
    const auto& u = s.units[i];
    const double log_pi = eta[static_cast<Eigen::Index>(i)] - lse;
    const double resid = static_cast<double>(u.count) - w * std::exp(log_pi);
    out.value += static_cast<double>(u.count) * log_pi;
    const int idx = flat_coefficient_index(u, params);
    if (idx >= 0) out.sparse.emplace_back(idx, resid);
    if (zeta_dim > 0) out.zeta += resid * u.covariates;
  }
  return out;
}

}  // namespace

ParameterSet make_parameter_set(int max_duration, int max_lag, int covariate_dim) {
  ParameterSet p;
  p.beta.max_duration = max_duration;
  p.beta.values = Eigen::VectorXd::Zero(triangle_size(max_duration));
  p.theta.max_duration = max_lag > 0 ? max_duration : 0;
  p.theta.max_lag = max_lag;
  p.theta.values = Eigen::VectorXd::Zero(max_lag > 0 ? max_duration * max_lag : 0);
  p.zeta = Eigen::VectorXd::Zero(covariate_dim);
  return p;
}

double unit_linear_predictor(const ExposureUnit& unit, const ParameterSet& params) {
  double eta = unit.log_person_time;
  if (params.zeta.size() > 0) {
    if (unit.covariates.size() != params.zeta.size()) {
      throw input_error("unit '" + unit.unit_id + "' covariate length " +
                        std::to_string(unit.covariates.size()) +
                        " does not match zeta length " +
                        std::to_string(params.zeta.size()));
    }
    eta += params.zeta.dot(unit.covariates);
  }
  if (unit.role == UnitRole::exposure_day) {
    eta += params.beta(unit.duration, unit.day_index);
  } else if (unit.role == UnitRole::lag_day) {
    if (params.theta.max_lag <= 0) {
      throw input_error("dataset has lag-day units but the model carries no lag terms");
    }
    eta += params.theta(unit.duration, unit.lag_index);
  }
  return eta;
}

Eigen::VectorXd stratum_log_probabilities(const Stratum& stratum,
                                          const ParameterSet& params) {
  const Eigen::VectorXd eta = stratum_predictors(stratum, params);
  if (eta.size() == 1) return Eigen::VectorXd::Zero(1);
  return eta.array() - log_sum_exp(eta);
}

double conditional_log_likelihood(const AnalyticDataset& data, const ParameterSet& params,
                                  int n_workers) {
  std::vector<double> slot(data.strata.size(), 0.0);
  parallel_for(data.strata.size(), n_workers, [&](std::size_t i) {
    const Stratum& s = data.strata[i];
    if (s.total_count == 0) return;
    const Eigen::VectorXd eta = stratum_predictors(s, params);
    const double lse = log_sum_exp(eta);
    double v = 0.0;
    for (std::size_t j = 0; j < s.units.size(); ++j) {
      v += static_cast<double>(s.units[j].count) *
           (eta[static_cast<Eigen::Index>(j)] - lse);
    }
    slot[i] = v;
  });
  double total = 0.0;
  for (double v : slot) total += v;
  return total;
}

LikelihoodGradient log_likelihood_gradient(const AnalyticDataset& data,
                                           const ParameterSet& params, int n_workers) {
  LikelihoodGradient g;
  g.d_beta = Eigen::VectorXd::Zero(params.beta.values.size());
  g.d_theta = Eigen::VectorXd::Zero(params.theta.values.size());
  g.d_zeta = Eigen::VectorXd::Zero(params.zeta.size());

  std::vector<StratumTerms> slot(data.strata.size());
  parallel_for(data.strata.size(), n_workers, [&](std::size_t i) {
    slot[i] = stratum_score(data.strata[i], params, params.zeta.size());
  });

  const int beta_size = params.beta.size();
  for (const auto& terms : slot) {
    g.value += terms.value;
    for (const auto& [idx, delta] : terms.sparse) {
      if (idx < beta_size) {
        g.d_beta[idx] += delta;
      } else {
        g.d_theta[idx - beta_size] += delta;
      }
    }
    if (g.d_zeta.size() > 0) g.d_zeta += terms.zeta;
  }
  return g;
}

}  // namespace edvcm
