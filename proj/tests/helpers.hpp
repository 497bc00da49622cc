#pragma once

// Shared fixtures: synthetic dataset generation and finite-difference probes.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edvcm/data.hpp"
#include "edvcm/rng.hpp"

namespace edvcm_test {

inline edvcm::ExposureUnit make_unit(const std::string& unit_id, const std::string& stratum_id,
                                     int d, edvcm::UnitRole role, int t, int l, long count,
                                     double person_time = 1.0) {
  edvcm::ExposureUnit u;
  u.unit_id = unit_id;
  u.stratum_id = stratum_id;
  u.duration = d;
  u.role = role;
  u.day_index = t;
  u.lag_index = l;
  u.count = count;
  u.person_time = person_time;
  return u;
}

// One event stratum: d exposure days, max_lag lag days, and the matched
// units for n_control_years control periods.  Counts drawn Poisson.
inline std::vector<edvcm::ExposureUnit> stratum_units(edvcm::Rng& rng,
                                                      const std::string& stratum_id, int d,
                                                      int max_lag, int covariate_dim,
                                                      int n_control_years, double mean_count) {
  std::vector<edvcm::ExposureUnit> units;
  auto push = [&](const std::string& tag, edvcm::UnitRole role, int t, int l) {
    edvcm::ExposureUnit u = make_unit(stratum_id + "_" + tag, stratum_id, d, role, t, l,
                                      rng.poisson(mean_count), rng.uniform(0.5, 2.0));
    u.covariates.resize(covariate_dim);
    for (int k = 0; k < covariate_dim; ++k) u.covariates[k] = rng.normal();
    units.push_back(std::move(u));
  };
  for (int t = 1; t <= d; ++t) push("t" + std::to_string(t), edvcm::UnitRole::exposure_day, t, 0);
  for (int l = 1; l <= max_lag; ++l)
    push("l" + std::to_string(l), edvcm::UnitRole::lag_day, 0, l);
  for (int c = 0; c < n_control_years; ++c) {
    for (int t = 1; t <= d; ++t)
      push("c" + std::to_string(c) + "t" + std::to_string(t),
           edvcm::UnitRole::control_exposure_day, t, 0);
    for (int l = 1; l <= max_lag; ++l)
      push("c" + std::to_string(c) + "l" + std::to_string(l),
           edvcm::UnitRole::control_lag_day, 0, l);
  }
  return units;
}

// Random strata with durations uniform on [1, max_duration].
inline edvcm::AnalyticDataset random_dataset(edvcm::Rng& rng, int max_duration, int n_strata,
                                             int covariate_dim = 0, int max_lag = 0,
                                             double mean_count = 2.0) {
  std::vector<edvcm::ExposureUnit> units;
  for (int s = 0; s < n_strata; ++s) {
    const int d = static_cast<int>(rng.uniform_int(1, max_duration));
    auto block = stratum_units(rng, "s" + std::to_string(s), d, max_lag, covariate_dim, 2,
                               mean_count);
    units.insert(units.end(), block.begin(), block.end());
  }
  return edvcm::validate_dataset(std::move(units));
}

inline double central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                 Eigen::VectorXd x, int i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

inline double relative_error(double got, double want) {
  const double denom = std::max({std::abs(got), std::abs(want), 1e-10});
  return std::abs(got - want) / denom;
}

}  // namespace edvcm_test
