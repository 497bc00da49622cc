#include "edvcm/simulate.hpp"

#include <cmath>
#include <string>

#include "edvcm/errors.hpp"
#include "edvcm/rng.hpp"

namespace edvcm {

namespace {

ExposureUnit make_unit(const std::string& stratum_id, const std::string& suffix,
                       int duration, int day_index, int lag_index, UnitRole role,
                       double person_time) {
  ExposureUnit u;
  u.unit_id = stratum_id + "_" + suffix;
  u.stratum_id = stratum_id;
  u.duration = duration;
  u.day_index = day_index;
  u.lag_index = lag_index;
  u.role = role;
  u.person_time = person_time;
  return u;
}

// One event period (exposure days then lag days) plus n_control_years copies.
std::vector<ExposureUnit> stratum_units(const std::string& stratum_id, int duration,
                                        const LayoutSpec& layout) {
  std::vector<ExposureUnit> units;
  units.reserve(static_cast<std::size_t>((1 + layout.n_control_years) *
                                         (duration + layout.lag_days)));
  for (int t = 1; t <= duration; ++t) {
    units.push_back(make_unit(stratum_id, "t" + std::to_string(t), duration, t, 0,
                              UnitRole::exposure_day, layout.person_time));
  }
  for (int l = 1; l <= layout.lag_days; ++l) {
    units.push_back(make_unit(stratum_id, "l" + std::to_string(l), duration, 0, l,
                              UnitRole::lag_day, layout.person_time));
  }
  for (int c = 1; c <= layout.n_control_years; ++c) {
    for (int t = 1; t <= duration; ++t) {
      units.push_back(make_unit(stratum_id, "c" + std::to_string(c) + "t" + std::to_string(t),
                                duration, t, 0, UnitRole::control_exposure_day,
                                layout.person_time));
    }
    for (int l = 1; l <= layout.lag_days; ++l) {
      units.push_back(make_unit(stratum_id, "c" + std::to_string(c) + "l" + std::to_string(l),
                                duration, 0, l, UnitRole::control_lag_day,
                                layout.person_time));
    }
  }
  return units;
}

}  // namespace

std::vector<long> geometric_event_counts(int max_duration, long first, double ratio) {
  if (max_duration < 1 || first < 1 || !(ratio > 0.0)) {
    throw input_error("geometric layout needs max_duration >= 1, first >= 1, ratio > 0");
  }
  std::vector<long> counts(static_cast<std::size_t>(max_duration));
  double v = static_cast<double>(first);
  for (int d = 0; d < max_duration; ++d) {
    counts[static_cast<std::size_t>(d)] = std::max(1L, std::lround(v));
    v *= ratio;
  }
  return counts;
}

AnalyticDataset simulate_dataset(const LayoutSpec& layout, const ParameterSet& truth,
                                 std::uint64_t seed) {
  const int max_duration = truth.beta.max_duration;
  if (static_cast<int>(layout.events_per_duration.size()) != max_duration) {
    throw input_error("layout lists " + std::to_string(layout.events_per_duration.size()) +
                      " durations but the truth grid has " + std::to_string(max_duration));
  }
  if (layout.lag_days > 0 && truth.theta.max_lag < layout.lag_days) {
    throw input_error("layout has " + std::to_string(layout.lag_days) +
                      " lag days but the truth carries " +
                      std::to_string(truth.theta.max_lag));
  }
  if (!(layout.person_time > 0.0) || layout.baseline_rate < 0.0) {
    throw input_error("layout needs person_time > 0 and baseline_rate >= 0");
  }

  Rng rng(seed);
  std::vector<ExposureUnit> units;
  for (int d = 1; d <= max_duration; ++d) {
    const long n_events = layout.events_per_duration[static_cast<std::size_t>(d - 1)];
    for (long e = 0; e < n_events; ++e) {
      const std::string stratum_id = "d" + std::to_string(d) + "_e" + std::to_string(e + 1);
      auto su = stratum_units(stratum_id, d, layout);

      Stratum tmp;
      tmp.stratum_id = stratum_id;
      tmp.duration = d;
      tmp.units = su;
      for (auto& u : tmp.units) u.log_person_time = std::log(u.person_time);
      const Eigen::VectorXd log_pi = stratum_log_probabilities(tmp, truth);

      const double stratum_person_time =
          layout.person_time * static_cast<double>(su.size());
      long remaining = rng.poisson(layout.baseline_rate * stratum_person_time);
      // multinomial split via sequential conditional binomials
      double mass_left = 1.0;
      for (std::size_t j = 0; j + 1 < su.size() && remaining > 0; ++j) {
        const double pi = std::exp(log_pi[static_cast<Eigen::Index>(j)]);
        const double p_cond = mass_left > 0.0 ? std::min(1.0, pi / mass_left) : 0.0;
        const long y = rng.binomial(remaining, p_cond);
        su[j].count = y;
        remaining -= y;
        mass_left -= pi;
      }
      su.back().count = remaining;
      units.insert(units.end(), su.begin(), su.end());
    }
  }
  AnalyticDataset data = validate_dataset(std::move(units));
  data.max_duration = max_duration;
  data.max_lag = std::max(data.max_lag, layout.lag_days);
  return data;
}

AnalyticDataset remove_durations(const AnalyticDataset& data, const std::set<int>& durations) {
  for (int d : durations) {
    if (d < 1 || d > data.max_duration) {
      throw input_error("cannot remove duration " + std::to_string(d) +
                        " from a grid with max duration " +
                        std::to_string(data.max_duration));
    }
  }
  AnalyticDataset out = data;
  out.strata.clear();
  for (const auto& s : data.strata) {
    if (durations.count(s.duration) == 0) out.strata.push_back(s);
  }
  if (out.strata.empty()) {
    throw input_error("removing these durations would empty the dataset");
  }
  return out;
}

CoefficientMetrics compute_metrics(const std::vector<double>& estimates,
                                   const std::vector<double>& interval_lower,
                                   const std::vector<double>& interval_upper,
                                   double truth) {
  if (estimates.empty() || estimates.size() != interval_lower.size() ||
      estimates.size() != interval_upper.size()) {
    throw input_error("metrics need matching, non-empty estimate and interval lists");
  }
  CoefficientMetrics m;
  m.n_replicates = static_cast<long>(estimates.size());
  double sum_err = 0.0, sum_sq = 0.0;
  long covered = 0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double err = estimates[i] - truth;
    sum_err += err;
    sum_sq += err * err;
    if (interval_lower[i] <= truth && truth <= interval_upper[i]) ++covered;
  }
  const double n = static_cast<double>(estimates.size());
  const double mean_err = sum_err / n;
  m.rmse = std::sqrt(sum_sq / n);
  m.coverage = static_cast<double>(covered) / n;
  if (std::abs(truth) < 1e-8) {
    m.bias = mean_err;
    m.bias_is_absolute = true;
  } else {
    m.bias = 100.0 * mean_err / truth;
  }
  return m;
}

}  // namespace edvcm
