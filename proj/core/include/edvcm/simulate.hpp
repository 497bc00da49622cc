#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "edvcm/data.hpp"
#include "edvcm/likelihood.hpp"

namespace edvcm {

struct LayoutSpec {
  std::vector<long> events_per_duration;  // entry d-1 is the stratum count at duration d
  int n_control_years = 2;                // matched control periods per event
  int lag_days = 0;
  double person_time = 1.0;    // per unit
  double baseline_rate = 1.0;  // expected events per unit of person-time
};

// Geometrically decaying event counts: round(first * ratio^(d-1)), floored at 1.
std::vector<long> geometric_event_counts(int max_duration, long first, double ratio = 0.7);

// Draws each stratum total from Poisson(baseline_rate * stratum person-time),
// then splits it multinomially with probabilities implied by the truth
// parameters.  Covariates are not generated.
AnalyticDataset simulate_dataset(const LayoutSpec& layout, const ParameterSet& truth,
                                 std::uint64_t seed);

// Drops all strata whose duration is in the set; the declared coefficient
// grid (max_duration, max_lag) is preserved so removed rows stay parameters.
AnalyticDataset remove_durations(const AnalyticDataset& data, const std::set<int>& durations);

struct CoefficientMetrics {
  double bias = 0.0;        // percent bias, or absolute bias near zero truth
  bool bias_is_absolute = false;
  double rmse = 0.0;
  double coverage = 0.0;
  long n_replicates = 0;
};

CoefficientMetrics compute_metrics(const std::vector<double>& estimates,
                                   const std::vector<double>& interval_lower,
                                   const std::vector<double>& interval_upper, double truth);

}  // namespace edvcm
