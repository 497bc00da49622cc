#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace edvcm {

// Role of one unit record within its stratum. Exposure-day and lag-day
// units belong to the event period; control units mirror them with matched
// day/lag indices in exposure-free years.
enum class UnitRole { exposure_day, lag_day, control_exposure_day, control_lag_day };

inline bool is_event_period(UnitRole r) {
  return r == UnitRole::exposure_day || r == UnitRole::lag_day;
}

// One unit record (an area-day). Exactly one of day_index / lag_index is
// set; the other is 0.
struct ExposureUnit {
  std::string unit_id;
  std::string stratum_id;
  int duration = 0;    // d, event duration in days
  int day_index = 0;   // t in [1, d]; 0 when this is a lag-type unit
  int lag_index = 0;   // l >= 1; 0 when this is an exposure-type unit
  UnitRole role = UnitRole::control_exposure_day;
  long count = 0;           // Y
  double person_time = 0.0; // P > 0
  Eigen::VectorXd covariates;

  double log_person_time = 0.0;  // cached by validate_dataset

  // Exposure regressor: 1 only on true exposure days.
  double exposure() const { return role == UnitRole::exposure_day ? 1.0 : 0.0; }
  // Lag indicator: 1 only on true (event-period) lag days.
  double lag_active() const { return role == UnitRole::lag_day ? 1.0 : 0.0; }
};

struct Stratum {
  std::string stratum_id;
  int duration = 0;
  std::vector<ExposureUnit> units;
  long total_count = 0;  // W, sum of Y over units
};

// Validated container consumed by the likelihood and fitters. max_duration
// is the coefficient-grid bound: validate_dataset sets it to the largest
// stratum duration, but it may legitimately exceed it (durations removed
// after validation stay in the grid).
struct AnalyticDataset {
  std::vector<Stratum> strata;
  int max_duration = 0;   // D
  int max_lag = 0;        // 0 when no lag units anywhere
  int covariate_dim = 0;
  std::vector<std::string> zero_total_strata;   // W == 0, kept but inert
  std::vector<std::string> single_unit_strata;  // degenerate pi = 1

  long total_units() const {
    long n = 0;
    for (const auto& s : strata) n += static_cast<long>(s.units.size());
    return n;
  }
};

// Assembles strata from raw units and enforces the structural invariants:
// exactly one of t/l set, t <= d, P > 0, Y >= 0, d >= 1, consistent duration
// within a stratum, each exposure day used at most once per stratum side.
// Throws input_error naming the offending unit. Idempotent: re-validating
// the flattened units of a validated dataset reproduces it.
AnalyticDataset validate_dataset(std::vector<ExposureUnit> units);

}  // namespace edvcm
