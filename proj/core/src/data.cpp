#include "edvcm/data.hpp"

#include <cmath>
#include <map>
#include <set>

#include "edvcm/errors.hpp"

namespace edvcm {

namespace {

void check_unit(const ExposureUnit& u) {
  const std::string tag = "unit '" + u.unit_id + "' (stratum '" + u.stratum_id + "'): ";
  if (u.duration < 1) throw input_error(tag + "duration must be >= 1");
  bool has_t = u.day_index > 0;
  bool has_l = u.lag_index > 0;
  if (has_t == has_l) {
    throw input_error(tag + (has_t ? "both day and lag index set; they are mutually exclusive"
                                   : "neither day nor lag index set"));
  }
  if (has_t && u.day_index > u.duration) {
    throw input_error(tag + "day index t=" + std::to_string(u.day_index) +
                      " exceeds duration d=" + std::to_string(u.duration));
  }
  if (!(u.person_time > 0.0) || !std::isfinite(u.person_time)) {
    throw input_error(tag + "person-time must be positive and finite");
  }
  if (u.count < 0) throw input_error(tag + "count must be non-negative");
  bool expo_type = u.role == UnitRole::exposure_day || u.role == UnitRole::control_exposure_day;
  if (expo_type != has_t) {
    throw input_error(tag + "role does not match the index that is set");
  }
}

}  // namespace

AnalyticDataset validate_dataset(std::vector<ExposureUnit> units) {
  AnalyticDataset out;
  if (units.empty()) return out;

  out.covariate_dim = static_cast<int>(units.front().covariates.size());

  // Group by stratum_id, preserving first-appearance order.
  std::map<std::string, std::size_t> stratum_slot;
  for (auto& u : units) {
    check_unit(u);
    if (static_cast<int>(u.covariates.size()) != out.covariate_dim) {
      throw input_error("unit '" + u.unit_id + "': covariate vector has length " +
                        std::to_string(u.covariates.size()) + ", expected " +
                        std::to_string(out.covariate_dim));
    }
    u.log_person_time = std::log(u.person_time);
    auto it = stratum_slot.find(u.stratum_id);
    if (it == stratum_slot.end()) {
      stratum_slot.emplace(u.stratum_id, out.strata.size());
      Stratum s;
      s.stratum_id = u.stratum_id;
      s.duration = u.duration;
      out.strata.push_back(std::move(s));
      it = stratum_slot.find(u.stratum_id);
    }
    Stratum& s = out.strata[it->second];
    if (u.duration != s.duration) {
      throw input_error("stratum '" + s.stratum_id + "': unit '" + u.unit_id +
                        "' has duration " + std::to_string(u.duration) +
                        " but the stratum has duration " + std::to_string(s.duration));
    }
    s.total_count += u.count;
    s.units.push_back(std::move(u));
  }

  for (auto& s : out.strata) {
    out.max_duration = std::max(out.max_duration, s.duration);
    std::set<int> exposed_days;
    for (const auto& u : s.units) {
      out.max_lag = std::max(out.max_lag, u.lag_index);
      if (u.role == UnitRole::exposure_day) {
        if (!exposed_days.insert(u.day_index).second) {
          throw input_error("stratum '" + s.stratum_id + "': exposure day t=" +
                            std::to_string(u.day_index) + " appears more than once");
        }
      }
    }
    if (s.total_count == 0) out.zero_total_strata.push_back(s.stratum_id);
    if (s.units.size() == 1) out.single_unit_strata.push_back(s.stratum_id);
  }
  return out;
}

}  // namespace edvcm
