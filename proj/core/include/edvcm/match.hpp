#pragma once

#include <chrono>
#include <map>
#include <string>
#include <vector>

#include "edvcm/data.hpp"

namespace edvcm {

struct ExposureEvent {
  std::string area_id;
  std::chrono::year_month_day start_date;
  int duration = 0;  // days, >= 1
};

// One outcome observation for an (area, date) pair.
struct OutcomeRow {
  long count = 0;
  double person_time = 0.0;
  Eigen::VectorXd covariates;  // raw values, cov_1..cov_k
};

struct OutcomePanel {
  int covariate_dim = 0;  // k, before spline expansion
  // area -> serial day (sys_days count) -> row; at most one row per key
  std::map<std::string, std::map<long, OutcomeRow>> rows;
};

struct MatchConfig {
  int n_control_years = 2;
  int post_event_exclusion_days = 28;
  int lag_days = 0;
  int max_duration = 0;    // events longer than this are excluded; 0 = no filter
  int max_search_years = 10;  // candidate year offsets searched: -1..+1 up to this
  int covariate_df = 3;    // spline df per covariate; 0 = raw passthrough
  int n_jobs = 1;
};

struct MatchReportEntry {
  std::string area_id;
  std::string start_date;  // ISO-8601
  int duration = 0;
  std::string reason;
};

struct MatchResult {
  AnalyticDataset data;
  std::vector<MatchReportEntry> excluded;
  long n_matched = 0;
};

std::chrono::year_month_day parse_iso_date(const std::string& text);
std::string format_iso_date(const std::chrono::year_month_day& date);

// Input readers.  Exposures: area_id, start_date, duration.  Outcomes:
// area_id, date, count, person_time, cov_1..cov_k.
std::vector<ExposureEvent> read_exposure_csv(const std::string& path);
OutcomePanel read_outcome_csv(const std::string& path);
std::vector<ExposureEvent> parse_exposure_csv(const std::string& text,
                                              const std::string& origin);
OutcomePanel parse_outcome_csv(const std::string& text, const std::string& origin);

// Year offsets of the closest eligible control years, in acceptance order
// (-1, +1, -2, +2, ...).  A candidate year is eligible when the control
// window, padded by the post-event exclusion, avoids every exposure window
// (also padded) in the same area.  Returns fewer than n_control_years only
// when the search range is exhausted.
std::vector<int> find_control_years(const ExposureEvent& event,
                                    const std::vector<ExposureEvent>& calendar,
                                    const MatchConfig& config);

// Builds the stratum for one event from its control year offsets: d exposure
// days, lag_days lag days, and the matched control units per control year.
// Throws input_error listing the first missing (area, date) outcome row.
Stratum assemble_stratum(const ExposureEvent& event, const std::vector<int>& offsets,
                         const OutcomePanel& panel, const MatchConfig& config);

// Full pipeline: filter events, match each one, expand covariates, validate.
// Events that cannot be matched are excluded with a report entry, not fatal;
// overlapping exposure windows in one area are a hard error.
MatchResult match_events(const std::vector<ExposureEvent>& events,
                         const OutcomePanel& panel, const MatchConfig& config);

std::string match_report_csv_string(const std::vector<MatchReportEntry>& entries,
                                    const std::string& config_text);

}  // namespace edvcm
