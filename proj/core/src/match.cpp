#include "edvcm/match.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <optional>

#include "edvcm/csv.hpp"
#include "edvcm/errors.hpp"
#include "edvcm/spline.hpp"
#include "edvcm/threading.hpp"
#include "edvcm/version.hpp"

namespace edvcm {

namespace {

namespace chrono = std::chrono;

long serial_day(const chrono::year_month_day& ymd) {
  return chrono::sys_days(ymd).time_since_epoch().count();
}

chrono::year_month_day from_serial(long day) {
  return chrono::year_month_day(chrono::sys_days(chrono::days(day)));
}

// Same month/day in another year; Feb 29 falls back to Feb 28 when the
// target year is not a leap year.
chrono::year_month_day shift_years(const chrono::year_month_day& date, int years) {
  const chrono::year target = date.year() + chrono::years(years);
  chrono::year_month_day shifted{target, date.month(), date.day()};
  if (!shifted.ok()) shifted = chrono::year_month_day{target, chrono::February, chrono::day(28)};
  return shifted;
}

long parse_number(const std::string& cell, const std::string& what, std::size_t row,
                  bool integer, double* out_double) {
  char* end = nullptr;
  if (integer) {
    long v = std::strtol(cell.c_str(), &end, 10);
    if (end == cell.c_str() || *end != '\0') {
      throw input_error("row " + std::to_string(row) + ": bad integer for " + what +
                        ": '" + cell + "'");
    }
    return v;
  }
  double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() || *end != '\0') {
    throw input_error("row " + std::to_string(row) + ": bad number for " + what + ": '" +
                      cell + "'");
  }
  *out_double = v;
  return 0;
}

long parse_long_cell(const std::string& cell, const std::string& what, std::size_t row) {
  return parse_number(cell, what, row, true, nullptr);
}

double parse_double_cell(const std::string& cell, const std::string& what, std::size_t row) {
  double v = 0.0;
  parse_number(cell, what, row, false, &v);
  return v;
}

struct PaddedWindow {
  long first = 0;
  long last = 0;  // inclusive, extended by the post-event exclusion
};

// Exposure windows per area, each padded forward by the exclusion period.
std::map<std::string, std::vector<PaddedWindow>> padded_calendar(
    const std::vector<ExposureEvent>& calendar, int pad_days) {
  std::map<std::string, std::vector<PaddedWindow>> out;
  for (const auto& e : calendar) {
    const long start = serial_day(e.start_date);
    out[e.area_id].push_back({start, start + e.duration - 1 + pad_days});
  }
  return out;
}

bool window_clean(const std::vector<PaddedWindow>* windows, long first, long last) {
  if (windows == nullptr) return true;
  for (const auto& w : *windows) {
    if (w.first <= last && w.last >= first) return false;
  }
  return true;
}

const OutcomeRow* find_outcome(const OutcomePanel& panel, const std::string& area,
                               long day) {
  auto a = panel.rows.find(area);
  if (a == panel.rows.end()) return nullptr;
  auto r = a->second.find(day);
  return r == a->second.end() ? nullptr : &r->second;
}

ExposureUnit make_unit(const ExposureEvent& event, const std::string& stratum_id,
                       const std::string& suffix, UnitRole role, int day_index,
                       int lag_index, long date, const OutcomePanel& panel) {
  const OutcomeRow* row = find_outcome(panel, event.area_id, date);
  if (row == nullptr) {
    throw input_error("no outcome row for area '" + event.area_id + "' on " +
                      format_iso_date(from_serial(date)) + " (stratum '" + stratum_id +
                      "')");
  }
  ExposureUnit u;
  u.unit_id = stratum_id + "_" + suffix;
  u.stratum_id = stratum_id;
  u.duration = event.duration;
  u.day_index = day_index;
  u.lag_index = lag_index;
  u.role = role;
  u.count = row->count;
  u.person_time = row->person_time;
  u.covariates = row->covariates;
  return u;
}

}  // namespace

chrono::year_month_day parse_iso_date(const std::string& text) {
  int y = 0, m = 0, d = 0;
  char tail = '\0';
  if (std::sscanf(text.c_str(), "%4d-%2d-%2d%c", &y, &m, &d, &tail) != 3 ||
      text.size() != 10) {
    throw input_error("bad date '" + text + "': expected YYYY-MM-DD");
  }
  const chrono::year_month_day ymd{chrono::year(y), chrono::month(static_cast<unsigned>(m)),
                                   chrono::day(static_cast<unsigned>(d))};
  if (!ymd.ok()) throw input_error("date '" + text + "' is not a valid calendar day");
  return ymd;
}

std::string format_iso_date(const chrono::year_month_day& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

std::vector<ExposureEvent> parse_exposure_csv(const std::string& text,
                                              const std::string& origin) {
  CsvTable t = parse_csv(text, origin);
  const int c_area = t.require_column("area_id");
  const int c_start = t.require_column("start_date");
  const int c_dur = t.require_column("duration");
  std::vector<ExposureEvent> events;
  events.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    ExposureEvent e;
    e.area_id = row[c_area];
    e.start_date = parse_iso_date(row[c_start]);
    e.duration = static_cast<int>(parse_long_cell(row[c_dur], "duration", r + 1));
    if (e.duration < 1) {
      throw input_error("row " + std::to_string(r + 1) + ": duration must be >= 1");
    }
    events.push_back(std::move(e));
  }
  return events;
}

OutcomePanel parse_outcome_csv(const std::string& text, const std::string& origin) {
  CsvTable t = parse_csv(text, origin);
  const int c_area = t.require_column("area_id");
  const int c_date = t.require_column("date");
  const int c_count = t.require_column("count");
  const int c_pt = t.require_column("person_time");
  std::vector<int> cov_cols;
  for (int k = 1;; ++k) {
    int c = t.column("cov_" + std::to_string(k));
    if (c < 0) break;
    cov_cols.push_back(c);
  }
  OutcomePanel panel;
  panel.covariate_dim = static_cast<int>(cov_cols.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string& area = row[c_area];
    const long day = serial_day(parse_iso_date(row[c_date]));
    OutcomeRow rec;
    rec.count = parse_long_cell(row[c_count], "count", r + 1);
    rec.person_time = parse_double_cell(row[c_pt], "person_time", r + 1);
    if (!(rec.person_time > 0.0)) {
      throw input_error("row " + std::to_string(r + 1) + ": person_time must be positive");
    }
    if (rec.count < 0) {
      throw input_error("row " + std::to_string(r + 1) + ": count must be non-negative");
    }
    rec.covariates.resize(panel.covariate_dim);
    for (std::size_t k = 0; k < cov_cols.size(); ++k) {
      rec.covariates[static_cast<Eigen::Index>(k)] =
          parse_double_cell(row[cov_cols[k]], "cov_" + std::to_string(k + 1), r + 1);
    }
    if (!panel.rows[area].emplace(day, std::move(rec)).second) {
      throw input_error("row " + std::to_string(r + 1) + ": duplicate outcome for area '" +
                        area + "' on " + row[c_date]);
    }
  }
  return panel;
}

std::vector<ExposureEvent> read_exposure_csv(const std::string& path) {
  return parse_exposure_csv(read_file_text(path), path);
}

OutcomePanel read_outcome_csv(const std::string& path) {
  return parse_outcome_csv(read_file_text(path), path);
}

std::vector<int> find_control_years(const ExposureEvent& event,
                                    const std::vector<ExposureEvent>& calendar,
                                    const MatchConfig& config) {
  const auto padded = padded_calendar(calendar, config.post_event_exclusion_days);
  const auto it = padded.find(event.area_id);
  const std::vector<PaddedWindow>* windows = it == padded.end() ? nullptr : &it->second;
  // Control units span d + lag_days days; the eligibility window additionally
  // covers the post-event exclusion period so a control never lands inside
  // or shortly after another exposure.
  const int span =
      event.duration - 1 + std::max(config.post_event_exclusion_days, config.lag_days);
  std::vector<int> offsets;
  for (int k = 1; k <= config.max_search_years &&
                  static_cast<int>(offsets.size()) < config.n_control_years;
       ++k) {
    for (const int offset : {-k, k}) {
      const long c_start = serial_day(shift_years(event.start_date, offset));
      if (window_clean(windows, c_start, c_start + span)) {
        offsets.push_back(offset);
        if (static_cast<int>(offsets.size()) == config.n_control_years) break;
      }
    }
  }
  return offsets;
}

Stratum assemble_stratum(const ExposureEvent& event, const std::vector<int>& offsets,
                         const OutcomePanel& panel, const MatchConfig& config) {
  const std::string stratum_id = event.area_id + "_" + format_iso_date(event.start_date);
  const long start = serial_day(event.start_date);
  const int d = event.duration;

  Stratum s;
  s.stratum_id = stratum_id;
  s.duration = d;
  for (int t = 1; t <= d; ++t) {
    s.units.push_back(make_unit(event, stratum_id, "t" + std::to_string(t),
                                UnitRole::exposure_day, t, 0, start + t - 1, panel));
  }
  for (int l = 1; l <= config.lag_days; ++l) {
    s.units.push_back(make_unit(event, stratum_id, "l" + std::to_string(l),
                                UnitRole::lag_day, 0, l, start + d + l - 1, panel));
  }
  for (std::size_t c = 0; c < offsets.size(); ++c) {
    const std::string prefix = "c" + std::to_string(c + 1);
    const long c_start = serial_day(shift_years(event.start_date, offsets[c]));
    for (int t = 1; t <= d; ++t) {
      s.units.push_back(make_unit(event, stratum_id, prefix + "t" + std::to_string(t),
                                  UnitRole::control_exposure_day, t, 0, c_start + t - 1,
                                  panel));
    }
    for (int l = 1; l <= config.lag_days; ++l) {
      s.units.push_back(make_unit(event, stratum_id, prefix + "l" + std::to_string(l),
                                  UnitRole::control_lag_day, 0, l, c_start + d + l - 1,
                                  panel));
    }
  }
  for (const auto& u : s.units) s.total_count += u.count;
  return s;
}

MatchResult match_events(const std::vector<ExposureEvent>& events, const OutcomePanel& panel,
                         const MatchConfig& config) {
  if (config.n_control_years < 0 || config.post_event_exclusion_days < 0 ||
      config.lag_days < 0 || config.max_duration < 0 || config.max_search_years < 1 ||
      config.covariate_df < 0) {
    throw input_error("match config values must be non-negative");
  }

  // Overlapping exposure windows in one area have no defined stratum; reject.
  std::map<std::string, std::vector<std::pair<long, long>>> by_area;
  for (const auto& e : events) {
    const long start = serial_day(e.start_date);
    by_area[e.area_id].push_back({start, start + e.duration - 1});
  }
  for (auto& [area, spans] : by_area) {
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i) {
      if (spans[i].first <= spans[i - 1].second) {
        throw input_error("area '" + area + "': exposure events overlap around " +
                          format_iso_date(from_serial(spans[i].first)));
      }
    }
  }

  MatchResult result;
  std::vector<const ExposureEvent*> candidates;
  for (const auto& e : events) {
    if (config.max_duration > 0 && e.duration > config.max_duration) {
      result.excluded.push_back({e.area_id, format_iso_date(e.start_date), e.duration,
                                 "duration exceeds the max_duration filter of " +
                                     std::to_string(config.max_duration)});
      continue;
    }
    candidates.push_back(&e);
  }

  std::vector<std::optional<Stratum>> strata(candidates.size());
  std::vector<std::optional<MatchReportEntry>> entries(candidates.size());
  parallel_for(candidates.size(), config.n_jobs, [&](std::size_t i) {
    const ExposureEvent& e = *candidates[i];
    const std::vector<int> offsets = find_control_years(e, events, config);
    if (static_cast<int>(offsets.size()) < config.n_control_years) {
      entries[i] = MatchReportEntry{
          e.area_id, format_iso_date(e.start_date), e.duration,
          "only " + std::to_string(offsets.size()) + " of " +
              std::to_string(config.n_control_years) +
              " control years eligible within +/-" +
              std::to_string(config.max_search_years)};
      return;
    }
    try {
      strata[i] = assemble_stratum(e, offsets, panel, config);
    } catch (const input_error& err) {
      entries[i] = MatchReportEntry{e.area_id, format_iso_date(e.start_date), e.duration,
                                    err.what()};
    }
  });

  std::vector<ExposureUnit> units;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (entries[i]) {
      result.excluded.push_back(*entries[i]);
      continue;
    }
    ++result.n_matched;
    for (auto& u : strata[i]->units) units.push_back(std::move(u));
  }

  if (!units.empty() && panel.covariate_dim > 0 && config.covariate_df > 0) {
    Eigen::MatrixXd raw(static_cast<Eigen::Index>(units.size()), panel.covariate_dim);
    for (std::size_t i = 0; i < units.size(); ++i) {
      raw.row(static_cast<Eigen::Index>(i)) = units[i].covariates.transpose();
    }
    const Eigen::MatrixXd design = build_covariate_design(raw, config.covariate_df);
    for (std::size_t i = 0; i < units.size(); ++i) {
      units[i].covariates = design.row(static_cast<Eigen::Index>(i)).transpose();
    }
  }

  result.data = validate_dataset(std::move(units));
  return result;
}

std::string match_report_csv_string(const std::vector<MatchReportEntry>& entries,
                                    const std::string& config_text) {
  CsvWriter w(file_stamp(config_text));
  w.set_header({"area_id", "start_date", "duration", "reason"});
  for (const auto& e : entries) {
    w.add_row({e.area_id, e.start_date, std::to_string(e.duration), e.reason});
  }
  return w.str();
}

}  // namespace edvcm
