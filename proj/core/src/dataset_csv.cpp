#include "edvcm/dataset_csv.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "edvcm/csv.hpp"
#include "edvcm/errors.hpp"
#include "edvcm/version.hpp"

namespace edvcm {

namespace {

long parse_long(const std::string& cell, const std::string& what, std::size_t row) {
  char* end = nullptr;
  long v = std::strtol(cell.c_str(), &end, 10);
  if (end == cell.c_str() || *end != '\0') {
    throw input_error("row " + std::to_string(row) + ": bad integer for " + what +
                      ": '" + cell + "'");
  }
  return v;
}

double parse_double(const std::string& cell, const std::string& what, std::size_t row) {
  char* end = nullptr;
  double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() || *end != '\0') {
    throw input_error("row " + std::to_string(row) + ": bad number for " + what +
                      ": '" + cell + "'");
  }
  return v;
}

UnitRole role_from_row(bool event_period, bool has_day, const std::string& unit_id) {
  if (event_period) return has_day ? UnitRole::exposure_day : UnitRole::lag_day;
  if (has_day) return UnitRole::control_exposure_day;
  (void)unit_id;
  return UnitRole::control_lag_day;
}

}  // namespace

AnalyticDataset parse_dataset_csv(const std::string& text, const std::string& origin) {
  CsvTable t = parse_csv(text, origin);
  const int c_unit = t.require_column("unit_id");
  const int c_stratum = t.require_column("stratum_id");
  const int c_d = t.require_column("d");
  const int c_t = t.require_column("t");
  const int c_l = t.require_column("l");
  const int c_a = t.require_column("A");
  const int c_y = t.require_column("Y");
  const int c_p = t.require_column("P");

  std::vector<int> cov_cols;
  for (int k = 1;; ++k) {
    int c = t.column("cov_" + std::to_string(k));
    if (c < 0) break;
    cov_cols.push_back(c);
  }

  std::vector<ExposureUnit> units;
  units.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    ExposureUnit u;
    u.unit_id = row[c_unit];
    u.stratum_id = row[c_stratum];
    u.duration = static_cast<int>(parse_long(row[c_d], "d", r + 1));
    u.day_index = static_cast<int>(parse_long(row[c_t], "t", r + 1));
    u.lag_index = static_cast<int>(parse_long(row[c_l], "l", r + 1));
    long a = parse_long(row[c_a], "A", r + 1);
    if (a != 0 && a != 1) {
      throw input_error("row " + std::to_string(r + 1) + ": A must be 0 or 1, found " +
                        row[c_a]);
    }
    u.count = parse_long(row[c_y], "Y", r + 1);
    u.person_time = parse_double(row[c_p], "P", r + 1);
    if (u.day_index > 0 && u.lag_index > 0) {
      throw input_error("row " + std::to_string(r + 1) + ": unit '" + u.unit_id +
                        "' has both t and l set; exactly one must be positive");
    }
    if (u.day_index <= 0 && u.lag_index <= 0) {
      throw input_error("row " + std::to_string(r + 1) + ": unit '" + u.unit_id +
                        "' has neither t nor l set; exactly one must be positive");
    }
    u.role = role_from_row(a == 1, u.day_index > 0, u.unit_id);
    u.covariates.resize(static_cast<Eigen::Index>(cov_cols.size()));
    for (std::size_t k = 0; k < cov_cols.size(); ++k) {
      u.covariates[static_cast<Eigen::Index>(k)] =
          parse_double(row[cov_cols[k]], "cov_" + std::to_string(k + 1), r + 1);
    }
    units.push_back(std::move(u));
  }
  return validate_dataset(std::move(units));
}

AnalyticDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset_csv(buf.str(), path);
}

std::string dataset_csv_string(const AnalyticDataset& data, const std::string& config_text) {
  CsvWriter w(file_stamp(config_text));
  std::vector<std::string> header = {"unit_id", "stratum_id", "d", "t",
                                     "l",       "A",          "Y", "P"};
  for (int k = 1; k <= data.covariate_dim; ++k) header.push_back("cov_" + std::to_string(k));
  w.set_header(std::move(header));
  for (const auto& s : data.strata) {
    for (const auto& u : s.units) {
      std::vector<std::string> row;
      row.reserve(8 + static_cast<std::size_t>(data.covariate_dim));
      row.push_back(u.unit_id);
      row.push_back(u.stratum_id);
      row.push_back(std::to_string(u.duration));
      row.push_back(std::to_string(u.day_index > 0 ? u.day_index : 0));
      row.push_back(std::to_string(u.lag_index > 0 ? u.lag_index : 0));
      row.push_back(is_event_period(u.role) ? "1" : "0");
      row.push_back(std::to_string(u.count));
      row.push_back(format_double(u.person_time));
      for (Eigen::Index k = 0; k < u.covariates.size(); ++k) {
        row.push_back(format_double(u.covariates[k]));
      }
      w.add_row(std::move(row));
    }
  }
  return w.str();
}

void write_dataset_csv(const AnalyticDataset& data, const std::string& path,
                       const std::string& config_text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write file '" + path + "'");
  out << dataset_csv_string(data, config_text);
  if (!out) throw input_error("failed writing file '" + path + "'");
}

}  // namespace edvcm
