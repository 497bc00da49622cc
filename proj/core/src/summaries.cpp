#include "edvcm/summaries.hpp"

#include <algorithm>
#include <cmath>

#include "edvcm/csv.hpp"
#include "edvcm/errors.hpp"
#include "edvcm/grid.hpp"
#include "edvcm/version.hpp"

namespace edvcm {

namespace {

// "beta[3,2]" -> ("beta", "3", "2"); names without brackets map to
// (name, "", "").
struct ParsedName {
  std::string base;
  std::string first;
  std::string second;
};

ParsedName parse_name(const std::string& name) {
  ParsedName p;
  const auto open = name.find('[');
  if (open == std::string::npos) {
    p.base = name;
    return p;
  }
  p.base = name.substr(0, open);
  const auto close = name.find(']', open);
  const std::string inner = name.substr(open + 1, close - open - 1);
  const auto comma = inner.find(',');
  if (comma == std::string::npos) {
    p.first = inner;
  } else {
    p.first = inner.substr(0, comma);
    p.second = inner.substr(comma + 1);
  }
  return p;
}

bool is_coefficient(const std::string& base) {
  return base == "beta" || base == "theta" || base == "zeta";
}

}  // namespace

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw input_error("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw input_error("quantile probability outside [0, 1]");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  if (n == 1) return values[0];
  const double h = p * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return values[n - 1];
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

double quantile_type7(const Eigen::VectorXd& values, double p) {
  return quantile_type7(
      std::vector<double>(values.data(), values.data() + values.size()), p);
}

IntervalSummary posterior_mean_ci(const Eigen::VectorXd& draws, double level) {
  if (draws.size() == 0) throw input_error("summary of an empty draw vector");
  const double alpha = 0.5 * (1.0 - level);
  IntervalSummary s;
  s.mean = draws.mean();
  s.lower = quantile_type7(draws, alpha);
  s.upper = quantile_type7(draws, 1.0 - alpha);
  return s;
}

Direction classify_direction(double rr_lower, double rr_upper) {
  if (rr_lower > 1.0) return Direction::harmful;
  if (rr_upper < 1.0) return Direction::protective;
  return Direction::null_effect;
}

std::string direction_label(Direction d) {
  switch (d) {
    case Direction::harmful:
      return "harmful";
    case Direction::protective:
      return "protective";
    case Direction::null_effect:
      return "null";
  }
  return "null";
}

Eigen::VectorXd cumulative_rr_no_covariates(const Eigen::MatrixXd& beta_draws,
                                            int max_duration, int d) {
  if (d < 1 || d > max_duration) {
    throw input_error("cumulative rate ratio requested for duration " +
                      std::to_string(d) + " outside [1, " +
                      std::to_string(max_duration) + "]");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(beta_draws.rows());
  for (int t = 1; t <= d; ++t) {
    out += beta_draws.col(grid_index(d, t, max_duration)).array().exp().matrix();
  }
  return out / static_cast<double>(d);
}

Eigen::VectorXd cumulative_rr_with_covariates(const Eigen::MatrixXd& beta_draws,
                                              const Eigen::MatrixXd& zeta_draws,
                                              int max_duration, int d,
                                              const AnalyticDataset& data) {
  if (d < 1 || d > max_duration) {
    throw input_error("cumulative rate ratio requested for duration " +
                      std::to_string(d) + " outside [1, " +
                      std::to_string(max_duration) + "]");
  }
  std::vector<const ExposureUnit*> exposed;
  for (const auto& s : data.strata) {
    if (s.duration != d) continue;
    for (const auto& u : s.units) {
      if (u.role == UnitRole::exposure_day) exposed.push_back(&u);
    }
  }
  if (exposed.empty()) {
    throw input_error("no exposed units of duration " + std::to_string(d) +
                      " in the dataset");
  }
  Eigen::VectorXd out(beta_draws.rows());
  for (Eigen::Index r = 0; r < beta_draws.rows(); ++r) {
    double num = 0.0, den = 0.0;
    for (const ExposureUnit* u : exposed) {
      double w = 1.0;
      if (zeta_draws.cols() > 0) {
        w = std::exp(zeta_draws.row(r).dot(u->covariates.transpose()));
      }
      num += std::exp(beta_draws(r, grid_index(d, u->day_index, max_duration))) * w;
      den += w;
    }
    out[r] = num / den;
  }
  return out;
}

Eigen::MatrixXd draws_block(const PosteriorDraws& draws, const std::string& prefix) {
  std::vector<Eigen::Index> cols;
  for (std::size_t i = 0; i < draws.names.size(); ++i) {
    if (parse_name(draws.names[i]).base == prefix) {
      cols.push_back(static_cast<Eigen::Index>(i));
    }
  }
  Eigen::MatrixXd out(draws.constrained.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = draws.constrained.col(cols[j]);
  }
  return out;
}

std::string draws_csv_string(const PosteriorDraws& draws, const std::string& config_text) {
  CsvWriter w(file_stamp(config_text));
  std::vector<std::string> header = {"chain", "draw"};
  header.insert(header.end(), draws.names.begin(), draws.names.end());
  w.set_header(std::move(header));
  for (Eigen::Index r = 0; r < draws.constrained.rows(); ++r) {
    std::vector<std::string> row;
    row.reserve(static_cast<std::size_t>(draws.constrained.cols()) + 2);
    const int chain = draws.chain_index[static_cast<std::size_t>(r)];
    row.push_back(std::to_string(chain + 1));
    row.push_back(std::to_string(static_cast<int>(r) - chain * draws.n_samples + 1));
    for (Eigen::Index c = 0; c < draws.constrained.cols(); ++c) {
      row.push_back(format_double(draws.constrained(r, c)));
    }
    w.add_row(std::move(row));
  }
  return w.str();
}

std::string summary_csv_string(const PosteriorDraws& draws, const std::string& config_text,
                               double level) {
  CsvWriter w(file_stamp(config_text));
  w.set_header({"parameter", "d", "t_or_l", "mean", "rr_mean", "ci_lo", "ci_hi",
                "direction"});
  for (std::size_t i = 0; i < draws.names.size(); ++i) {
    const auto parsed = parse_name(draws.names[i]);
    const Eigen::VectorXd col = draws.constrained.col(static_cast<Eigen::Index>(i));
    const IntervalSummary natural = posterior_mean_ci(col, level);
    std::vector<std::string> row(8);
    row[0] = draws.names[i];
    row[1] = parsed.second.empty() ? "" : parsed.first;
    row[2] = parsed.second;
    row[3] = format_double(natural.mean);
    if (is_coefficient(parsed.base)) {
      // CI of exp(coefficient) = exp of coefficient CI (monotone transform)
      const double rr_lo = std::exp(natural.lower);
      const double rr_hi = std::exp(natural.upper);
      row[4] = format_double(col.array().exp().mean());
      row[5] = format_double(rr_lo);
      row[6] = format_double(rr_hi);
      row[7] = direction_label(classify_direction(rr_lo, rr_hi));
    } else {
      row[4] = "";
      row[5] = format_double(natural.lower);
      row[6] = format_double(natural.upper);
      row[7] = "";
    }
    w.add_row(std::move(row));
  }
  return w.str();
}

std::string cumulative_csv_string(const PosteriorDraws& draws, const AnalyticDataset* data,
                                  const std::string& config_text, double level) {
  const Eigen::MatrixXd beta = draws_block(draws, "beta");
  const Eigen::MatrixXd zeta = draws_block(draws, "zeta");
  const int max_duration = triangle_duration(static_cast<int>(beta.cols()));
  const bool weighted = data != nullptr && zeta.cols() > 0 && data->covariate_dim > 0;

  CsvWriter w(file_stamp(config_text));
  w.set_header({"d", "mean", "ci_lo", "ci_hi"});
  for (int d = 1; d <= max_duration; ++d) {
    Eigen::VectorXd rr;
    if (weighted) {
      bool has_units = false;
      for (const auto& s : data->strata) {
        if (s.duration == d) {
          has_units = true;
          break;
        }
      }
      rr = has_units
               ? cumulative_rr_with_covariates(beta, zeta, max_duration, d, *data)
               : cumulative_rr_no_covariates(beta, max_duration, d);
    } else {
      rr = cumulative_rr_no_covariates(beta, max_duration, d);
    }
    const IntervalSummary s = posterior_mean_ci(rr, level);
    w.add_row({std::to_string(d), format_double(s.mean), format_double(s.lower),
               format_double(s.upper)});
  }
  return w.str();
}

std::string diagnostics_csv_string(const PosteriorDraws& draws,
                                   const std::vector<ParameterDiagnostics>& diagnostics,
                                   const std::string& config_text) {
  std::string out = file_stamp(config_text) + "\n";
  out += "# chains=" + std::to_string(draws.n_chains) +
         " samples_per_chain=" + std::to_string(draws.n_samples) + "\n";
  for (std::size_t c = 0; c < draws.stats.size(); ++c) {
    out += "# chain " + std::to_string(c + 1) +
           ": divergences=" + std::to_string(draws.stats[c].n_divergent) +
           " mean_accept=" + format_double(draws.stats[c].mean_accept) +
           " step_size=" + format_double(draws.stats[c].step_size) + "\n";
  }
  double worst_rhat = 0.0;
  for (const auto& d : diagnostics) {
    if (std::isfinite(d.rhat)) worst_rhat = std::max(worst_rhat, d.rhat);
    if (std::isinf(d.rhat)) worst_rhat = d.rhat;
  }
  if (worst_rhat > 1.05) {
    out += "# flag: max rhat " + format_double(worst_rhat) +
           " exceeds 1.05; chains have not mixed\n";
  }
  CsvWriter w("");
  w.set_header({"parameter", "rhat", "ess_bulk"});
  for (const auto& d : diagnostics) {
    w.add_row({d.name, format_double(d.rhat), format_double(d.ess_bulk)});
  }
  return out + w.str();
}

}  // namespace edvcm
