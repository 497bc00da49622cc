#include "edvcm/study.hpp"

#include <cmath>
#include <limits>
#include <mutex>

#include "edvcm/csv.hpp"
#include "edvcm/errors.hpp"
#include "edvcm/summaries.hpp"
#include "edvcm/threading.hpp"
#include "edvcm/version.hpp"

namespace edvcm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int coefficient_count(const AnalyticDataset& data) {
  return triangle_size(data.max_duration) +
         (data.max_lag > 0 ? data.max_duration * data.max_lag : 0);
}

CoefficientFit summarize_posterior(const PosteriorDraws& draws, int n_coef) {
  CoefficientFit fit;
  fit.estimate.resize(n_coef);
  fit.lower.resize(n_coef);
  fit.upper.resize(n_coef);
  for (int i = 0; i < n_coef; ++i) {
    const IntervalSummary s = posterior_mean_ci(draws.constrained.col(i));
    fit.estimate[i] = s.mean;
    fit.lower[i] = s.lower;
    fit.upper[i] = s.upper;
  }
  return fit;
}

CoefficientFit fit_bayes(const AnalyticDataset& data, const PriorPreset& priors,
                         PosteriorModel::PriorKind kind, const SamplerConfig& sampler) {
  PosteriorModel model(&data, priors, kind);
  const PosteriorDraws draws = run_hmc(model, sampler);
  return summarize_posterior(draws, coefficient_count(data));
}

}  // namespace

CoefficientFit fit_edvcm(const AnalyticDataset& data, const PriorPreset& priors,
                         const SamplerConfig& sampler) {
  return fit_bayes(data, priors, PosteriorModel::PriorKind::gp, sampler);
}

CoefficientFit fit_independent_normal(const AnalyticDataset& data,
                                      const SamplerConfig& sampler) {
  return fit_bayes(data, simulation_preset(), PosteriorModel::PriorKind::independent_unit,
                   sampler);
}

CoefficientFit fit_frequentist_all(const AnalyticDataset& data) {
  const int n_coef = coefficient_count(data);
  CoefficientFit fit;
  fit.estimate = Eigen::VectorXd::Constant(n_coef, kNaN);
  fit.lower = Eigen::VectorXd::Constant(n_coef, kNaN);
  fit.upper = Eigen::VectorXd::Constant(n_coef, kNaN);
  for (int d = 1; d <= data.max_duration; ++d) {
    bool present = false;
    for (const auto& s : data.strata) {
      if (s.duration == d) {
        present = true;
        break;
      }
    }
    if (!present) continue;
    const GlmFit glm = fit_frequentist_glm(data, d);
    for (int t = 1; t <= d; ++t) {
      const int idx = grid_index(d, t, data.max_duration);
      fit.estimate[idx] = glm.estimate[t - 1];
      fit.lower[idx] = glm.ci_lower[t - 1];
      fit.upper[idx] = glm.ci_upper[t - 1];
    }
  }
  return fit;
}

StudyResult run_study(const StudyProtocol& protocol) {
  if (protocol.n_sim < 1) throw input_error("n_sim must be >= 1");
  if (protocol.methods.empty()) throw input_error("protocol lists no methods");
  for (const auto& m : protocol.methods) {
    if (m != "edvcm" && m != "indep-normal" && m != "freq-glm") {
      throw input_error("unknown method '" + m + "'");
    }
  }

  const int D = protocol.surface.max_duration;
  const int L = protocol.layout.lag_days;
  SurfaceSpec surface = protocol.surface;
  surface.seed = derive_seed(protocol.seed, 0);

  StudyResult result;
  result.truth = make_parameter_set(D, L, 0);
  result.truth.beta = generate_true_surface(surface);
  if (L > 0) {
    const double lag_noise = protocol.lag_noise_fraction >= 0.0
                                 ? protocol.lag_noise_fraction
                                 : protocol.surface.noise_fraction;
    result.truth.theta = generate_true_lag_surface(D, L, lag_noise,
                                                   protocol.lag_surface_sd,
                                                   derive_seed(protocol.seed, 1));
  }

  for (int d = 1; d <= D; ++d) {
    for (int t = 1; t <= d; ++t) {
      result.coefficient_names.push_back("beta[" + std::to_string(d) + "," +
                                         std::to_string(t) + "]");
    }
  }
  for (int d = 1; d <= D && L > 0; ++d) {
    for (int l = 1; l <= L; ++l) {
      result.coefficient_names.push_back("theta[" + std::to_string(d) + "," +
                                         std::to_string(l) + "]");
    }
  }
  const int n_coef = static_cast<int>(result.coefficient_names.size());

  for (const auto& m : protocol.methods) {
    result.estimates[m] = Eigen::MatrixXd::Constant(protocol.n_sim, n_coef, kNaN);
    result.lowers[m] = Eigen::MatrixXd::Constant(protocol.n_sim, n_coef, kNaN);
    result.uppers[m] = Eigen::MatrixXd::Constant(protocol.n_sim, n_coef, kNaN);
  }

  std::vector<long> failures(static_cast<std::size_t>(protocol.n_sim), 0);
  std::vector<std::string> messages(static_cast<std::size_t>(protocol.n_sim));
  parallel_for(static_cast<std::size_t>(protocol.n_sim), protocol.n_jobs,
               [&](std::size_t r) {
                 const std::uint64_t rep_seed =
                     derive_seed(protocol.seed, 100 + static_cast<std::uint64_t>(r));
                 AnalyticDataset data = simulate_dataset(
                     protocol.layout, result.truth, derive_seed(rep_seed, 0));
                 if (!protocol.removed_durations.empty()) {
                   data = remove_durations(data, protocol.removed_durations);
                 }
                 for (std::size_t m = 0; m < protocol.methods.size(); ++m) {
                   const auto& method = protocol.methods[m];
                   try {
                     SamplerConfig sampler = protocol.sampler;
                     sampler.seed = derive_seed(rep_seed, 1 + m);
                     sampler.n_workers = 1;
                     CoefficientFit fit;
                     if (method == "edvcm") {
                       fit = fit_edvcm(data, protocol.priors, sampler);
                     } else if (method == "indep-normal") {
                       fit = fit_independent_normal(data, sampler);
                     } else {
                       fit = fit_frequentist_all(data);
                     }
                     const auto row = static_cast<Eigen::Index>(r);
                     result.estimates[method].row(row) = fit.estimate.transpose();
                     result.lowers[method].row(row) = fit.lower.transpose();
                     result.uppers[method].row(row) = fit.upper.transpose();
                   } catch (const std::exception& e) {
                     ++failures[r];
                     if (messages[r].empty()) {
                       messages[r] = method + " replicate " + std::to_string(r) + ": " +
                                     e.what();
                     }
                   }
                 }
               });
  for (std::size_t r = 0; r < failures.size(); ++r) {
    result.n_failures += failures[r];
    if (!messages[r].empty() && result.failure_messages.size() < 20) {
      result.failure_messages.push_back(messages[r]);
    }
  }

  Eigen::VectorXd truth_flat(n_coef);
  truth_flat.head(result.truth.beta.values.size()) = result.truth.beta.values;
  if (L > 0) truth_flat.tail(result.truth.theta.values.size()) = result.truth.theta.values;

  for (const auto& method : protocol.methods) {
    const auto& est = result.estimates[method];
    const auto& lo = result.lowers[method];
    const auto& hi = result.uppers[method];
    for (int i = 0; i < n_coef; ++i) {
      std::vector<double> e, l, u;
      for (Eigen::Index r = 0; r < est.rows(); ++r) {
        if (std::isnan(est(r, i))) continue;
        e.push_back(est(r, i));
        l.push_back(lo(r, i));
        u.push_back(hi(r, i));
      }
      if (e.empty()) continue;
      const CoefficientMetrics m = compute_metrics(e, l, u, truth_flat[i]);
      const bool is_beta = i < triangle_size(D);
      MetricRow row;
      row.method = method;
      row.param = is_beta ? "beta" : "theta";
      if (is_beta) {
        const auto [dd, tt] = inverse_grid_index(i, D);
        row.d = dd;
        row.t = tt;
      } else {
        const int j = i - triangle_size(D);
        row.d = j / L + 1;
        row.t = j % L + 1;
      }
      row.metric = m.bias_is_absolute ? "abs_bias" : "pct_bias";
      row.value = m.bias;
      result.rows.push_back(row);
      row.metric = "rmse";
      row.value = m.rmse;
      result.rows.push_back(row);
      row.metric = "coverage";
      row.value = m.coverage;
      result.rows.push_back(row);
    }
  }
  return result;
}

std::string report_csv_string(const StudyResult& result, const std::string& config_text) {
  CsvWriter w(file_stamp(config_text));
  w.set_header({"method", "param", "d", "t", "metric", "value"});
  for (const auto& r : result.rows) {
    w.add_row({r.method, r.param, std::to_string(r.d), std::to_string(r.t), r.metric,
               format_double(r.value)});
  }
  return w.str();
}

}  // namespace edvcm
