#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "edvcm/glm.hpp"
#include "edvcm/hmc.hpp"
#include "edvcm/simulate.hpp"
#include "edvcm/surface.hpp"

namespace edvcm {

// Per-coefficient point estimates and 95% intervals, ordered as the
// coefficient triangle followed by the duration x lag block (when present).
struct CoefficientFit {
  Eigen::VectorXd estimate;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

CoefficientFit fit_edvcm(const AnalyticDataset& data, const PriorPreset& priors,
                         const SamplerConfig& sampler);
CoefficientFit fit_independent_normal(const AnalyticDataset& data,
                                      const SamplerConfig& sampler);
// One conditional-multinomial GLM per observed duration; durations without
// strata and all lag cells stay NaN.
CoefficientFit fit_frequentist_all(const AnalyticDataset& data);

struct StudyProtocol {
  std::string label = "study";
  SurfaceSpec surface;            // surface.seed is derived from the master seed
  double lag_surface_sd = 0.1;
  double lag_noise_fraction = -1.0;  // < 0 means reuse surface.noise_fraction
  LayoutSpec layout;
  std::vector<std::string> methods{"edvcm"};
  int n_sim = 1;
  std::uint64_t seed = 0;
  int n_jobs = 1;
  SamplerConfig sampler;
  PriorPreset priors = simulation_preset();
  std::set<int> removed_durations;
};

struct MetricRow {
  std::string method;
  std::string param;   // "beta" or "theta"
  int d = 0;
  int t = 0;           // exposure day for beta, lag for theta
  std::string metric;  // pct_bias | abs_bias | rmse | coverage
  double value = 0.0;
};

struct StudyResult {
  ParameterSet truth;
  std::vector<std::string> coefficient_names;
  std::vector<MetricRow> rows;
  long n_failures = 0;
  std::vector<std::string> failure_messages;  // first few, for the provenance record
  // replicate-level raw results per method, NaN where a replicate failed
  std::map<std::string, Eigen::MatrixXd> estimates;
  std::map<std::string, Eigen::MatrixXd> lowers;
  std::map<std::string, Eigen::MatrixXd> uppers;
};

// Truth generated once from the master seed; each replicate re-simulates the
// dataset and fits every requested method with its own derived seed.
// Replicates fill preallocated slots, so the result is identical for any
// n_jobs.  Individual replicate failures are recorded, not fatal.
StudyResult run_study(const StudyProtocol& protocol);

std::string report_csv_string(const StudyResult& result, const std::string& config_text);

}  // namespace edvcm
