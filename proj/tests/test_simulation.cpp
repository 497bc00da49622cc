#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "edvcm/glm.hpp"
#include "edvcm/simulate.hpp"
#include "edvcm/study.hpp"
#include "edvcm/surface.hpp"
#include "helpers.hpp"

using namespace edvcm;

namespace {

double sample_variance(const Eigen::VectorXd& v) {
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

SamplerConfig tiny_sampler() {
  SamplerConfig c;
  c.n_chains = 1;
  c.n_warmup = 60;
  c.n_samples = 60;
  c.max_leapfrog_steps = 8;
  return c;
}

}  // namespace

TEST_CASE("surfaces are deterministic in the seed") {
  SurfaceSpec spec;
  spec.max_duration = 6;
  spec.noise_fraction = 0.25;
  spec.seed = 42;
  const CoefficientGrid a = generate_true_surface(spec);
  const CoefficientGrid b = generate_true_surface(spec);
  CHECK((a.values.array() == b.values.array()).all());

  spec.seed = 43;
  const CoefficientGrid c = generate_true_surface(spec);
  CHECK((a.values.array() != c.values.array()).any());
}

TEST_CASE("noise-free surfaces have exactly the requested spread") {
  SurfaceSpec spec;
  spec.max_duration = 8;
  spec.noise_fraction = 0.0;
  spec.surface_sd = 0.1;
  spec.seed = 7;
  const CoefficientGrid g = generate_true_surface(spec);
  REQUIRE(g.values.size() == 36);
  CHECK(std::abs(g.values.mean()) < 1e-12);
  CHECK(sample_variance(g.values) == doctest::Approx(0.01).epsilon(1e-10));
}

TEST_CASE("noise adds the advertised variance on top of the spline") {
  SurfaceSpec smooth;
  smooth.max_duration = 14;
  smooth.noise_fraction = 0.0;
  smooth.surface_sd = 0.1;

  double ratio_sum = 0.0;
  const int n_seeds = 40;
  for (int s = 0; s < n_seeds; ++s) {
    smooth.seed = 100 + s;
    SurfaceSpec noisy = smooth;
    noisy.noise_fraction = 1.0;
    const CoefficientGrid base = generate_true_surface(smooth);
    const CoefficientGrid with = generate_true_surface(noisy);
    const Eigen::VectorXd diff = with.values - base.values;
    ratio_sum += sample_variance(diff) / sample_variance(base.values);
  }
  CHECK(ratio_sum / n_seeds == doctest::Approx(1.0).epsilon(0.25));
}

TEST_CASE("degenerate grids fall back gracefully") {
  SurfaceSpec spec;
  spec.max_duration = 1;
  spec.seed = 1;
  const CoefficientGrid g = generate_true_surface(spec);  // warns, zero surface
  REQUIRE(g.values.size() == 1);
  CHECK(g.values[0] == 0.0);

  SurfaceSpec small;
  small.max_duration = 2;
  small.noise_fraction = 0.0;
  small.seed = 9;
  const CoefficientGrid s = generate_true_surface(small);  // knots capped at 3 cells
  CHECK(s.values.allFinite());

  CHECK_THROWS_AS(generate_true_surface(SurfaceSpec{0, 0.25, 5, 0.1, 1}), input_error);
  CHECK_THROWS_AS(generate_true_surface(SurfaceSpec{3, -0.5, 5, 0.1, 1}), input_error);
}

TEST_CASE("lag surface covers the rectangle deterministically") {
  const LagCoefficientGrid a = generate_true_lag_surface(4, 3, 0.25, 0.1, 11);
  const LagCoefficientGrid b = generate_true_lag_surface(4, 3, 0.25, 0.1, 11);
  REQUIRE(a.values.size() == 12);
  CHECK((a.values.array() == b.values.array()).all());
  const LagCoefficientGrid zero_noise = generate_true_lag_surface(5, 4, 0.0, 0.2, 3);
  CHECK(sample_variance(zero_noise.values) == doctest::Approx(0.04).epsilon(1e-10));
  CHECK_THROWS_AS(generate_true_lag_surface(0, 3, 0.25, 0.1, 1), input_error);
}

TEST_CASE("simulated datasets have the layout's shape") {
  LayoutSpec layout;
  layout.events_per_duration = {3, 2, 4};
  layout.n_control_years = 2;
  layout.lag_days = 2;
  layout.baseline_rate = 2.0;
  ParameterSet truth = make_parameter_set(3, 2, 0);
  const AnalyticDataset data = simulate_dataset(layout, truth, 77);

  CHECK(data.max_duration == 3);
  CHECK(data.max_lag == 2);
  std::map<int, int> by_duration;
  for (const auto& s : data.strata) {
    ++by_duration[s.duration];
    CHECK(s.units.size() ==
          static_cast<std::size_t>((1 + layout.n_control_years) *
                                   (s.duration + layout.lag_days)));
    int exposure_days = 0, lag_days = 0, controls = 0;
    for (const auto& u : s.units) {
      if (u.role == UnitRole::exposure_day) ++exposure_days;
      if (u.role == UnitRole::lag_day) ++lag_days;
      if (!is_event_period(u.role)) ++controls;
      CHECK(u.person_time == layout.person_time);
    }
    CHECK(exposure_days == s.duration);
    CHECK(lag_days == layout.lag_days);
    CHECK(controls == layout.n_control_years * (s.duration + layout.lag_days));
  }
  CHECK(by_duration[1] == 3);
  CHECK(by_duration[2] == 2);
  CHECK(by_duration[3] == 4);

  const AnalyticDataset again = simulate_dataset(layout, truth, 77);
  CHECK(again.total_units() == data.total_units());
  for (std::size_t s = 0; s < data.strata.size(); ++s)
    for (std::size_t u = 0; u < data.strata[s].units.size(); ++u)
      CHECK(again.strata[s].units[u].count == data.strata[s].units[u].count);
}

TEST_CASE("zero baseline rate produces an all-zero dataset") {
  LayoutSpec layout;
  layout.events_per_duration = {2, 2};
  layout.baseline_rate = 0.0;
  ParameterSet truth = make_parameter_set(2, 0, 0);
  const AnalyticDataset data = simulate_dataset(layout, truth, 1);
  for (const auto& s : data.strata) CHECK(s.total_count == 0);
  CHECK(data.zero_total_strata.size() == data.strata.size());
}

TEST_CASE("count shares converge to the model probabilities") {
  // Null truth, 1 exposed day + 2 controls: each unit expects 1/3.
  LayoutSpec layout;
  layout.events_per_duration = {4000};
  layout.baseline_rate = 3.0;
  ParameterSet truth = make_parameter_set(1, 0, 0);
  const AnalyticDataset data = simulate_dataset(layout, truth, 2025);
  long exposed = 0, total = 0;
  for (const auto& s : data.strata) {
    for (const auto& u : s.units) {
      total += u.count;
      if (u.role == UnitRole::exposure_day) exposed += u.count;
    }
  }
  const double p = 1.0 / 3.0;
  const double se = std::sqrt(p * (1 - p) / static_cast<double>(total));
  CHECK(std::abs(static_cast<double>(exposed) / total - p) < 3.0 * se);

  // beta = log 2 with one control year: exposed share 2/3.
  LayoutSpec pair;
  pair.events_per_duration = {4000};
  pair.n_control_years = 1;
  pair.baseline_rate = 3.0;
  ParameterSet two = make_parameter_set(1, 0, 0);
  two.beta(1, 1) = std::log(2.0);
  const AnalyticDataset updata = simulate_dataset(pair, two, 2026);
  exposed = total = 0;
  for (const auto& s : updata.strata) {
    for (const auto& u : s.units) {
      total += u.count;
      if (u.role == UnitRole::exposure_day) exposed += u.count;
    }
  }
  const double p2 = 2.0 / 3.0;
  const double se2 = std::sqrt(p2 * (1 - p2) / static_cast<double>(total));
  CHECK(std::abs(static_cast<double>(exposed) / total - p2) < 3.0 * se2);
}

TEST_CASE("metric formulas on hand-checked cases") {
  // exact estimates with degenerate intervals
  CoefficientMetrics exact = compute_metrics({1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}, 1.0);
  CHECK(exact.bias == 0.0);
  CHECK_FALSE(exact.bias_is_absolute);
  CHECK(exact.rmse == 0.0);
  CHECK(exact.coverage == 1.0);

  CoefficientMetrics sym =
      compute_metrics({0.9, 1.1}, {0.5, 0.5}, {1.5, 1.5}, 1.0);
  CHECK(sym.bias == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sym.rmse == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(sym.coverage == 1.0);

  // zero truth switches to absolute bias
  CoefficientMetrics zero = compute_metrics({0.2, 0.0}, {-1.0, -1.0}, {1.0, 1.0}, 0.0);
  CHECK(zero.bias_is_absolute);
  CHECK(zero.bias == doctest::Approx(0.1).epsilon(1e-12));

  // intervals that always miss
  CoefficientMetrics miss = compute_metrics({2.0, 2.1}, {1.9, 1.9}, {2.5, 2.5}, 1.0);
  CHECK(miss.coverage == 0.0);

  CHECK_THROWS_AS(compute_metrics({}, {}, {}, 1.0), input_error);
  CHECK_THROWS_AS(compute_metrics({1.0}, {}, {1.0}, 1.0), input_error);
}

TEST_CASE("rmse decomposes into bias and variance") {
  Rng rng(55);
  std::vector<double> est, lo, hi;
  for (int i = 0; i < 200; ++i) {
    est.push_back(0.7 + 0.3 * rng.normal());
    lo.push_back(est.back() - 0.5);
    hi.push_back(est.back() + 0.5);
  }
  const double truth = 0.5;
  const CoefficientMetrics m = compute_metrics(est, lo, hi, truth);
  double mean = 0.0;
  for (double e : est) mean += e;
  mean /= est.size();
  double var = 0.0;
  for (double e : est) var += (e - mean) * (e - mean);
  var /= est.size();
  const double bias_abs = mean - truth;
  CHECK(m.rmse * m.rmse ==
        doctest::Approx(bias_abs * bias_abs + var).epsilon(1e-12));
}

TEST_CASE("geometric event counts decay and floor at one") {
  const std::vector<long> counts = geometric_event_counts(3, 120, 0.8);
  CHECK(counts == std::vector<long>{120, 96, 77});
  const std::vector<long> tail = geometric_event_counts(14, 5, 0.5);
  CHECK(tail[0] == 5);
  CHECK(tail[13] == 1);  // floored
  for (std::size_t i = 1; i < tail.size(); ++i) CHECK(tail[i] <= tail[i - 1]);
}

TEST_CASE("removing durations keeps the coefficient grid intact") {
  LayoutSpec layout;
  layout.events_per_duration = {2, 2, 2, 2, 2};
  layout.baseline_rate = 2.0;
  ParameterSet truth = make_parameter_set(5, 0, 0);
  const AnalyticDataset data = simulate_dataset(layout, truth, 8);

  const AnalyticDataset same = remove_durations(data, {});
  CHECK(same.strata.size() == data.strata.size());

  const AnalyticDataset cut = remove_durations(data, {3});
  CHECK(cut.max_duration == 5);
  for (const auto& s : cut.strata) CHECK(s.duration != 3);
  CHECK(cut.strata.size() == data.strata.size() - 2);

  CHECK_THROWS_AS(remove_durations(data, {1, 2, 3, 4, 5}), input_error);
}

TEST_CASE("bayes fitters return the full coefficient block") {
  Rng rng(66);
  LayoutSpec layout;
  layout.events_per_duration = {6, 5};
  layout.baseline_rate = 3.0;
  ParameterSet truth = make_parameter_set(2, 0, 0);
  truth.beta(1, 1) = 0.2;
  const AnalyticDataset data = simulate_dataset(layout, truth, 31);

  SamplerConfig sampler = tiny_sampler();
  sampler.seed = 5;
  const CoefficientFit gp = fit_edvcm(data, simulation_preset(), sampler);
  REQUIRE(gp.estimate.size() == 3);
  CHECK(gp.estimate.allFinite());
  CHECK((gp.lower.array() <= gp.estimate.array()).all());
  CHECK((gp.estimate.array() <= gp.upper.array()).all());

  const CoefficientFit indep = fit_independent_normal(data, sampler);
  REQUIRE(indep.estimate.size() == 3);
  CHECK(indep.estimate.allFinite());
}

TEST_CASE("posterior means approach the MLE when the prior washes out") {
  LayoutSpec layout;
  layout.events_per_duration = {400};
  layout.baseline_rate = 4.0;
  ParameterSet truth = make_parameter_set(1, 0, 0);
  truth.beta(1, 1) = 0.3;
  const AnalyticDataset data = simulate_dataset(layout, truth, 404);

  const GlmFit mle = fit_frequentist_glm(data, 1);
  REQUIRE(mle.converged);

  SamplerConfig sampler;
  sampler.n_chains = 2;
  sampler.n_warmup = 300;
  sampler.n_samples = 500;
  sampler.max_leapfrog_steps = 16;
  sampler.seed = 12;
  const CoefficientFit bayes = fit_independent_normal(data, sampler);
  CHECK(std::abs(bayes.estimate[0] - mle.estimate[0]) < 0.02);
}

TEST_CASE("per-duration GLM grid leaves unobserved cells empty") {
  LayoutSpec layout;
  layout.events_per_duration = {0, 30};
  layout.baseline_rate = 3.0;
  ParameterSet truth = make_parameter_set(2, 0, 0);
  const AnalyticDataset data = simulate_dataset(layout, truth, 13);
  const CoefficientFit fit = fit_frequentist_all(data);
  REQUIRE(fit.estimate.size() == 3);
  CHECK(std::isnan(fit.estimate[grid_index(1, 1, 2)]));
  CHECK(std::isfinite(fit.estimate[grid_index(2, 1, 2)]));
  CHECK(std::isfinite(fit.estimate[grid_index(2, 2, 2)]));
}

TEST_CASE("studies are reproducible for any worker count") {
  StudyProtocol protocol;
  protocol.surface.max_duration = 2;
  protocol.surface.noise_fraction = 0.25;
  protocol.layout.events_per_duration = {4, 3};
  protocol.layout.baseline_rate = 3.0;
  protocol.methods = {"edvcm", "freq-glm"};
  protocol.n_sim = 3;
  protocol.seed = 2001;
  protocol.sampler = tiny_sampler();

  protocol.n_jobs = 1;
  const StudyResult serial = run_study(protocol);
  protocol.n_jobs = 3;
  const StudyResult parallel = run_study(protocol);

  REQUIRE(serial.rows.size() == parallel.rows.size());
  for (std::size_t i = 0; i < serial.rows.size(); ++i) {
    CHECK(serial.rows[i].method == parallel.rows[i].method);
    CHECK(serial.rows[i].metric == parallel.rows[i].metric);
    CHECK(serial.rows[i].value == parallel.rows[i].value);
  }
  CHECK(serial.n_failures == 0);
}

TEST_CASE("study reports cover the full triangle per method and metric") {
  StudyProtocol protocol;
  protocol.surface.max_duration = 2;
  protocol.layout.events_per_duration = {3, 3};
  protocol.layout.baseline_rate = 3.0;
  protocol.methods = {"edvcm", "indep-normal", "freq-glm"};
  protocol.n_sim = 1;
  protocol.seed = 7;
  protocol.sampler = tiny_sampler();
  const StudyResult result = run_study(protocol);

  std::map<std::string, std::map<std::string, int>> cells;
  for (const auto& row : result.rows) {
    if (row.param != "beta") continue;
    ++cells[row.method][row.metric];
  }
  for (const char* method : {"edvcm", "indep-normal", "freq-glm"}) {
    CHECK(cells[method]["rmse"] == 3);
    CHECK(cells[method]["coverage"] == 3);
    const int bias_cells = cells[method]["pct_bias"] + cells[method]["abs_bias"];
    CHECK(bias_cells == 3);
  }

  CHECK_THROWS_AS(run_study([] {
    StudyProtocol p;
    p.methods = {"unknown"};
    return p;
  }()), input_error);
  CHECK_THROWS_AS(run_study([] {
    StudyProtocol p;
    p.n_sim = 0;
    return p;
  }()), input_error);
}

TEST_CASE("lagged studies aggregate theta cells too") {
  StudyProtocol protocol;
  protocol.surface.max_duration = 2;
  protocol.layout.events_per_duration = {3, 2};
  protocol.layout.lag_days = 2;
  protocol.layout.baseline_rate = 3.0;
  protocol.methods = {"edvcm"};
  protocol.n_sim = 2;
  protocol.seed = 88;
  protocol.sampler = tiny_sampler();
  const StudyResult result = run_study(protocol);

  int theta_rmse = 0;
  for (const auto& row : result.rows) {
    if (row.param == "theta" && row.metric == "rmse") ++theta_rmse;
  }
  CHECK(theta_rmse == 4);  // 2 durations x 2 lags
}
