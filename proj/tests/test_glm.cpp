#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "edvcm/glm.hpp"
#include "edvcm/likelihood.hpp"
#include "edvcm/rng.hpp"
#include "edvcm/simulate.hpp"
#include "helpers.hpp"

using namespace edvcm;
using edvcm_test::make_unit;

namespace {

AnalyticDataset one_stratum_d1(long exposed, long control_a, long control_b) {
  std::vector<ExposureUnit> units;
  units.push_back(make_unit("t1", "s", 1, UnitRole::exposure_day, 1, 0, exposed));
  units.push_back(make_unit("c1", "s", 1, UnitRole::control_exposure_day, 1, 0, control_a));
  units.push_back(make_unit("c2", "s", 1, UnitRole::control_exposure_day, 1, 0, control_b));
  return validate_dataset(std::move(units));
}

}  // namespace

TEST_CASE("single-duration MLE has the closed form log 4 at a 2/3 exposed share") {
  const AnalyticDataset data = one_stratum_d1(2000, 500, 500);
  const GlmFit fit = fit_frequentist_glm(data, 1);
  REQUIRE(fit.converged);
  REQUIRE(fit.estimate.size() == 1);
  CHECK(fit.flags[0] == GlmFlag::ok);
  CHECK(fit.estimate[0] == doctest::Approx(std::log(4.0)).epsilon(1e-8));
  CHECK(fit.std_error[0] > 0.0);
  CHECK(fit.ci_lower[0] < fit.estimate[0]);
  CHECK(fit.ci_upper[0] > fit.estimate[0]);
}

TEST_CASE("gradient vanishes at the fitted coefficients") {
  Rng rng(7);
  LayoutSpec layout;
  layout.events_per_duration = {0, 40};  // duration-2 strata only
  layout.baseline_rate = 3.0;
  ParameterSet truth = make_parameter_set(2, 0, 0);
  truth.beta(2, 1) = 0.4;
  truth.beta(2, 2) = -0.2;
  const AnalyticDataset data = simulate_dataset(layout, truth, 99);

  const GlmFit fit = fit_frequentist_glm(data, 2);
  REQUIRE(fit.converged);
  ParameterSet at = make_parameter_set(2, 0, 0);
  at.beta(2, 1) = fit.estimate[0];
  at.beta(2, 2) = fit.estimate[1];
  const LikelihoodGradient g = log_likelihood_gradient(data, at);
  CHECK(std::abs(g.d_beta[grid_index(2, 1, 2)]) < 1e-7);
  CHECK(std::abs(g.d_beta[grid_index(2, 2, 2)]) < 1e-7);
}

TEST_CASE("standard errors match the finite-difference observed information") {
  const AnalyticDataset data = one_stratum_d1(300, 80, 120);
  const GlmFit fit = fit_frequentist_glm(data, 1);
  REQUIRE(fit.converged);

  auto loglik = [&](double b) {
    ParameterSet p = make_parameter_set(1, 0, 0);
    p.beta(1, 1) = b;
    return conditional_log_likelihood(data, p);
  };
  const double b = fit.estimate[0];
  const double h = 1e-4;
  const double info = -(loglik(b + h) - 2.0 * loglik(b) + loglik(b - h)) / (h * h);
  CHECK(fit.std_error[0] == doctest::Approx(1.0 / std::sqrt(info)).epsilon(1e-5));
  // Wald interval at the normal 97.5% point
  CHECK(fit.ci_upper[0] - fit.estimate[0] ==
        doctest::Approx(1.959964 * fit.std_error[0]).epsilon(1e-5));
}

TEST_CASE("three-sigma Wald intervals cover the truth in nearly all replicates") {
  LayoutSpec layout;
  layout.events_per_duration = {0, 500};
  layout.baseline_rate = 2.0;
  ParameterSet truth = make_parameter_set(2, 0, 0);
  truth.beta(2, 1) = 0.3;
  truth.beta(2, 2) = -0.1;

  int covered = 0, total = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const AnalyticDataset data = simulate_dataset(layout, truth, 1000 + rep);
    const GlmFit fit = fit_frequentist_glm(data, 2);
    if (!fit.converged) continue;
    ++total;
    const bool ok1 = std::abs(fit.estimate[0] - 0.3) < 3.0 * fit.std_error[0];
    const bool ok2 = std::abs(fit.estimate[1] + 0.1) < 3.0 * fit.std_error[1];
    if (ok1 && ok2) ++covered;
  }
  REQUIRE(total >= 95);
  CHECK(static_cast<double>(covered) / total >= 0.95);
}

TEST_CASE("zero-count data is flagged non-identifiable") {
  const AnalyticDataset data = one_stratum_d1(0, 0, 0);
  const GlmFit fit = fit_frequentist_glm(data, 1);
  CHECK_FALSE(fit.converged);
  REQUIRE(fit.flags.size() == 1);
  CHECK(fit.flags[0] == GlmFlag::non_identifiable);
}

TEST_CASE("separation pins the estimate at the correct infinity") {
  // all events on the exposed day
  const AnalyticDataset high = one_stratum_d1(50, 0, 0);
  const GlmFit f_high = fit_frequentist_glm(high, 1);
  CHECK(f_high.flags[0] == GlmFlag::separated_high);
  CHECK(std::isinf(f_high.estimate[0]));
  CHECK(f_high.estimate[0] > 0.0);

  // no events on the exposed day
  const AnalyticDataset low = one_stratum_d1(0, 30, 20);
  const GlmFit f_low = fit_frequentist_glm(low, 1);
  CHECK(f_low.flags[0] == GlmFlag::separated_low);
  CHECK(std::isinf(f_low.estimate[0]));
  CHECK(f_low.estimate[0] < 0.0);
}

TEST_CASE("requesting an absent duration or covariates fails loudly") {
  const AnalyticDataset plain = one_stratum_d1(5, 3, 2);
  CHECK_THROWS_AS(fit_frequentist_glm(plain, 2), input_error);

  Rng rng(11);
  const AnalyticDataset with_cov = edvcm_test::random_dataset(rng, 2, 3, 1);
  CHECK_THROWS_AS(fit_frequentist_glm(with_cov, 2), input_error);
}

TEST_CASE("estimates are invariant to person-time scaling of whole strata") {
  Rng rng(13);
  LayoutSpec layout;
  layout.events_per_duration = {0, 0, 30};
  layout.baseline_rate = 2.0;
  ParameterSet truth = make_parameter_set(3, 0, 0);
  truth.beta(3, 1) = 0.2;
  truth.beta(3, 2) = 0.1;
  truth.beta(3, 3) = -0.3;
  const AnalyticDataset data = simulate_dataset(layout, truth, 5);
  const GlmFit base = fit_frequentist_glm(data, 3);
  REQUIRE(base.converged);

  AnalyticDataset scaled = data;
  for (auto& s : scaled.strata) {
    for (auto& u : s.units) {
      u.person_time *= 7.5;
      u.log_person_time += std::log(7.5);
    }
  }
  const GlmFit moved = fit_frequentist_glm(scaled, 3);
  REQUIRE(moved.converged);
  CHECK((base.estimate - moved.estimate).cwiseAbs().maxCoeff() < 1e-7);
}
