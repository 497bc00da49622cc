#include "edvcm/glm.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "edvcm/errors.hpp"

namespace edvcm {

namespace {

constexpr double kWaldZ = 1.959964;  // Phi^-1(0.975)
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPinned = 30.0;  // stand-in for a separated coordinate

// Day index of the exposure-day unit, or -1 for every other role.
int design_slot(const ExposureUnit& u) {
  return u.role == UnitRole::exposure_day ? u.day_index - 1 : -1;
}

struct Objective {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hessian;
};

Objective evaluate(const std::vector<const Stratum*>& strata, const Eigen::VectorXd& beta) {
  const Eigen::Index d = beta.size();
  Objective out;
  out.grad = Eigen::VectorXd::Zero(d);
  out.hessian = Eigen::MatrixXd::Zero(d, d);
  for (const Stratum* s : strata) {
    if (s->total_count == 0) continue;
    const auto n = s->units.size();
    Eigen::VectorXd eta(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
      const auto& u = s->units[j];
      const int slot = design_slot(u);
      eta[static_cast<Eigen::Index>(j)] =
          (slot >= 0 ? beta[slot] : 0.0) + u.log_person_time;
    }
    const double m = eta.maxCoeff();
    const double lse = m + std::log((eta.array() - m).exp().sum());
    const double w = static_cast<double>(s->total_count);

    Eigen::VectorXd pi_slot = Eigen::VectorXd::Zero(d);  // pi of each exposure day
    for (std::size_t j = 0; j < n; ++j) {
      const auto& u = s->units[j];
      const double log_pi = eta[static_cast<Eigen::Index>(j)] - lse;
      out.value += static_cast<double>(u.count) * log_pi;
      const int slot = design_slot(u);
      if (slot >= 0) {
        const double pi = std::exp(log_pi);
        pi_slot[slot] += pi;
        out.grad[slot] += static_cast<double>(u.count) - w * pi;
      }
    }
    out.hessian -= w * (Eigen::MatrixXd(pi_slot.asDiagonal()) -
                        pi_slot * pi_slot.transpose());
  }
  return out;
}

}  // namespace

GlmFit fit_frequentist_glm(const AnalyticDataset& data, int duration) {
  if (data.covariate_dim > 0) {
    throw input_error("the frequentist comparator does not support covariates");
  }
  std::vector<const Stratum*> strata;
  for (const auto& s : data.strata) {
    if (s.duration == duration) strata.push_back(&s);
  }
  if (strata.empty()) {
    throw input_error("no strata of duration " + std::to_string(duration));
  }

  GlmFit fit;
  fit.duration = duration;
  fit.estimate = Eigen::VectorXd::Zero(duration);
  fit.std_error = Eigen::VectorXd::Constant(duration, kInf);
  fit.ci_lower = Eigen::VectorXd::Constant(duration, -kInf);
  fit.ci_upper = Eigen::VectorXd::Constant(duration, kInf);
  fit.flags.assign(static_cast<std::size_t>(duration), GlmFlag::ok);

  // Separation pre-check: per exposure day, total events on that day versus
  // events elsewhere in its strata.
  Eigen::VectorXd on_day = Eigen::VectorXd::Zero(duration);
  double total = 0.0;
  for (const Stratum* s : strata) {
    total += static_cast<double>(s->total_count);
    for (const auto& u : s->units) {
      const int slot = design_slot(u);
      if (slot >= 0) on_day[slot] += static_cast<double>(u.count);
    }
  }
  if (total == 0.0) {
    fit.flags.assign(static_cast<std::size_t>(duration), GlmFlag::non_identifiable);
    fit.estimate.setConstant(std::numeric_limits<double>::quiet_NaN());
    return fit;
  }
  std::vector<int> free_slots;
  for (int t = 0; t < duration; ++t) {
    if (on_day[t] == 0.0) {
      fit.flags[static_cast<std::size_t>(t)] = GlmFlag::separated_low;
      fit.estimate[t] = -kInf;
      fit.ci_upper[t] = -kInf;
    } else if (on_day[t] == total) {
      fit.flags[static_cast<std::size_t>(t)] = GlmFlag::separated_high;
      fit.estimate[t] = kInf;
      fit.ci_lower[t] = kInf;
    } else {
      free_slots.push_back(t);
    }
  }
  if (free_slots.empty()) return fit;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(duration);
  for (int t = 0; t < duration; ++t) {
    if (fit.flags[static_cast<std::size_t>(t)] == GlmFlag::separated_low) {
      beta[t] = -kPinned;
    } else if (fit.flags[static_cast<std::size_t>(t)] == GlmFlag::separated_high) {
      beta[t] = kPinned;
    }
  }

  const auto nf = static_cast<Eigen::Index>(free_slots.size());
  Objective cur = evaluate(strata, beta);
  for (fit.iterations = 0; fit.iterations < 100; ++fit.iterations) {
    Eigen::VectorXd g(nf);
    Eigen::MatrixXd h(nf, nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
      g[a] = cur.grad[free_slots[static_cast<std::size_t>(a)]];
      for (Eigen::Index b = 0; b < nf; ++b) {
        h(a, b) = cur.hessian(free_slots[static_cast<std::size_t>(a)],
                              free_slots[static_cast<std::size_t>(b)]);
      }
    }
    if (g.lpNorm<Eigen::Infinity>() < 1e-8) {
      fit.converged = true;
      break;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(-h);
    if (!lu.isInvertible()) {
      throw numeric_error("singular observed information for duration " +
                          std::to_string(duration));
    }
    const Eigen::VectorXd step = lu.solve(g);
    double scale = 1.0;
    for (int half = 0; half < 40; ++half) {
      Eigen::VectorXd cand = beta;
      for (Eigen::Index a = 0; a < nf; ++a) {
        cand[free_slots[static_cast<std::size_t>(a)]] += scale * step[a];
      }
      const Objective next = evaluate(strata, cand);
      // Near the optimum the true improvement can sit below the rounding
      // noise of the summed log-likelihood; a strict increase test would
      // stall the final Newton steps, so allow a noise-level decrease.
      if (std::isfinite(next.value) &&
          next.value >= cur.value - 1e-12 * (1.0 + std::abs(cur.value))) {
        beta = cand;
        cur = next;
        break;
      }
      scale *= 0.5;
    }
  }

  Eigen::MatrixXd info(nf, nf);
  for (Eigen::Index a = 0; a < nf; ++a) {
    for (Eigen::Index b = 0; b < nf; ++b) {
      info(a, b) = -cur.hessian(free_slots[static_cast<std::size_t>(a)],
                                free_slots[static_cast<std::size_t>(b)]);
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  if (!lu.isInvertible()) {
    throw numeric_error("singular observed information for duration " +
                        std::to_string(duration));
  }
  const Eigen::MatrixXd cov = lu.inverse();
  for (Eigen::Index a = 0; a < nf; ++a) {
    const int t = free_slots[static_cast<std::size_t>(a)];
    fit.estimate[t] = beta[t];
    fit.std_error[t] = std::sqrt(cov(a, a));
    fit.ci_lower[t] = beta[t] - kWaldZ * fit.std_error[t];
    fit.ci_upper[t] = beta[t] + kWaldZ * fit.std_error[t];
  }
  return fit;
}

}  // namespace edvcm
