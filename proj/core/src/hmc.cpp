#include "edvcm/hmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "edvcm/errors.hpp"
#include "edvcm/threading.hpp"

namespace edvcm {

namespace {

constexpr double kDivergenceNats = 1000.0;

double kinetic_energy(const Eigen::VectorXd& momentum, const Eigen::VectorXd& inv_mass) {
  return 0.5 * momentum.dot(inv_mass.cwiseProduct(momentum));
}

Eigen::VectorXd sample_momentum(Rng& rng, const Eigen::VectorXd& inv_mass) {
  Eigen::VectorXd p(inv_mass.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    p[i] = rng.normal() / std::sqrt(inv_mass[i]);
  }
  return p;
}

// Nesterov dual averaging of log step size (Hoffman & Gelman defaults).
struct DualAveraging {
  double mu = 0.0;
  double log_eps = 0.0;
  double log_eps_bar = 0.0;
  double h_bar = 0.0;
  int iter = 0;
  static constexpr double gamma = 0.05;
  static constexpr double t0 = 10.0;
  static constexpr double kappa = 0.75;

  void reset(double eps) {
    mu = std::log(10.0 * eps);
    log_eps = std::log(eps);
    log_eps_bar = 0.0;
    h_bar = 0.0;
    iter = 0;
  }
  void update(double accept_prob, double target) {
    ++iter;
    const double m = static_cast<double>(iter);
    h_bar = (1.0 - 1.0 / (m + t0)) * h_bar + (target - accept_prob) / (m + t0);
    log_eps = mu - std::sqrt(m) / gamma * h_bar;
    const double w = std::pow(m, -kappa);
    log_eps_bar = w * log_eps + (1.0 - w) * log_eps_bar;
  }
  double current() const { return std::exp(log_eps); }
  double averaged() const { return std::exp(log_eps_bar); }
};

struct Transition {
  double accept_prob = 0.0;
  bool divergent = false;
  bool accepted = false;
};

class ChainRunner {
 public:
  ChainRunner(const GradientTarget& target, Eigen::VectorXd position, Rng rng,
              const SamplerConfig& config)
      : target_(target),
        rng_(std::move(rng)),
        config_(config),
        position_(std::move(position)),
        inv_mass_(Eigen::VectorXd::Ones(position_.size())) {
    current_ = target_.eval(position_);
    if (!current_.finite) {
      throw numeric_error("initial log posterior is not finite");
    }
  }

  Transition step(double step_size) {
    const Eigen::VectorXd p0 = sample_momentum(rng_, inv_mass_);
    const int n_steps = static_cast<int>(
        rng_.uniform_int(1, static_cast<long>(config_.max_leapfrog_steps)));
    LeapfrogState state;
    state.position = position_;
    state.momentum = p0;
    state.log_density = current_.value;
    state.grad = current_.grad;
    state.finite = current_.finite;
    const double h0 = -state.log_density + kinetic_energy(p0, inv_mass_);
    state = integrate(std::move(state), step_size, n_steps);

    Transition tr;
    if (!state.finite) {
      tr.divergent = true;
      return tr;
    }
    const double h1 = -state.log_density + kinetic_energy(state.momentum, inv_mass_);
    const double delta_h = h1 - h0;
    if (!std::isfinite(delta_h) || delta_h > kDivergenceNats) {
      tr.divergent = true;
      return tr;
    }
    tr.accept_prob = std::min(1.0, std::exp(-delta_h));
    if (rng_.uniform(0.0, 1.0) < tr.accept_prob) {
      position_ = state.position;
      current_.value = state.log_density;
      current_.grad = state.grad;
      tr.accepted = true;
    }
    return tr;
  }

  // Doubling heuristic for a starting step size: one leapfrog step, then
  // double or halve until the acceptance ratio crosses 1/2.
  double find_reasonable_step_size() {
    double eps = 0.1;
    const Eigen::VectorXd p0 = sample_momentum(rng_, inv_mass_);
    const double h0 = -current_.value + kinetic_energy(p0, inv_mass_);
    auto log_ratio = [&](double e) {
      LeapfrogState s;
      s.position = position_;
      s.momentum = p0;
      s.log_density = current_.value;
      s.grad = current_.grad;
      s.finite = current_.finite;
      s = integrate(std::move(s), e, 1);
      if (!s.finite) return -std::numeric_limits<double>::infinity();
      return h0 - (-s.log_density + kinetic_energy(s.momentum, inv_mass_));
    };
    double lr = log_ratio(eps);
    while (!std::isfinite(lr) && eps > 1e-10) {
      eps *= 0.5;
      lr = log_ratio(eps);
    }
    const double direction = lr > std::log(0.5) ? 1.0 : -1.0;
    for (int i = 0; i < 50; ++i) {
      if (direction > 0 && lr <= std::log(0.5)) break;
      if (direction < 0 && lr >= std::log(0.5)) break;
      eps *= direction > 0 ? 2.0 : 0.5;
      lr = log_ratio(eps);
      if (!std::isfinite(lr) && direction > 0) {
        eps *= 0.5;
        break;
      }
    }
    return std::clamp(eps, 1e-10, 1e3);
  }

  void set_inv_mass(Eigen::VectorXd inv_mass) { inv_mass_ = std::move(inv_mass); }
  const Eigen::VectorXd& position() const { return position_; }
  Rng& rng() { return rng_; }

 private:
  LeapfrogState integrate(LeapfrogState s, double step_size, int n_steps) const {
    return leapfrog_impl(target_, std::move(s), inv_mass_, step_size, n_steps);
  }

  static LeapfrogState leapfrog_impl(const GradientTarget& target, LeapfrogState s,
                                     const Eigen::VectorXd& inv_mass, double step_size,
                                     int n_steps) {
    if (!s.finite) return s;
    for (int i = 0; i < n_steps; ++i) {
      s.momentum += 0.5 * step_size * s.grad;
      s.position += step_size * inv_mass.cwiseProduct(s.momentum);
      const auto eval = target.eval(s.position);
      if (!eval.finite) {
        s.finite = false;
        return s;
      }
      s.log_density = eval.value;
      s.grad = eval.grad;
      s.momentum += 0.5 * step_size * s.grad;
    }
    s.finite = s.position.allFinite() && s.momentum.allFinite();
    return s;
  }

  const GradientTarget& target_;
  Rng rng_;
  SamplerConfig config_;
  Eigen::VectorXd position_;
  Eigen::VectorXd inv_mass_;
  PosteriorModel::Eval current_;
};

struct ChainOutput {
  Eigen::MatrixXd unconstrained;  // n_samples x dim
  ChainStats stats;
};

ChainOutput run_chain(const GradientTarget& target, Eigen::VectorXd init, Rng rng,
                      const SamplerConfig& config) {
  const Eigen::Index dim = init.size();
  ChainRunner runner(target, std::move(init), std::move(rng), config);

  const int warmup = config.n_warmup;
  // Mass adaptation needs enough draws to be better than identity.
  const bool adapt_mass = warmup >= 20;
  const int collect_start = adapt_mass ? warmup / 2 : warmup;
  const int collect_end = adapt_mass ? collect_start + (warmup - collect_start) / 2 : warmup;

  DualAveraging da;
  da.reset(runner.find_reasonable_step_size());

  Eigen::MatrixXd collected;
  if (adapt_mass) collected.resize(collect_end - collect_start, dim);

  for (int it = 0; it < warmup; ++it) {
    const Transition tr = runner.step(da.current());
    da.update(tr.accept_prob, config.target_accept);
    if (adapt_mass && it >= collect_start && it < collect_end) {
      collected.row(it - collect_start) = runner.position().transpose();
    }
    if (adapt_mass && it == collect_end - 1) {
      const Eigen::Index n = collected.rows();
      const Eigen::RowVectorXd mean = collected.colwise().mean();
      Eigen::VectorXd var =
          ((collected.rowwise() - mean).colwise().squaredNorm() /
           static_cast<double>(n - 1))
              .transpose();
      const double nn = static_cast<double>(n);
      var = (nn / (nn + 5.0)) * var;
      var.array() += 1e-3 * (5.0 / (nn + 5.0));
      runner.set_inv_mass(var);  // inverse mass = posterior variance estimate
      da.reset(da.averaged());
    }
  }

  const double step_size = warmup > 0 ? da.averaged() : da.current();

  ChainOutput out;
  out.unconstrained.resize(config.n_samples, dim);
  out.stats.step_size = step_size;
  double accept_sum = 0.0;
  for (int it = 0; it < config.n_samples; ++it) {
    const Transition tr = runner.step(step_size);
    accept_sum += tr.accept_prob;
    if (tr.divergent) ++out.stats.n_divergent;
    out.unconstrained.row(it) = runner.position().transpose();
  }
  out.stats.mean_accept =
      config.n_samples > 0 ? accept_sum / static_cast<double>(config.n_samples) : 0.0;
  return out;
}

}  // namespace

LeapfrogState leapfrog(const GradientTarget& target, Eigen::VectorXd position,
                       Eigen::VectorXd momentum, const Eigen::VectorXd& inv_mass,
                       double step_size, int n_steps) {
  LeapfrogState s;
  const auto eval = target.eval(position);
  s.position = std::move(position);
  s.momentum = std::move(momentum);
  s.log_density = eval.value;
  s.grad = eval.grad;
  s.finite = eval.finite;
  if (!s.finite) return s;
  for (int i = 0; i < n_steps; ++i) {
    s.momentum += 0.5 * step_size * s.grad;
    s.position += step_size * inv_mass.cwiseProduct(s.momentum);
    const auto e = target.eval(s.position);
    if (!e.finite) {
      s.finite = false;
      return s;
    }
    s.log_density = e.value;
    s.grad = e.grad;
    s.momentum += 0.5 * step_size * s.grad;
  }
  return s;
}

int PosteriorDraws::parameter_index(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  throw input_error("unknown parameter '" + name + "'");
}

Eigen::VectorXd PosteriorDraws::parameter_draws(const std::string& name) const {
  return constrained.col(parameter_index(name));
}

int PosteriorDraws::total_divergences() const {
  int n = 0;
  for (const auto& s : stats) n += s.n_divergent;
  return n;
}

PosteriorDraws run_hmc_target(const GradientTarget& target, int dim,
                              const std::vector<std::string>& names,
                              const std::function<Eigen::VectorXd(Rng&)>& init,
                              const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>&
                                  constrain,
                              const SamplerConfig& config) {
  if (config.n_chains < 1 || config.n_samples < 1 || config.n_warmup < 0) {
    throw input_error("sampler needs at least one chain and one sample");
  }
  if (!(config.target_accept > 0.0 && config.target_accept < 1.0)) {
    throw input_error("target_accept must lie in (0, 1)");
  }
  std::vector<ChainOutput> outputs(static_cast<std::size_t>(config.n_chains));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(config.n_chains));
  parallel_for(static_cast<std::size_t>(config.n_chains), config.n_workers,
               [&](std::size_t c) {
                 try {
                   Rng init_rng(derive_seed(config.seed, 2 * c));
                   Rng chain_rng(derive_seed(config.seed, 2 * c + 1));
                   outputs[c] = run_chain(target, init(init_rng), std::move(chain_rng),
                                          config);
                 } catch (...) {
                   failures[c] = std::current_exception();
                 }
               });
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  PosteriorDraws draws;
  draws.names = names;
  draws.n_chains = config.n_chains;
  draws.n_samples = config.n_samples;
  const Eigen::Index rows =
      static_cast<Eigen::Index>(config.n_chains) * config.n_samples;
  draws.unconstrained.resize(rows, dim);
  draws.chain_index.resize(static_cast<std::size_t>(rows));
  for (int c = 0; c < config.n_chains; ++c) {
    const auto& out = outputs[static_cast<std::size_t>(c)];
    draws.unconstrained.middleRows(static_cast<Eigen::Index>(c) * config.n_samples,
                                   config.n_samples) = out.unconstrained;
    for (int i = 0; i < config.n_samples; ++i) {
      draws.chain_index[static_cast<std::size_t>(c) * config.n_samples +
                        static_cast<std::size_t>(i)] = c;
    }
    draws.stats.push_back(out.stats);
  }
  const Eigen::Index out_dim = constrain(draws.unconstrained.row(0).transpose()).size();
  draws.constrained.resize(rows, out_dim);
  for (Eigen::Index r = 0; r < rows; ++r) {
    draws.constrained.row(r) = constrain(draws.unconstrained.row(r).transpose()).transpose();
  }
  return draws;
}

PosteriorDraws run_hmc(const PosteriorModel& model, const SamplerConfig& config) {
  GradientTarget target{[&model](const Eigen::VectorXd& q) { return model(q); }};
  return run_hmc_target(
      target, model.dim(), model.parameter_names(),
      [&model](Rng& rng) { return model.initial_position(rng); },
      [&model](const Eigen::VectorXd& q) { return model.constrain(q); }, config);
}

}  // namespace edvcm
