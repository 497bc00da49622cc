#include "edvcm/surface.hpp"

#include <cmath>
#include <iostream>
#include <utility>
#include <vector>

#include "edvcm/errors.hpp"
#include "edvcm/rng.hpp"

namespace edvcm {

namespace {

struct Point {
  double d;
  double t;
};

double tps_kernel(double r2) {
  if (r2 <= 0.0) return 0.0;
  return r2 * std::log(std::sqrt(r2));
}

double evaluate_tps(const std::vector<Point>& knots, const std::vector<double>& weights,
                    double d, double t) {
  double v = 0.0;
  for (std::size_t j = 0; j < knots.size(); ++j) {
    const double dd = d - knots[j].d;
    const double dt = t - knots[j].t;
    v += weights[j] * tps_kernel(dd * dd + dt * dt);
  }
  return v;
}

void dedupe(std::vector<Point>& knots) {
  std::vector<Point> out;
  for (const auto& k : knots) {
    bool seen = false;
    for (const auto& o : out) {
      if (std::abs(o.d - k.d) < 1e-9 && std::abs(o.t - k.t) < 1e-9) {
        seen = true;
        break;
      }
    }
    if (!seen) out.push_back(k);
  }
  knots = std::move(out);
}

// Center to mean zero and rescale to target_sd, then add noise with variance
// noise_fraction * (sample variance of the rescaled spline).  cells holds
// the spline evaluations on entry, the finished surface on exit.
void finish_surface(std::vector<double>& cells, double target_sd, double noise_fraction,
                    Rng& rng, const char* what) {
  const auto n = cells.size();
  double mean = 0.0;
  for (double v : cells) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double& v : cells) {
    v -= mean;
    var += v * v;
  }
  var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
  if (var <= 0.0) {
    std::cerr << "warning: degenerate " << what
              << " spline (constant over the grid); using a zero surface\n";
    for (double& v : cells) v = 0.0;
    return;
  }
  const double scale = target_sd / std::sqrt(var);
  for (double& v : cells) v *= scale;
  if (noise_fraction > 0.0) {
    const double noise_sd = std::sqrt(noise_fraction) * target_sd;
    for (double& v : cells) v += noise_sd * rng.normal();
  }
}

}  // namespace

CoefficientGrid generate_true_surface(const SurfaceSpec& spec) {
  const int D = spec.max_duration;
  if (D < 1) throw input_error("surface needs max_duration >= 1");
  if (spec.noise_fraction < 0.0) throw input_error("noise_fraction must be >= 0");

  const double dd = static_cast<double>(D);
  std::vector<Point> knots = {
      {1.0, 1.0},
      {dd, 1.0},
      {dd, dd},
      {(1.0 + 2.0 * dd) / 3.0, (2.0 + dd) / 3.0},  // centroid
      {(1.0 + dd) / 2.0, (1.0 + dd) / 2.0},        // hypotenuse midpoint
  };
  dedupe(knots);
  const int n_cells = triangle_size(D);
  if (static_cast<int>(knots.size()) > n_cells) {
    std::cerr << "warning: only " << n_cells << " grid cells; reducing "
              << knots.size() << " spline knots to " << n_cells << "\n";
    knots.resize(static_cast<std::size_t>(n_cells));
  }
  if (static_cast<int>(knots.size()) > spec.n_tps_basis) {
    knots.resize(static_cast<std::size_t>(spec.n_tps_basis));
  }

  Rng rng(spec.seed);
  std::vector<double> weights(knots.size());
  for (double& w : weights) w = rng.normal();

  CoefficientGrid grid(D);
  std::vector<double> cells(static_cast<std::size_t>(n_cells));
  std::size_t i = 0;
  for (int d = 1; d <= D; ++d) {
    for (int t = 1; t <= d; ++t) {
      cells[i++] = evaluate_tps(knots, weights, d, t);
    }
  }
  finish_surface(cells, spec.surface_sd, spec.noise_fraction, rng, "duration/day");
  for (int k = 0; k < n_cells; ++k) grid.values[k] = cells[static_cast<std::size_t>(k)];
  return grid;
}

LagCoefficientGrid generate_true_lag_surface(int max_duration, int max_lag,
                                             double noise_fraction, double surface_sd,
                                             std::uint64_t seed) {
  if (max_duration < 1 || max_lag < 1) {
    throw input_error("lag surface needs max_duration >= 1 and max_lag >= 1");
  }
  const double dd = static_cast<double>(max_duration);
  const double ll = static_cast<double>(max_lag);
  std::vector<Point> knots = {
      {1.0, 1.0}, {dd, 1.0}, {1.0, ll}, {dd, ll}, {(1.0 + dd) / 2.0, (1.0 + ll) / 2.0},
  };
  dedupe(knots);

  Rng rng(seed);
  std::vector<double> weights(knots.size());
  for (double& w : weights) w = rng.normal();

  LagCoefficientGrid grid(max_duration, max_lag);
  std::vector<double> cells(static_cast<std::size_t>(grid.size()));
  std::size_t i = 0;
  for (int d = 1; d <= max_duration; ++d) {
    for (int l = 1; l <= max_lag; ++l) {
      cells[i++] = evaluate_tps(knots, weights, d, l);
    }
  }
  finish_surface(cells, surface_sd, noise_fraction, rng, "duration/lag");
  for (int k = 0; k < grid.size(); ++k) grid.values[k] = cells[static_cast<std::size_t>(k)];
  return grid;
}

}  // namespace edvcm
