#pragma once

#include <cstdint>

#include "edvcm/grid.hpp"

namespace edvcm {

struct SurfaceSpec {
  int max_duration = 1;
  double noise_fraction = 0.25;  // noise variance as a fraction of spline variance
  int n_tps_basis = 5;
  double surface_sd = 0.1;  // SD of the centered spline on the log-rate scale
  std::uint64_t seed = 0;
};

// Thin-plate radial spline (r^2 log r) with knots placed by a fixed
// space-filling rule over the coefficient triangle, standard-normal weights,
// centered and rescaled to surface_sd, plus iid Gaussian noise whose
// variance is noise_fraction times the spline's sample variance.
CoefficientGrid generate_true_surface(const SurfaceSpec& spec);

// Rectangular variant over the duration x lag grid, used for lag-effect
// truths: corner knots plus center.
LagCoefficientGrid generate_true_lag_surface(int max_duration, int max_lag,
                                             double noise_fraction, double surface_sd,
                                             std::uint64_t seed);

}  // namespace edvcm
