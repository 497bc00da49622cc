#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>

#include "edvcm/errors.hpp"

namespace edvcm {

// Coefficients beta_{d,t} live on the lower triangle {(d,t): 1 <= t <= d <= D},
// vectorized duration-major so each duration's coefficients are contiguous:
// (1,1),(2,1),(2,2),(3,1),...

inline int triangle_size(int max_duration) { return max_duration * (max_duration + 1) / 2; }

inline int grid_index(int d, int t, int max_duration) {
  if (d < 1 || d > max_duration || t < 1 || t > d) {
    throw input_error("grid_index: (d=" + std::to_string(d) + ", t=" + std::to_string(t) +
                      ") outside the triangle for D=" + std::to_string(max_duration));
  }
  return d * (d - 1) / 2 + (t - 1);
}

// Largest duration whose triangle has exactly `size` cells.
inline int triangle_duration(int size) {
  const int d = static_cast<int>((-1.0 + std::sqrt(1.0 + 8.0 * size)) / 2.0 + 0.5);
  if (d < 1 || triangle_size(d) != size) {
    throw input_error("triangle_duration: " + std::to_string(size) +
                      " is not a triangular number");
  }
  return d;
}

// Inverse of grid_index: index -> (d, t).
inline std::pair<int, int> inverse_grid_index(int index, int max_duration) {
  if (index < 0 || index >= triangle_size(max_duration)) {
    throw input_error("inverse_grid_index: index " + std::to_string(index) +
                      " outside [0, " + std::to_string(triangle_size(max_duration)) + ")");
  }
  // d is the largest integer with d(d-1)/2 <= index
  int d = static_cast<int>((1.0 + std::sqrt(1.0 + 8.0 * index)) / 2.0);
  while (d * (d - 1) / 2 > index) --d;
  while ((d + 1) * d / 2 <= index) ++d;
  return {d, index - d * (d - 1) / 2 + 1};
}

// Lower-triangular grid of duration/day coefficients.
struct CoefficientGrid {
  int max_duration = 0;
  Eigen::VectorXd values;  // length D(D+1)/2

  CoefficientGrid() = default;
  explicit CoefficientGrid(int D)
      : max_duration(D), values(Eigen::VectorXd::Zero(triangle_size(D))) {
    if (D < 1) throw input_error("CoefficientGrid: D must be >= 1");
  }

  int size() const { return triangle_size(max_duration); }
  double operator()(int d, int t) const { return values[grid_index(d, t, max_duration)]; }
  double& operator()(int d, int t) { return values[grid_index(d, t, max_duration)]; }
};

// D x L rectangle of duration/lag coefficients, duration-major.
struct LagCoefficientGrid {
  int max_duration = 0;
  int max_lag = 0;
  Eigen::VectorXd values;  // length D * L

  LagCoefficientGrid() = default;
  LagCoefficientGrid(int D, int L)
      : max_duration(D), max_lag(L), values(Eigen::VectorXd::Zero(D * L)) {
    if (D < 1 || L < 1) throw input_error("LagCoefficientGrid: need D >= 1 and L >= 1");
  }

  int size() const { return max_duration * max_lag; }
  int index(int d, int l) const {
    if (d < 1 || d > max_duration || l < 1 || l > max_lag) {
      throw input_error("lag grid: (d=" + std::to_string(d) + ", l=" + std::to_string(l) +
                        ") outside the " + std::to_string(max_duration) + "x" +
                        std::to_string(max_lag) + " rectangle");
    }
    return (d - 1) * max_lag + (l - 1);
  }
  double operator()(int d, int l) const { return values[index(d, l)]; }
  double& operator()(int d, int l) { return values[index(d, l)]; }
};

}  // namespace edvcm
