#include "edvcm/spline.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "edvcm/errors.hpp"
#include "edvcm/summaries.hpp"

namespace edvcm {

namespace {

double positive_cube(double v) { return v > 0.0 ? v * v * v : 0.0; }

// Truncated-power term of the natural basis: linear beyond the last knot.
double d_term(double x, double knot, double last_knot) {
  return (positive_cube(x - knot) - positive_cube(x - last_knot)) / (last_knot - knot);
}

}  // namespace

Eigen::MatrixXd natural_spline_design(const Eigen::VectorXd& x, int df) {
  if (df < 1) throw input_error("spline df must be >= 1");
  if (x.size() < 2) throw input_error("spline basis needs at least 2 observations");

  const int n_knots = df + 1;
  std::vector<double> values(x.data(), x.data() + x.size());
  std::vector<double> knots(static_cast<std::size_t>(n_knots));
  for (int k = 0; k < n_knots; ++k) {
    knots[k] = quantile_type7(values, static_cast<double>(k) / df);
  }
  if (knots.front() == knots.back()) {
    throw input_error("constant covariate: spline basis is degenerate");
  }
  for (int k = 1; k < n_knots; ++k) {
    if (knots[k] <= knots[k - 1]) {
      throw input_error("spline knots coincide at value " + std::to_string(knots[k]) +
                        "; covariate has too few distinct values for df=" +
                        std::to_string(df));
    }
  }

  Eigen::MatrixXd basis(x.size(), df);
  basis.col(0) = x;
  const double last = knots[static_cast<std::size_t>(n_knots - 1)];
  const double second_last = knots[static_cast<std::size_t>(n_knots - 2)];
  for (int j = 1; j < df; ++j) {
    const double knot = knots[static_cast<std::size_t>(j - 1)];
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      basis(i, j) = d_term(x[i], knot, last) - d_term(x[i], second_last, last);
    }
  }
  basis.rowwise() -= basis.colwise().mean();
  return basis;
}

Eigen::MatrixXd build_covariate_design(const Eigen::MatrixXd& raw, int df) {
  if (df == 0) return raw;
  Eigen::MatrixXd out(raw.rows(), raw.cols() * df);
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    out.middleCols(c * df, df) = natural_spline_design(raw.col(c), df);
  }
  return out;
}

}  // namespace edvcm
