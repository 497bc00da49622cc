#pragma once

#include <Eigen/Dense>

namespace edvcm {

// Natural cubic spline basis with df columns, evaluated at x.  Knots sit at
// the sample min/max plus df-1 interior quantiles; columns are centered over
// the sample.  df=1 degenerates to a single centered linear column.
Eigen::MatrixXd natural_spline_design(const Eigen::VectorXd& x, int df = 3);

// Expand each raw covariate column into its spline basis; the result has
// df columns per input column, in input order.  df=0 passes raw columns
// through unchanged.
Eigen::MatrixXd build_covariate_design(const Eigen::MatrixXd& raw, int df = 3);

}  // namespace edvcm
