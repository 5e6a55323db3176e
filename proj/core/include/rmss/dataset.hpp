#pragma once

#include <Eigen/Dense>

namespace rmss {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct Dataset {
  Matrix X;  // n x p design, rows are observations
  Vector y;  // n responses

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }
};

// Column-wise centering/scaling applied to a Dataset, kept so fitted
// coefficients can be mapped back to the original variable units.
struct StandardizationInfo {
  Vector x_center;  // per-column centers
  Vector x_scale;   // per-column scales, all > 0
  double y_center = 0.0;
  double y_scale = 1.0;
};

}  // namespace rmss
