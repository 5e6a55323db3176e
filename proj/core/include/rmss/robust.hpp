#pragma once

#include <utility>
#include <vector>

#include "rmss/dataset.hpp"

namespace rmss {

enum class CorrelationEstimator { Classical, PairwiseGK, RankBased };

// Median with the usual midpoint rule for even length. Errors on empty input.
double median(const Vector& v);

// Median absolute deviation about the median, scaled by 1.4826 so the
// estimate is consistent for the standard deviation under normality.
// Zero when all entries are equal.
double mad(const Vector& v);

// Centers every column of X and y by its median and divides by its MAD.
// A column with zero MAD cannot be scaled; that raises DataError naming the
// offending column ("x<j>" 0-based, or "y").
std::pair<Dataset, StandardizationInfo> robust_standardize(const Dataset& d);

struct RobustCorrelations {
  Matrix sigma;  // p x p, symmetric, unit diagonal
  Vector r_y;    // correlation of each predictor with the response
};

// Pairwise correlation matrix of the predictors plus the predictor-response
// correlations, all with the same estimator.
//   Classical:  sample (Pearson) correlations.
//   PairwiseGK: r = (mad(u+v)^2 - mad(u-v)^2) / (mad(u+v)^2 + mad(u-v)^2),
//               clipped to [-1, 1]; 0 when both scales vanish.
//   RankBased:  2 * sin(pi * rho_spearman / 6), Spearman with average ranks.
RobustCorrelations robust_correlations(const Dataset& d,
                                       CorrelationEstimator est);

// Robust scale of a residual vector: s0 = mad(r); then
// tau^2 = (s0^2 / m) * sum_i min((r_i / s0)^2, c^2) with c = 3.
// Returns 0 when s0 = 0. Scale-equivariant: tau(lambda r) = |lambda| tau(r).
double tau_scale(const Vector& r);

}  // namespace rmss
