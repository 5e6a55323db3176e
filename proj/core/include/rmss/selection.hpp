#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rmss/dataset.hpp"
#include "rmss/psbgd.hpp"
#include "rmss/robust.hpp"

namespace rmss {

// Partitions 0..n-1 into k folds of size within one of each other.
// The permutation is a seeded Fisher-Yates shuffle (mt19937_64, index
// drawn as raw % (i+1)), dealt round-robin, so the folds are identical
// for identical (n, k, seed) on every platform. Requires 2 <= k <= n.
std::vector<std::vector<int>> kfold_split(int n, int k, std::uint64_t seed);

struct FitOptions {
  int n_models = -1;      // <= 0: 5 when p < 500, else 10
  int u_max = -1;         // <= 0: n_models
  int k_folds = 5;
  std::uint64_t seed = 1;
  double gamma = 1.0;
  double eps = -1.0;      // <= 0: 1e-8 * ||y||^2 (standardized scale)
  CorrelationEstimator estimator = CorrelationEstimator::PairwiseGK;
  bool neighborhood = false;
  int threads = 1;
  std::vector<int> t_grid;  // empty: {15, 20, 25} clipped to min(n-1, p)
  std::vector<int> h_grid;  // empty: {.5, .625, .75, .875, 1} * n, rounded
};

struct CvCell {
  int t, u, h;
  double score;  // mean over folds of the tau-scale of held-out residuals
};

struct CvReport {
  std::vector<CvCell> table;  // lattice order [t][u][h], dropped h omitted
  int best_t = 0, best_u = 0, best_h = 0;
  std::vector<std::string> warnings;
};

// Index of the winning cell: smallest score; ties broken by smaller t,
// then smaller u, then larger h.
std::size_t choose_best_cell(const std::vector<CvCell>& table);

// K-fold selection of (t, u, h) on standardized data. Each fold reruns the
// stepwise initializer and the grid fit on its training rows; held-out
// ensemble-average residuals are scored per cell with tau_scale and scores
// are averaged over folds. Subsample sizes are carried across folds as
// proportions: h becomes round(h * n_train / n) on a training set of
// n_train rows. An h that is infeasible on some fold even after that
// rescaling is dropped from the whole table with a warning.
CvReport cross_validate(const Dataset& d_std, const std::vector<int>& T,
                        const std::vector<int>& H, int n_models, int u_max,
                        const FitOptions& opt);

struct FittedEnsemble {
  int t = 0, u = 0, h = 0;
  int n_models = 0;
  StandardizationInfo std_info;
  std::vector<std::vector<int>> init_supports;  // stepwise warm starts
  EnsembleState state;                          // standardized scale
  std::vector<Vector> model_betas;              // original scale, one per model
  Vector beta_bar;                              // original scale average
  double intercept = 0.0;
  double objective = 0.0;  // standardized-scale trimmed RSS at the chosen cell
  CvReport cv;
  std::vector<std::string> feature_names;  // set by callers that have names
};

// Full pipeline on raw data: robust standardization, stepwise warm starts,
// grid fit over T x {1..u_max} x H, optional neighborhood refinement,
// cross-validated choice of (t, u, h), and the full-data solution at the
// chosen cell mapped back to original units. The ensemble average of a
// standardized model (beta_std per model) becomes
//   beta_j = y_scale * beta_std_j / x_scale_j,
//   intercept = y_center - y_scale * sum_j beta_std_j * x_center_j / x_scale_j
// per model, averaged across models.
FittedEnsemble fit(const Dataset& d_raw, FitOptions opt);

// Coordinate-wise mean of the per-model coefficient vectors.
Vector ensemble_average(const std::vector<Vector>& betas);

// intercept + X_new * beta_bar. Errors when column counts disagree.
Vector predict(const FittedEnsemble& fe, const Matrix& X_new);

}  // namespace rmss
