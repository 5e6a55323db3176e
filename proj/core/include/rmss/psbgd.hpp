#pragma once

#include <vector>

#include "rmss/dataset.hpp"

namespace rmss {

// Hard-thresholding projection: keeps the r entries of v largest in absolute
// value (ties to the lowest index) and zeroes the rest. r <= 0 gives the zero
// vector; r >= len(v) copies v.
Vector project_topk(const Vector& v, int r);

// Same projection restricted to a coordinate subset: entries outside
// `allowed` (0-based, strictly increasing) are zeroed, then the top r of the
// remainder survive.
Vector project_subset_topk(const Vector& v, const std::vector<int>& allowed,
                           int r);

// Predictors model g may use: those appearing in at most u - 1 of the other
// models' supports. Sorted ascending.
std::vector<int> allowed_set(const std::vector<std::vector<int>>& supports,
                             int g, int u, int p);

// Squared largest singular value of A, by power iteration on A^T A to
// relative tolerance 1e-6 (at most 1000 iterations) from a fixed seeded
// start vector. Raises NumericError on non-finite input.
double spectral_norm_sq(const Matrix& A);

// Gradient step size bound for the coefficient block:
//   2 * 1.01 * spectral_norm_sq(X restricted to the allowed columns).
// The 1.01 inflation covers the power-iteration tolerance so the bound
// stays an upper bound. Requires a non-empty allowed set.
double lipschitz_beta(const Matrix& X, const std::vector<int>& allowed);

inline Vector residual(const Matrix& X, const Vector& y, const Vector& beta,
                       const Vector& eta) {
  return y - X * beta - eta;
}

inline Vector gradient_beta(const Matrix& X, const Vector& y,
                            const Vector& beta, const Vector& eta) {
  return -2.0 * (X.transpose() * residual(X, y, beta, eta));
}

inline Vector gradient_eta(const Matrix& X, const Vector& y,
                           const Vector& beta, const Vector& eta) {
  return -2.0 * residual(X, y, beta, eta);
}

inline double objective_value(const Dataset& d, const Vector& beta,
                              const Vector& eta) {
  return residual(d.X, d.y, beta, eta).squaredNorm();
}

// One model of the ensemble. J and I are kept in sync with beta and eta:
// J = supp(beta), I = rows where eta is zero (the untrimmed rows).
struct ModelState {
  Vector beta;
  Vector eta;
  std::vector<int> J;
  std::vector<int> I;
  double objective = 0.0;
};

struct SweepRecord {
  double objective;
  double dbeta_sq;  // squared step length of the coefficient update
  double deta_sq;   // squared step length of the trimming update
};

struct PsbgdOptions {
  double eps = -1.0;     // <= 0: resolve to 1e-8 * ||y||^2
  int max_sweeps = 10000;
  double l_beta = -1.0;  // <= 0: compute from the allowed columns
  std::vector<SweepRecord>* trace = nullptr;
};

// Projected block gradient descent for a single model. Alternates a
// hard-thresholded coefficient step (step size 1/l_beta, support confined to
// `allowed`, at most t nonzeros) with a trimming step (step size 1/2, at most
// n - h nonzeros) until the objective decrease falls to eps or below. Then
// the coefficients are polished by least squares of y on the kept rows and
// selected columns (minimum-norm when rank deficient) and eta is reset to the
// exact residuals on the trimmed rows. The returned objective is the trimmed
// residual sum of squares and never exceeds the (projected) initial value.
ModelState psbgd_single(const Dataset& d, const ModelState& init,
                        const std::vector<int>& allowed, int t, int h,
                        const PsbgdOptions& opt = {});

struct EnsembleState {
  std::vector<ModelState> models;
  double objective = 0.0;  // sum of per-model trimmed residual sums of squares
};

// Sparsity and subsample-size grid. The sharing level u always sweeps 1..G.
struct TuningGrid {
  std::vector<int> T;  // ascending, max(T) <= min(n-1, p)
  std::vector<int> H;  // ascending, max(T) < h <= n for every h
};

struct GridResult {
  std::vector<int> T, U, H;
  std::vector<EnsembleState> cells;  // laid out [t][u][h]

  EnsembleState& at(std::size_t it, std::size_t iu, std::size_t ih) {
    return cells[(it * U.size() + iu) * H.size() + ih];
  }
  const EnsembleState& at(std::size_t it, std::size_t iu, std::size_t ih) const {
    return cells[(it * U.size() + iu) * H.size() + ih];
  }
};

// Fits the whole T x {1..G} x H lattice. Every (t, h) column starts its u = 1
// fit from least-squares coefficients restricted to the given warm-start
// supports (eta = 0) and each u > 1 cell is warm-started from the (t, u-1, h)
// solution. Models are updated in fixed order g = 1..G; (t, h) columns are
// independent, so `threads` workers change nothing but wall time.
GridResult grid_fit(const Dataset& d,
                    const std::vector<std::vector<int>>& init_supports,
                    const TuningGrid& grid, int n_models, double eps,
                    int threads = 1);

// Local refinement over the tuning lattice: each pass re-fits every cell from
// its own and each axis-neighbor's solution (|di|+|dj|+|dk| <= 1), keeping
// whichever result has the lowest objective. Passes are double-buffered, so
// cell order and thread count do not affect the outcome. Repeats until the
// total objective improves by eps or less. No cell's objective ever
// increases. Returns the number of passes.
int neighborhood_search(const Dataset& d, GridResult& gr, double eps,
                        int threads = 1);

}  // namespace rmss
