#pragma once

#include <cstdint>
#include <utility>

#include "rmss/dataset.hpp"
#include "rmss/psbgd.hpp"
#include "rmss/simrng.hpp"

namespace rmss {

struct SimConfig {
  int n = 50;
  int p = 100;
  double zeta = 0.2;        // fraction of active predictors
  double snr = 1.0;         // beta' Sigma beta / sigma^2
  double rho_within = 0.8;  // correlation inside an active block
  double rho_between = 0.2; // correlation across active blocks
  int block_size = 25;
  double alpha = 0.0;       // fraction of contaminated rows
  double k_lev = 2.0;       // leverage: Mahalanobis length of the x-shift
  double k_slo = 100.0;     // slope distortion of the contaminating model
  std::uint64_t seed = 1;
};

// One simulated problem instance. The generator draws, in this order:
// active coefficients, X row by row, noise, then (in contaminate) the
// shift direction, the contaminated rows, and finally any extra rows
// requested from draw_rows. `rng` carries the stream between those stages.
struct SimData {
  Matrix X;       // working design (contaminated rows replaced, if any)
  Vector y;
  Matrix X_clean; // the uncontaminated originals
  Vector y_clean;
  Vector beta0;
  double sigma = 0.0;
  Matrix Sigma;   // true predictor covariance
  int m_contaminated = 0;
  Vector shift;   // common leverage shift applied to contaminated rows
  SimRng rng;
};

// Active predictors come first: floor(zeta * p) of them, block-correlated
// (rho_within inside consecutive blocks of block_size, rho_between across),
// independent of the remaining predictors. Active coefficients are
// (-1)^Z * U with Z ~ Bernoulli(0.7), U ~ Uniform(0, 5); the noise scale is
// sigma = sqrt(beta' Sigma beta / snr). Raises NumericError when the implied
// covariance is not positive definite.
SimData simulate_clean(const SimConfig& cfg);

// Replaces the first floor(alpha * n) rows:
//   x_i = theta_i + shift,  theta_i ~ N(0, 0.01 I),
//   shift = (k_lev / sqrt(a' Sigma^-1 a)) * a  with a a centered
//   Uniform(-1,1) direction, so the shift has Mahalanobis length k_lev;
//   y_i = x_i' beta~ with beta~_j = beta_j * (1 + k_slo) on the support and
//   k_slo * max|beta| off it. Rows past the first m are left bitwise intact.
// alpha = 0 returns the input unchanged (and draws nothing).
SimData contaminate(const SimData& sd, const SimConfig& cfg);

// m fresh clean rows from the same population, continuing sd's stream.
std::pair<Matrix, Vector> draw_rows(SimData& sd, int m);

// The x-shift used above, exposed for direct checking:
// (k_lev / sqrt(a' Sigma^-1 a)) * a with a = a_raw - mean(a_raw).
Vector leverage_shift(const Matrix& Sigma, const Vector& a_raw, double k_lev);

// Mean squared prediction error relative to the noise variance; 1 is the
// optimum for predictions from the true model.
double mspe_relative(const Vector& yhat, const Vector& ytest, double sigma2);

// (recall, precision) of supp(beta_hat) against supp(beta_true), membership
// decided by exact zero. An empty estimated support has precision 1 by
// convention; an empty true support is an error.
std::pair<double, double> recall_precision(const Vector& beta_true,
                                           const Vector& beta_hat);

// Exact minimizer of the ensemble objective by enumeration: all support
// sets of size <= t per model (respecting the sharing cap u when
// n_models = 2) crossed with all row subsets of size h per model, exact
// least squares in every cell. Supports n_models in {1, 2}. Refuses
// instances whose enumeration count exceeds `cap` (default 1e7), reporting
// the count.
EnsembleState exhaustive_oracle(const Dataset& d, int t, int h, int n_models,
                                int u, std::int64_t cap = 10000000);

enum class BreakdownMode {
  Bounded,      // replace n - h rows with magnitude-scaled junk
  Adversarial,  // replace n - h + 1 rows with a common high-leverage point
                // placed far enough that any bounded fit costs more than
                // chasing it; drives ||beta_hat|| above magnitude - 1
};

// Norm of the exact (oracle) estimate after planting `mode` contamination of
// the given magnitude in a copy of `base`. The junk pattern is a fixed
// seeded draw scaled by `magnitude`, so probes at different magnitudes
// differ only by scale.
double breakdown_probe(const Dataset& base, int t, int h, BreakdownMode mode,
                       double magnitude);

}  // namespace rmss
