#include "rmss/simlab.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmss/errors.hpp"

namespace rmss {

namespace {

Matrix build_sigma(int p, int q, int block_size, double rho_within,
                   double rho_between) {
  Matrix S = Matrix::Identity(p, p);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) {
      if (i == j) continue;
      S(i, j) = (i / block_size == j / block_size) ? rho_within : rho_between;
    }
  return S;
}

Matrix cholesky_lower(const Matrix& Sigma) {
  Eigen::LLT<Matrix> llt(Sigma);
  if (llt.info() != Eigen::Success)
    throw NumericError("simulated predictor covariance is not positive definite");
  return llt.matrixL();
}

}  // namespace

SimData simulate_clean(const SimConfig& cfg) {
  if (cfg.n < 1 || cfg.p < 1)
    throw std::invalid_argument("need at least one row and one predictor");
  if (cfg.zeta < 0.0 || cfg.zeta > 1.0)
    throw std::invalid_argument("active fraction must lie in [0, 1]");
  if (cfg.snr <= 0.0)
    throw std::invalid_argument("signal-to-noise ratio must be positive");
  if (cfg.block_size < 1)
    throw std::invalid_argument("block size must be positive");

  const int q = static_cast<int>(std::floor(cfg.zeta * cfg.p));
  SimData sd;
  sd.Sigma =
      build_sigma(cfg.p, q, cfg.block_size, cfg.rho_within, cfg.rho_between);
  Matrix L = cholesky_lower(sd.Sigma);

  sd.rng = SimRng(cfg.seed);
  sd.beta0 = Vector::Zero(cfg.p);
  for (int j = 0; j < q; ++j) {
    double sign = sd.rng.uniform() < 0.7 ? -1.0 : 1.0;
    sd.beta0[j] = sign * sd.rng.uniform(0.0, 5.0);
  }
  sd.sigma = std::sqrt(sd.beta0.dot(sd.Sigma * sd.beta0) / cfg.snr);

  sd.X_clean = Matrix(cfg.n, cfg.p);
  Vector z(cfg.p);
  for (int i = 0; i < cfg.n; ++i) {
    for (int j = 0; j < cfg.p; ++j) z[j] = sd.rng.normal();
    sd.X_clean.row(i) = (L * z).transpose();
  }
  sd.y_clean = sd.X_clean * sd.beta0;
  for (int i = 0; i < cfg.n; ++i) sd.y_clean[i] += sd.sigma * sd.rng.normal();

  sd.X = sd.X_clean;
  sd.y = sd.y_clean;
  sd.m_contaminated = 0;
  sd.shift = Vector::Zero(cfg.p);
  return sd;
}

Vector leverage_shift(const Matrix& Sigma, const Vector& a_raw, double k_lev) {
  Vector a = (a_raw.array() - a_raw.mean()).matrix();
  if (a.norm() == 0.0)
    throw NumericError("degenerate leverage direction after centering");
  Eigen::LLT<Matrix> llt(Sigma);
  if (llt.info() != Eigen::Success)
    throw NumericError("leverage shift needs a positive definite covariance");
  double maha = std::sqrt(a.dot(llt.solve(a)));
  return (k_lev / maha) * a;
}

SimData contaminate(const SimData& sd, const SimConfig& cfg) {
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0)
    throw std::invalid_argument("contamination fraction must lie in [0, 1]");
  SimData out = sd;
  const int n = static_cast<int>(sd.X.rows());
  const int p = static_cast<int>(sd.X.cols());
  const int m = static_cast<int>(std::floor(cfg.alpha * n));
  if (m == 0) return out;

  Vector a_raw(p);
  for (int j = 0; j < p; ++j) a_raw[j] = out.rng.uniform(-1.0, 1.0);
  out.shift = leverage_shift(sd.Sigma, a_raw, cfg.k_lev);

  const double bmax = sd.beta0.cwiseAbs().maxCoeff();
  Vector bt(p);
  for (int j = 0; j < p; ++j)
    bt[j] = sd.beta0[j] != 0.0 ? sd.beta0[j] * (1.0 + cfg.k_slo)
                               : cfg.k_slo * bmax;

  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < p; ++j)
      out.X(i, j) = 0.1 * out.rng.normal() + out.shift[j];
    out.y[i] = out.X.row(i).dot(bt);
  }
  out.m_contaminated = m;
  return out;
}

std::pair<Matrix, Vector> draw_rows(SimData& sd, int m) {
  if (m < 0) throw std::invalid_argument("row count must be non-negative");
  const int p = static_cast<int>(sd.X.cols());
  Matrix L = cholesky_lower(sd.Sigma);
  Matrix X(m, p);
  Vector z(p);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < p; ++j) z[j] = sd.rng.normal();
    X.row(i) = (L * z).transpose();
  }
  Vector y = X * sd.beta0;
  for (int i = 0; i < m; ++i) y[i] += sd.sigma * sd.rng.normal();
  return {std::move(X), std::move(y)};
}

double mspe_relative(const Vector& yhat, const Vector& ytest, double sigma2) {
  if (yhat.size() != ytest.size())
    throw std::invalid_argument("prediction and test lengths disagree");
  if (sigma2 <= 0.0)
    throw std::invalid_argument("noise variance must be positive");
  return (yhat - ytest).squaredNorm() /
         (static_cast<double>(ytest.size()) * sigma2);
}

std::pair<double, double> recall_precision(const Vector& beta_true,
                                           const Vector& beta_hat) {
  if (beta_true.size() != beta_hat.size())
    throw std::invalid_argument("coefficient lengths disagree");
  int true_n = 0, hat_n = 0, both = 0;
  for (Index j = 0; j < beta_true.size(); ++j) {
    bool in_true = beta_true[j] != 0.0;
    bool in_hat = beta_hat[j] != 0.0;
    true_n += in_true;
    hat_n += in_hat;
    both += in_true && in_hat;
  }
  if (true_n == 0)
    throw std::invalid_argument("the true support is empty");
  double recall = static_cast<double>(both) / true_n;
  double precision = hat_n == 0 ? 1.0 : static_cast<double>(both) / hat_n;
  return {recall, precision};
}

namespace {

Vector subset_ls(const Matrix& X, const Vector& y, const std::vector<int>& J) {
  Vector beta = Vector::Zero(X.cols());
  if (J.empty()) return beta;
  Matrix Xs(X.rows(), static_cast<Index>(J.size()));
  for (std::size_t k = 0; k < J.size(); ++k)
    Xs.col(static_cast<Index>(k)) = X.col(J[k]);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Xs);
  Vector bs = cod.solve(y);
  for (std::size_t k = 0; k < J.size(); ++k) beta[J[k]] = bs[k];
  return beta;
}

// C(n, k) without overflow: saturates at a value far above any usable cap.
long double binomial_ld(int n, int k) {
  if (k < 0 || k > n) return 0.0L;
  long double c = 1.0L;
  for (int i = 1; i <= k; ++i) {
    c = c * (n - k + i) / i;
    if (c > 1e30L) return 1e30L;
  }
  return c;
}

template <typename Fn>
void for_each_combination(int n, int k, Fn&& fn) {
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  if (k > n) return;
  while (true) {
    fn(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

ModelState oracle_state(const Dataset& d, const Vector& beta,
                        const std::vector<int>& rows) {
  ModelState m;
  m.beta = beta;
  for (Index j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) m.J.push_back(static_cast<int>(j));
  m.I = rows;
  Vector r = d.y - d.X * beta;
  m.eta = Vector::Zero(d.n());
  double obj = 0.0;
  std::size_t k = 0;
  for (Index i = 0; i < d.n(); ++i) {
    if (k < rows.size() && rows[k] == static_cast<int>(i)) {
      obj += r[i] * r[i];
      ++k;
    } else {
      m.eta[i] = r[i];
    }
  }
  m.objective = obj;
  return m;
}

bool disjoint_sorted(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return false;
    if (a[i] < b[j])
      ++i;
    else
      ++j;
  }
  return true;
}

}  // namespace

EnsembleState exhaustive_oracle(const Dataset& d, int t, int h, int n_models,
                                int u, std::int64_t cap) {
  const int n = static_cast<int>(d.n());
  const int p = static_cast<int>(d.p());
  if (n_models != 1 && n_models != 2)
    throw std::invalid_argument("exhaustive search handles one or two models");
  if (u < 1) throw std::invalid_argument("sharing cap must be positive");
  if (h < 1 || h > n) throw std::invalid_argument("subset size out of range");
  if (t < 0) throw std::invalid_argument("sparsity level must be non-negative");
  t = std::min(t, p);

  long double nj = 0.0L;
  for (int k = 0; k <= t; ++k) nj += binomial_ld(p, k);
  long double ni = binomial_ld(n, h);
  long double work = nj * ni;
  if (n_models == 2 && u == 1) work += nj * nj;
  if (work > static_cast<long double>(cap))
    throw NumericError("exhaustive enumeration needs about " +
                       std::to_string(static_cast<long long>(
                           std::min(work, 1e18L))) +
                       " least squares solves, above the cap of " +
                       std::to_string(cap));

  std::vector<std::vector<int>> supports = {{}};
  for (int k = 1; k <= t; ++k)
    for_each_combination(p, k,
                         [&](const std::vector<int>& J) { supports.push_back(J); });

  const std::size_t NJ = supports.size();
  std::vector<double> best_rss(NJ, std::numeric_limits<double>::infinity());
  std::vector<std::vector<int>> best_rows(NJ);
  std::vector<Vector> best_beta(NJ);

  for_each_combination(n, h, [&](const std::vector<int>& rows) {
    Matrix Xi(h, p);
    Vector yi(h);
    for (int k = 0; k < h; ++k) {
      Xi.row(k) = d.X.row(rows[k]);
      yi[k] = d.y[rows[k]];
    }
    for (std::size_t s = 0; s < NJ; ++s) {
      Vector beta = subset_ls(Xi, yi, supports[s]);
      double rss = (yi - Xi * beta).squaredNorm();
      if (rss < best_rss[s]) {
        best_rss[s] = rss;
        best_rows[s] = rows;
        best_beta[s] = beta;
      }
    }
  });

  EnsembleState es;
  if (n_models == 1 || u >= 2) {
    std::size_t win = 0;
    for (std::size_t s = 1; s < NJ; ++s)
      if (best_rss[s] < best_rss[win]) win = s;
    ModelState m = oracle_state(d, best_beta[win], best_rows[win]);
    es.models.push_back(m);
    if (n_models == 2) es.models.push_back(m);
  } else {
    std::size_t wa = 0, wb = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < NJ; ++a)
      for (std::size_t b = 0; b < NJ; ++b) {
        if (!disjoint_sorted(supports[a], supports[b])) continue;
        double total = best_rss[a] + best_rss[b];
        if (total < best) {
          best = total;
          wa = a;
          wb = b;
        }
      }
    es.models.push_back(oracle_state(d, best_beta[wa], best_rows[wa]));
    es.models.push_back(oracle_state(d, best_beta[wb], best_rows[wb]));
  }
  es.objective = 0.0;
  for (const auto& m : es.models) es.objective += m.objective;
  return es;
}

double breakdown_probe(const Dataset& base, int t, int h, BreakdownMode mode,
                       double magnitude) {
  Dataset d = base;
  const int n = static_cast<int>(d.n());
  const int p = static_cast<int>(d.p());
  if (mode == BreakdownMode::Bounded) {
    const int m = n - h;
    SimRng rng(0x6a9bu);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < p; ++j)
        d.X(i, j) = magnitude * rng.uniform(-1.0, 1.0);
      d.y[i] = magnitude * rng.uniform(-1.0, 1.0);
    }
  } else {
    const int m = n - h + 1;
    double my = 0.0, mx1 = 0.0;
    for (int i = m; i < n; ++i) {
      my = std::max(my, std::abs(d.y[i]));
      mx1 = std::max(mx1, std::abs(d.X(i, 0)));
    }
    const double gamma = magnitude;
    // far enough out that every h-row fit is cheaper chasing the planted
    // point than ignoring it
    const double tau = std::sqrt(
        std::max(h - m, 0) * (my + gamma * mx1) * (my + gamma * mx1) + 1.0);
    for (int i = 0; i < m; ++i) {
      d.X.row(i).setZero();
      d.X(i, 0) = tau;
      d.y[i] = gamma * tau;
    }
  }
  EnsembleState es = exhaustive_oracle(d, t, h, 1, 1);
  return es.models[0].beta.norm();
}

}  // namespace rmss
