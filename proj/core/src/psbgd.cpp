#include "rmss/psbgd.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "rmss/errors.hpp"
#include "rmss/parallel.hpp"
#include "rmss/simrng.hpp"

namespace rmss {

Vector project_topk(const Vector& v, int r) {
  const Index m = v.size();
  if (r <= 0) return Vector::Zero(m);
  if (r >= m) return v;
  std::vector<int> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::nth_element(idx.begin(), idx.begin() + r, idx.end(),
                   [&](int a, int b) {
                     double fa = std::abs(v[a]), fb = std::abs(v[b]);
                     if (fa != fb) return fa > fb;
                     return a < b;
                   });
  Vector out = Vector::Zero(m);
  for (int k = 0; k < r; ++k) out[idx[k]] = v[idx[k]];
  return out;
}

Vector project_subset_topk(const Vector& v, const std::vector<int>& allowed,
                           int r) {
  Vector out = Vector::Zero(v.size());
  if (r <= 0 || allowed.empty()) return out;
  if (static_cast<std::size_t>(r) >= allowed.size()) {
    for (int j : allowed) out[j] = v[j];
    return out;
  }
  std::vector<int> idx = allowed;
  std::nth_element(idx.begin(), idx.begin() + r, idx.end(),
                   [&](int a, int b) {
                     double fa = std::abs(v[a]), fb = std::abs(v[b]);
                     if (fa != fb) return fa > fb;
                     return a < b;
                   });
  for (int k = 0; k < r; ++k) out[idx[k]] = v[idx[k]];
  return out;
}

std::vector<int> allowed_set(const std::vector<std::vector<int>>& supports,
                             int g, int u, int p) {
  std::vector<int> count(p, 0);
  for (std::size_t l = 0; l < supports.size(); ++l) {
    if (static_cast<int>(l) == g) continue;
    for (int j : supports[l]) ++count[j];
  }
  std::vector<int> allowed;
  for (int j = 0; j < p; ++j)
    if (count[j] <= u - 1) allowed.push_back(j);
  return allowed;
}

double spectral_norm_sq(const Matrix& A) {
  if (!A.allFinite())
    throw NumericError("spectral norm of a matrix with non-finite entries");
  if (A.rows() == 0 || A.cols() == 0) return 0.0;
  SimRng rng(0x5eedu);
  Vector v(A.cols());
  for (Index j = 0; j < v.size(); ++j) v[j] = rng.normal();
  v /= v.norm();
  double lambda = 0.0;
  for (int iter = 0; iter < 1000; ++iter) {
    Vector w = A.transpose() * (A * v);
    double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    double next = v.dot(A.transpose() * (A * v));
    if (std::abs(next - lambda) <= 1e-6 * next) return next;
    lambda = next;
  }
  return lambda;
}

double lipschitz_beta(const Matrix& X, const std::vector<int>& allowed) {
  if (allowed.empty())
    throw NumericError("coefficient step bound needs an allowed column");
  Matrix Xs(X.rows(), static_cast<Index>(allowed.size()));
  for (std::size_t k = 0; k < allowed.size(); ++k)
    Xs.col(static_cast<Index>(k)) = X.col(allowed[k]);
  return 2.0 * 1.01 * spectral_norm_sq(Xs);
}

namespace {

std::vector<int> support_of(const Vector& v) {
  std::vector<int> s;
  for (Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) s.push_back(static_cast<int>(i));
  return s;
}

std::vector<int> zero_rows_of(const Vector& eta) {
  std::vector<int> rows;
  for (Index i = 0; i < eta.size(); ++i)
    if (eta[i] == 0.0) rows.push_back(static_cast<int>(i));
  return rows;
}

// Exact least squares of y on rows I and columns J (minimum-norm when rank
// deficient), then eta takes the exact residual on every trimmed row. Keeps
// the objective from rising: the incoming eta already equals the residual off
// I, so the trimmed residual sum is the current objective and least squares
// only lowers it.
void polish(const Dataset& d, ModelState& m) {
  m.J = support_of(m.beta);
  m.I = zero_rows_of(m.eta);
  const Index ni = static_cast<Index>(m.I.size());
  Vector beta = Vector::Zero(d.p());
  if (!m.J.empty() && ni > 0) {
    Matrix Xs(ni, static_cast<Index>(m.J.size()));
    Vector ys(ni);
    for (Index k = 0; k < ni; ++k) {
      for (std::size_t c = 0; c < m.J.size(); ++c)
        Xs(k, static_cast<Index>(c)) = d.X(m.I[k], m.J[c]);
      ys[k] = d.y[m.I[k]];
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Xs);
    Vector bs = cod.solve(ys);
    for (std::size_t c = 0; c < m.J.size(); ++c) beta[m.J[c]] = bs[c];
  }
  m.beta = beta;
  m.J = support_of(m.beta);
  Vector r = d.y - d.X * m.beta;
  m.eta.setZero();
  double obj = 0.0;
  std::size_t k = 0;
  for (Index i = 0; i < d.n(); ++i) {
    if (k < m.I.size() && m.I[k] == static_cast<int>(i)) {
      obj += r[i] * r[i];
      ++k;
    } else {
      m.eta[i] = r[i];
    }
  }
  m.objective = obj;
}

}  // namespace

ModelState psbgd_single(const Dataset& d, const ModelState& init,
                        const std::vector<int>& allowed, int t, int h,
                        const PsbgdOptions& opt) {
  const Index n = d.n(), p = d.p();
  if (h < 1 || h > n) throw std::invalid_argument("subset size out of range");
  ModelState m;
  m.beta = init.beta.size() == p ? init.beta : Vector::Zero(p);
  m.eta = init.eta.size() == n ? init.eta : Vector::Zero(n);
  m.beta = project_subset_topk(m.beta, allowed, t);
  m.eta = project_topk(m.eta, static_cast<int>(n) - h);

  const bool fit_beta = !allowed.empty() && t > 0;
  const double l_beta =
      opt.l_beta > 0 ? opt.l_beta : (fit_beta ? lipschitz_beta(d.X, allowed) : 0.0);
  const double eps = opt.eps > 0 ? opt.eps : 1e-8 * d.y.squaredNorm();
  double obj = objective_value(d, m.beta, m.eta);

  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    Vector beta_new = m.beta;
    if (fit_beta && l_beta > 0.0) {
      Vector g = gradient_beta(d.X, d.y, m.beta, m.eta);
      beta_new = project_subset_topk(m.beta - g / l_beta, allowed, t);
    }
    // the trimming step has unit curvature, so its gradient step lands on
    // the current residual; thresholding it is the exact block minimizer
    Vector r = d.y - d.X * beta_new;
    Vector eta_new = project_topk(r, static_cast<int>(n) - h);
    double obj_new = objective_value(d, beta_new, eta_new);
    double dbeta = (beta_new - m.beta).squaredNorm();
    double deta = (eta_new - m.eta).squaredNorm();
    m.beta.swap(beta_new);
    m.eta.swap(eta_new);
    if (opt.trace) opt.trace->push_back({obj_new, dbeta, deta});
    double decrease = obj - obj_new;
    obj = obj_new;
    if (decrease <= eps) break;
  }

  polish(d, m);
  return m;
}

namespace {

// One update pass over the ensemble at a fixed (t, u, h): every model is
// refit in index order against the supports the others currently hold.
void fit_cell(const Dataset& d, EnsembleState& es, int t, int u, int h,
              double eps) {
  const int G = static_cast<int>(es.models.size());
  const int p = static_cast<int>(d.p());
  std::vector<std::vector<int>> supports(G);
  for (int g = 0; g < G; ++g) supports[g] = es.models[g].J;
  PsbgdOptions opt;
  opt.eps = eps;
  for (int g = 0; g < G; ++g) {
    std::vector<int> allowed = allowed_set(supports, g, u, p);
    es.models[g] = psbgd_single(d, es.models[g], allowed, t, h, opt);
    supports[g] = es.models[g].J;
  }
  es.objective = 0.0;
  for (const auto& m : es.models) es.objective += m.objective;
}

}  // namespace

GridResult grid_fit(const Dataset& d,
                    const std::vector<std::vector<int>>& init_supports,
                    const TuningGrid& grid, int n_models, double eps,
                    int threads) {
  if (n_models < 1) throw std::invalid_argument("need at least one model");
  if (init_supports.size() != static_cast<std::size_t>(n_models))
    throw std::invalid_argument("one warm-start support per model");
  if (grid.T.empty() || grid.H.empty())
    throw std::invalid_argument("empty tuning grid");

  GridResult gr;
  gr.T = grid.T;
  gr.H = grid.H;
  gr.U.resize(n_models);
  std::iota(gr.U.begin(), gr.U.end(), 1);
  gr.cells.resize(gr.T.size() * gr.U.size() * gr.H.size());

  // shared across columns: least squares on each warm-start support
  EnsembleState seed;
  seed.models.resize(n_models);
  for (int g = 0; g < n_models; ++g) {
    ModelState& m = seed.models[g];
    m.beta = Vector::Zero(d.p());
    if (!init_supports[g].empty()) {
      Matrix Xs(d.n(), static_cast<Index>(init_supports[g].size()));
      for (std::size_t k = 0; k < init_supports[g].size(); ++k)
        Xs.col(static_cast<Index>(k)) = d.X.col(init_supports[g][k]);
      Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Xs);
      Vector bs = cod.solve(d.y);
      for (std::size_t k = 0; k < init_supports[g].size(); ++k)
        m.beta[init_supports[g][k]] = bs[k];
    }
    m.eta = Vector::Zero(d.n());
    m.J = init_supports[g];
  }

  const int n_columns = static_cast<int>(gr.T.size() * gr.H.size());
  parallel_for(n_columns, threads, [&](int col) {
    const std::size_t it = static_cast<std::size_t>(col) / gr.H.size();
    const std::size_t ih = static_cast<std::size_t>(col) % gr.H.size();
    EnsembleState es = seed;
    for (std::size_t iu = 0; iu < gr.U.size(); ++iu) {
      fit_cell(d, es, gr.T[it], gr.U[iu], gr.H[ih], eps);
      gr.at(it, iu, ih) = es;
    }
  });
  return gr;
}

int neighborhood_search(const Dataset& d, GridResult& gr, double eps,
                        int threads) {
  const double stop = eps > 0 ? eps : 1e-8 * d.y.squaredNorm();
  const int nt = static_cast<int>(gr.T.size());
  const int nu = static_cast<int>(gr.U.size());
  const int nh = static_cast<int>(gr.H.size());
  int passes = 0;
  for (;;) {
    ++passes;
    double total_before = 0.0;
    for (const auto& c : gr.cells) total_before += c.objective;

    std::vector<EnsembleState> next(gr.cells.size());
    parallel_for(static_cast<int>(gr.cells.size()), threads, [&](int flat) {
      const int it = flat / (nu * nh);
      const int iu = flat / nh % nu;
      const int ih = flat % nh;
      const int off[7][3] = {{0, 0, 0}, {-1, 0, 0}, {1, 0, 0}, {0, -1, 0},
                             {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
      EnsembleState best = gr.cells[flat];
      for (const auto& o : off) {
        int jt = it + o[0], ju = iu + o[1], jh = ih + o[2];
        if (jt < 0 || jt >= nt || ju < 0 || ju >= nu || jh < 0 || jh >= nh)
          continue;
        EnsembleState cand = gr.at(jt, ju, jh);
        fit_cell(d, cand, gr.T[it], gr.U[iu], gr.H[ih], eps);
        if (cand.objective < best.objective) best = std::move(cand);
      }
      next[flat] = std::move(best);
    });

    double total_after = 0.0;
    for (const auto& c : next) total_after += c.objective;
    gr.cells = std::move(next);
    if (total_before - total_after <= stop) break;
  }
  return passes;
}

}  // namespace rmss
