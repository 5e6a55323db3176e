#include "rmss/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "rmss/errors.hpp"
#include "rmss/stepwise.hpp"

namespace rmss {

std::vector<std::vector<int>> kfold_split(int n, int k, std::uint64_t seed) {
  if (k < 2 || k > n)
    throw std::invalid_argument(
        "fold count must be between 2 and the sample size");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 eng(seed);
  for (int i = n - 1; i >= 1; --i) {
    int j = static_cast<int>(eng() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  std::vector<std::vector<int>> folds(k);
  for (int i = 0; i < n; ++i) folds[i % k].push_back(perm[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::size_t choose_best_cell(const std::vector<CvCell>& table) {
  if (table.empty()) throw std::invalid_argument("empty selection table");
  std::size_t best = 0;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const CvCell& a = table[i];
    const CvCell& b = table[best];
    bool better =
        a.score < b.score ||
        (a.score == b.score &&
         (a.t < b.t ||
          (a.t == b.t && (a.u < b.u || (a.u == b.u && a.h > b.h)))));
    if (better) best = i;
  }
  return best;
}

namespace {

Dataset take_rows(const Dataset& d, const std::vector<int>& rows) {
  Dataset out;
  out.X = Matrix(static_cast<Index>(rows.size()), d.p());
  out.y = Vector(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.X.row(static_cast<Index>(k)) = d.X.row(rows[k]);
    out.y[static_cast<Index>(k)] = d.y[rows[k]];
  }
  return out;
}

int rescaled_h(int h, int n_train, int n) {
  return static_cast<int>(
      std::lround(static_cast<double>(h) * n_train / n));
}

}  // namespace

CvReport cross_validate(const Dataset& d_std, const std::vector<int>& T,
                        const std::vector<int>& H, int n_models, int u_max,
                        const FitOptions& opt) {
  if (T.empty() || H.empty()) throw std::invalid_argument("empty tuning grid");
  const int n = static_cast<int>(d_std.n());
  const auto folds = kfold_split(n, opt.k_folds, opt.seed);
  const int max_t = *std::max_element(T.begin(), T.end());
  const int u_cap = std::max(1, std::min(u_max, n_models));

  std::vector<int> n_train(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f)
    n_train[f] = n - static_cast<int>(folds[f].size());

  CvReport rep;
  std::vector<int> kept;
  for (int h : H) {
    bool ok = true;
    for (int nt : n_train) {
      int hf = rescaled_h(h, nt, n);
      if (hf <= max_t || hf < 1) ok = false;
    }
    if (ok)
      kept.push_back(h);
    else
      rep.warnings.push_back("subset size " + std::to_string(h) +
                             " dropped: infeasible on a cross-validation fold");
  }
  if (kept.empty())
    throw DataError(
        "no subset size in the grid is feasible under cross-validation; "
        "enlarge the subset grid or lower the sparsity grid");

  std::vector<double> score(T.size() * u_cap * kept.size(), 0.0);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<char> held(n, 0);
    for (int i : folds[f]) held[i] = 1;
    std::vector<int> train;
    train.reserve(n_train[f]);
    for (int i = 0; i < n; ++i)
      if (!held[i]) train.push_back(i);
    Dataset d_tr = take_rows(d_std, train);
    Dataset d_te = take_rows(d_std, folds[f]);

    auto init = multi_model_stepwise(d_tr, opt.estimator, n_models, opt.gamma);
    TuningGrid grid;
    grid.T = T;
    for (int h : kept) grid.H.push_back(rescaled_h(h, n_train[f], n));
    GridResult gr =
        grid_fit(d_tr, init, grid, n_models, opt.eps, opt.threads);
    if (opt.neighborhood)
      neighborhood_search(d_tr, gr, opt.eps, opt.threads);

    std::size_t flat = 0;
    for (std::size_t it = 0; it < T.size(); ++it)
      for (int iu = 0; iu < u_cap; ++iu)
        for (std::size_t ih = 0; ih < kept.size(); ++ih, ++flat) {
          const EnsembleState& es = gr.at(it, iu, ih);
          Vector pred = Vector::Zero(d_te.n());
          for (const auto& m : es.models) pred += d_te.X * m.beta;
          pred /= static_cast<double>(es.models.size());
          score[flat] += tau_scale(d_te.y - pred);
        }
  }

  std::size_t flat = 0;
  for (std::size_t it = 0; it < T.size(); ++it)
    for (int iu = 0; iu < u_cap; ++iu)
      for (std::size_t ih = 0; ih < kept.size(); ++ih, ++flat)
        rep.table.push_back({T[it], iu + 1, kept[ih],
                             score[flat] / static_cast<double>(folds.size())});
  std::size_t best = choose_best_cell(rep.table);
  rep.best_t = rep.table[best].t;
  rep.best_u = rep.table[best].u;
  rep.best_h = rep.table[best].h;
  return rep;
}

Vector ensemble_average(const std::vector<Vector>& betas) {
  if (betas.empty())
    throw std::invalid_argument("cannot average an empty ensemble");
  Vector out = betas[0];
  for (std::size_t g = 1; g < betas.size(); ++g) out += betas[g];
  return out / static_cast<double>(betas.size());
}

FittedEnsemble fit(const Dataset& d_raw, FitOptions opt) {
  const int n = static_cast<int>(d_raw.n());
  const int p = static_cast<int>(d_raw.p());
  if (n < 4) throw DataError("need at least four rows to fit");
  if (p < 1) throw DataError("need at least one predictor to fit");
  if (opt.n_models <= 0) opt.n_models = std::min(p < 500 ? 5 : 10, p);
  if (opt.u_max <= 0 || opt.u_max > opt.n_models) opt.u_max = opt.n_models;
  if (opt.threads < 1) opt.threads = 1;

  auto [d_std, info] = robust_standardize(d_raw);

  const int t_cap = std::min(n - 1, p);
  std::vector<int> T = opt.t_grid;
  if (T.empty())
    for (int t : {15, 20, 25}) T.push_back(std::min(t, t_cap));
  std::sort(T.begin(), T.end());
  T.erase(std::unique(T.begin(), T.end()), T.end());
  for (int t : T)
    if (t < 1 || t > t_cap)
      throw std::invalid_argument("sparsity level " + std::to_string(t) +
                                  " outside [1, min(n - 1, p)]");
  const int max_t = T.back();

  std::vector<int> H = opt.h_grid;
  if (H.empty()) {
    for (double frac : {0.5, 0.625, 0.75, 0.875, 1.0}) {
      int h = static_cast<int>(std::lround(frac * n));
      if (h > max_t && h <= n) H.push_back(h);
    }
    if (H.empty()) H.push_back(n);
  }
  std::sort(H.begin(), H.end());
  H.erase(std::unique(H.begin(), H.end()), H.end());
  for (int h : H)
    if (h <= max_t || h > n)
      throw std::invalid_argument("subset size " + std::to_string(h) +
                                  " outside (max t, n]");

  auto init =
      multi_model_stepwise(d_std, opt.estimator, opt.n_models, opt.gamma);
  TuningGrid grid;
  grid.T = T;
  grid.H = H;
  GridResult gr =
      grid_fit(d_std, init, grid, opt.n_models, opt.eps, opt.threads);
  if (opt.neighborhood)
    neighborhood_search(d_std, gr, opt.eps, opt.threads);

  CvReport cv = cross_validate(d_std, T, H, opt.n_models, opt.u_max, opt);

  FittedEnsemble fe;
  fe.t = cv.best_t;
  fe.u = cv.best_u;
  fe.h = cv.best_h;
  fe.n_models = opt.n_models;
  fe.std_info = info;
  fe.init_supports = init;

  const std::size_t it =
      std::find(T.begin(), T.end(), fe.t) - T.begin();
  const std::size_t ih =
      std::find(H.begin(), H.end(), fe.h) - H.begin();
  fe.state = gr.at(it, static_cast<std::size_t>(fe.u - 1), ih);
  fe.objective = fe.state.objective;
  fe.cv = std::move(cv);

  double intercept_sum = 0.0;
  for (const auto& m : fe.state.models) {
    Vector beta(p);
    double cross = 0.0;
    for (int j = 0; j < p; ++j) {
      beta[j] = info.y_scale * m.beta[j] / info.x_scale[j];
      cross += m.beta[j] * info.x_center[j] / info.x_scale[j];
    }
    intercept_sum += info.y_center - info.y_scale * cross;
    fe.model_betas.push_back(std::move(beta));
  }
  fe.beta_bar = ensemble_average(fe.model_betas);
  fe.intercept = intercept_sum / static_cast<double>(fe.model_betas.size());
  return fe;
}

Vector predict(const FittedEnsemble& fe, const Matrix& X_new) {
  if (X_new.cols() != fe.beta_bar.size())
    throw DataError("prediction matrix has " + std::to_string(X_new.cols()) +
                    " columns but the model has " +
                    std::to_string(fe.beta_bar.size()) + " features");
  return (fe.intercept + (X_new * fe.beta_bar).array()).matrix();
}

}  // namespace rmss
