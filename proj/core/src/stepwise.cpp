#include "rmss/stepwise.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rmss {

namespace {
// Candidates whose conditional variance falls below this multiple of n are
// numerically collinear with the committed set.
constexpr double kCollinearTol = 1e-10;
// A model whose rrss has collapsed to this level cannot improve further.
constexpr double kExhaustedTol = 1e-12;
}  // namespace

double partial_f_pvalue(double rrss_prev, double rrss_new, int n, int k) {
  const int df2 = n - k - 1;
  if (df2 < 1)
    throw std::invalid_argument("partial_f_pvalue: need n - k - 1 >= 1");
  if (rrss_new <= 0.0) return 0.0;
  if (rrss_new >= rrss_prev) return 1.0;
  const double f = (rrss_prev - rrss_new) / rrss_new * static_cast<double>(df2);
  boost::math::fisher_f dist(1.0, static_cast<double>(df2));
  return boost::math::cdf(boost::math::complement(dist, f));
}

StepwiseState stepwise_begin(const RobustCorrelations& rc, int n, int n_models,
                             double gamma) {
  const int p = static_cast<int>(rc.sigma.cols());
  if (n_models < 1) throw std::invalid_argument("need at least one model");
  if (p < n_models)
    throw std::invalid_argument("need at least as many predictors as models");
  if (!(gamma > 0.0) || gamma > 1.0)
    throw std::invalid_argument("gamma must lie in (0, 1]");
  if (n < 3) throw std::invalid_argument("need n >= 3");

  StepwiseState s;
  s.n = n;
  s.gamma = gamma;
  s.in_pool.assign(p, 1);
  s.pool_size = p;
  s.models.resize(n_models);
  for (auto& m : s.models) {
    m.rrss = static_cast<double>(n);
    m.part = static_cast<double>(n) * rc.sigma;
    m.part_y = static_cast<double>(n) * rc.r_y;
  }
  return s;
}

StepwiseProposal select_next(const StepwiseState& s, int g) {
  const auto& m = s.models[static_cast<std::size_t>(g)];
  const int p = static_cast<int>(s.in_pool.size());
  const double tol = kCollinearTol * static_cast<double>(s.n);

  StepwiseProposal pr;
  double best_score = -1.0;
  for (int j = 0; j < p; ++j) {
    if (!s.in_pool[j]) continue;
    double pjj = m.part(j, j);
    if (pjj <= tol) continue;
    double score = std::abs(m.part_y[j]) / std::sqrt(pjj);
    if (score > best_score) {
      best_score = score;
      pr.j = j;
    }
  }
  if (pr.j < 0) return pr;  // nothing admissible

  pr.found = true;
  double delta = m.part_y[pr.j] * m.part_y[pr.j] / m.part(pr.j, pr.j);
  pr.rrss_new = std::max(m.rrss - delta, 0.0);
  // The F reference needs at least one denominator degree of freedom; the
  // last few entries of a nearly full model reuse the smallest valid k.
  int k = static_cast<int>(m.support.size()) + 1;
  k = std::min(k, s.n - 2);
  pr.pvalue = partial_f_pvalue(m.rrss, pr.rrss_new, s.n, k);
  return pr;
}

void commit_selected(StepwiseState& s, int g, const StepwiseProposal& pr) {
  auto& m = s.models[static_cast<std::size_t>(g)];
  const int j = pr.j;
  const int p = static_cast<int>(s.in_pool.size());

  m.support.push_back(j);
  m.rrss = pr.rrss_new;
  s.in_pool[j] = 0;
  --s.pool_size;

  // Condition the remaining pool on j. Column j itself is never read again,
  // so the in-place downdate below only touches live entries.
  const double pjj = m.part(j, j);
  const double py_j = m.part_y[j];
  for (int a = 0; a < p; ++a) {
    if (!s.in_pool[a]) continue;
    const double paj = m.part(a, j);
    m.part_y[a] -= paj / pjj * py_j;
    for (int b = a; b < p; ++b) {
      if (!s.in_pool[b]) continue;
      double v = m.part(a, b) - paj * m.part(b, j) / pjj;
      m.part(a, b) = v;
      m.part(b, a) = v;
    }
  }
}

std::vector<std::vector<int>> multi_model_stepwise(const RobustCorrelations& rc,
                                                   int n, int n_models,
                                                   double gamma) {
  StepwiseState s = stepwise_begin(rc, n, n_models, gamma);
  const double exhausted = kExhaustedTol * static_cast<double>(n);

  while (s.pool_size > 0) {
    bool any_empty_open = false;
    std::vector<StepwiseProposal> proposals(s.models.size());
    for (std::size_t g = 0; g < s.models.size(); ++g) {
      auto& m = s.models[g];
      if (m.saturated) continue;
      proposals[g] = select_next(s, static_cast<int>(g));
      if (!proposals[g].found || proposals[g].pvalue >= s.gamma) {
        m.saturated = true;
        continue;
      }
      if (m.support.empty()) any_empty_open = true;
    }

    int winner = -1;
    double winner_pvalue = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < s.models.size(); ++g) {
      if (s.models[g].saturated) continue;
      if (any_empty_open) {
        if (s.models[g].support.empty()) {
          winner = static_cast<int>(g);
          break;
        }
      } else if (proposals[g].pvalue < winner_pvalue) {
        winner_pvalue = proposals[g].pvalue;
        winner = static_cast<int>(g);
      }
    }
    if (winner < 0) break;  // everyone saturated

    commit_selected(s, winner, proposals[static_cast<std::size_t>(winner)]);
    auto& w = s.models[static_cast<std::size_t>(winner)];
    if (static_cast<int>(w.support.size()) >= n - 1 || w.rrss <= exhausted)
      w.saturated = true;
  }

  std::vector<std::vector<int>> out;
  out.reserve(s.models.size());
  for (auto& m : s.models) out.push_back(std::move(m.support));
  return out;
}

std::vector<std::vector<int>> multi_model_stepwise(const Dataset& d,
                                                   CorrelationEstimator est,
                                                   int n_models, double gamma) {
  auto rc = robust_correlations(d, est);
  return multi_model_stepwise(rc, static_cast<int>(d.n()), n_models, gamma);
}

}  // namespace rmss
