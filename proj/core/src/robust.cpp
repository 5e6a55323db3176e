#include "rmss/robust.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmss/errors.hpp"

namespace rmss {

namespace {

constexpr double kMadConsistency = 1.4826;
constexpr double kTauCutoff = 3.0;
constexpr double kPi = 3.14159265358979323846;

double median_scratch(std::vector<double>& v) {
  const std::size_t m = v.size();
  if (m == 0) throw std::invalid_argument("median of an empty vector");
  auto mid = v.begin() + m / 2;
  std::nth_element(v.begin(), mid, v.end());
  double hi = *mid;
  if (m % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

// Average ranks, ties shared.
std::vector<double> ranks_of(const Vector& v) {
  const std::size_t m = static_cast<std::size_t>(v.size());
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(m);
  std::size_t i = 0;
  while (i < m) {
    std::size_t j = i;
    while (j + 1 < m && v[order[j + 1]] == v[order[i]]) ++j;
    double shared = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = shared;
    i = j + 1;
  }
  return rank;
}

double pearson(const Vector& a, const Vector& b) {
  Vector ac = a.array() - a.mean();
  Vector bc = b.array() - b.mean();
  double den = std::sqrt(ac.squaredNorm() * bc.squaredNorm());
  if (den == 0.0) return 0.0;
  return ac.dot(bc) / den;
}

double spearman(const Vector& a, const Vector& b) {
  auto ra = ranks_of(a);
  auto rb = ranks_of(b);
  Eigen::Map<const Vector> va(ra.data(), static_cast<Eigen::Index>(ra.size()));
  Eigen::Map<const Vector> vb(rb.data(), static_cast<Eigen::Index>(rb.size()));
  return pearson(va, vb);
}

double clip_unit(double r) { return std::clamp(r, -1.0, 1.0); }

// Gnanadesikan-Kettenring pairwise correlation from the robust scales of the
// rotated pair (u+v, u-v).
double gk_correlation(const Vector& u, const Vector& v) {
  double sp = mad(u + v);
  double sm = mad(u - v);
  double sp2 = sp * sp, sm2 = sm * sm;
  double den = sp2 + sm2;
  if (den == 0.0) return 0.0;
  return clip_unit((sp2 - sm2) / den);
}

double rank_correlation(const Vector& u, const Vector& v) {
  return clip_unit(2.0 * std::sin(kPi * spearman(u, v) / 6.0));
}

}  // namespace

double median(const Vector& v) {
  std::vector<double> scratch(v.data(), v.data() + v.size());
  return median_scratch(scratch);
}

double mad(const Vector& v) {
  double med = median(v);
  std::vector<double> dev(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    dev[static_cast<std::size_t>(i)] = std::abs(v[i] - med);
  return kMadConsistency * median_scratch(dev);
}

std::pair<Dataset, StandardizationInfo> robust_standardize(const Dataset& d) {
  Dataset out;
  StandardizationInfo info;
  const Index p = d.p();
  out.X.resize(d.n(), p);
  info.x_center.resize(p);
  info.x_scale.resize(p);
  for (Index j = 0; j < p; ++j) {
    double c = median(d.X.col(j));
    double s = mad(d.X.col(j));
    if (s == 0.0)
      throw DataError("column x" + std::to_string(j) +
                      " has zero robust scale (MAD); drop or jitter it");
    info.x_center[j] = c;
    info.x_scale[j] = s;
    out.X.col(j) = (d.X.col(j).array() - c) / s;
  }
  info.y_center = median(d.y);
  info.y_scale = mad(d.y);
  if (info.y_scale == 0.0)
    throw DataError("response y has zero robust scale (MAD)");
  out.y = (d.y.array() - info.y_center) / info.y_scale;
  return {std::move(out), info};
}

RobustCorrelations robust_correlations(const Dataset& d,
                                       CorrelationEstimator est) {
  const Index p = d.p();
  RobustCorrelations rc;
  rc.sigma = Matrix::Identity(p, p);
  rc.r_y.resize(p);
  auto corr = [&](const Vector& a, const Vector& b) {
    switch (est) {
      case CorrelationEstimator::Classical:
        return clip_unit(pearson(a, b));
      case CorrelationEstimator::PairwiseGK:
        return gk_correlation(a, b);
      case CorrelationEstimator::RankBased:
        return rank_correlation(a, b);
    }
    return 0.0;
  };
  for (Index a = 0; a < p; ++a) {
    for (Index b = a + 1; b < p; ++b) {
      double r = corr(d.X.col(a), d.X.col(b));
      rc.sigma(a, b) = r;
      rc.sigma(b, a) = r;
    }
    rc.r_y[a] = corr(d.X.col(a), d.y);
  }
  return rc;
}

double tau_scale(const Vector& r) {
  const Index m = r.size();
  if (m == 0) throw std::invalid_argument("tau_scale of an empty vector");
  double s0 = mad(r);
  if (s0 == 0.0) return 0.0;
  const double c2 = kTauCutoff * kTauCutoff;
  double acc = 0.0;
  for (Index i = 0; i < m; ++i) {
    double z = r[i] / s0;
    acc += std::min(z * z, c2);
  }
  return s0 * std::sqrt(acc / static_cast<double>(m));
}

}  // namespace rmss
