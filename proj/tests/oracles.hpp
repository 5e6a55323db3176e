// Independent reference implementations used only by the tests. These are
// deliberately written from the textbook formulas, not by calling into the
// library, so they can vouch for it.
#pragma once

#include <sys/wait.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "rmss/dataset.hpp"

namespace oracle {

using rmss::Matrix;
using rmss::Vector;

inline Matrix take_columns(const Matrix& X, const std::vector<int>& cols) {
  Matrix out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(k) = X.col(cols[k]);
  return out;
}

// Exact least squares of y on the listed columns (minimum-norm when rank
// deficient); returns the full-length coefficient vector.
inline Vector ols_beta(const Matrix& X, const Vector& y,
                       const std::vector<int>& cols) {
  Vector beta = Vector::Zero(X.cols());
  if (cols.empty()) return beta;
  Matrix Xs = take_columns(X, cols);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Xs);
  Vector b = cod.solve(y);
  for (std::size_t k = 0; k < cols.size(); ++k) beta[cols[k]] = b[k];
  return beta;
}

inline double ols_rss(const Matrix& X, const Vector& y,
                      const std::vector<int>& cols) {
  Vector beta = ols_beta(X, y, cols);
  return (y - X * beta).squaredNorm();
}

// Classical standardization: mean 0, standard deviation 1 with divisor n,
// so a standardized column has squared norm exactly n.
inline void classical_standardize(Matrix& X, Vector& y) {
  const double n = static_cast<double>(X.rows());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    double m = X.col(j).mean();
    X.col(j).array() -= m;
    X.col(j) /= std::sqrt(X.col(j).squaredNorm() / n);
  }
  double m = y.mean();
  y.array() -= m;
  y /= std::sqrt(y.squaredNorm() / n);
}

inline double pearson(const Vector& a, const Vector& b) {
  Vector ac = a.array() - a.mean();
  Vector bc = b.array() - b.mean();
  return ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
}

// Textbook forward stepwise: at each step fit every remaining candidate by
// exact least squares and take the one with the lowest residual sum of
// squares (ties to the lowest index). Returns the entry order.
inline std::vector<int> forward_stepwise_reference(const Matrix& X,
                                                   const Vector& y,
                                                   int max_steps) {
  std::vector<int> selected;
  std::vector<char> used(X.cols(), 0);
  for (int step = 0; step < max_steps; ++step) {
    int best = -1;
    double best_rss = std::numeric_limits<double>::infinity();
    for (int j = 0; j < X.cols(); ++j) {
      if (used[j]) continue;
      std::vector<int> trial = selected;
      trial.push_back(j);
      double rss = ols_rss(X, y, trial);
      if (rss < best_rss) {
        best_rss = rss;
        best = j;
      }
    }
    if (best < 0) break;
    used[best] = 1;
    selected.push_back(best);
  }
  return selected;
}

namespace detail {
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive(const std::function<double(double)>& f, double a,
                       double b, double fa, double fm, double fb, double whole,
                       double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(f, a, m, fa, flm, fm);
  double right = simpson(f, m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}
}  // namespace detail

inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol) {
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = detail::simpson(f, a, b, fa, fm, fb);
  return detail::adaptive(f, a, b, fa, fm, fb, whole, tol, 60);
}

// Upper tail of F(1, d2) by numeric quadrature of the Student-t density:
// P(F > x) = 2 P(T_d2 > sqrt(x)). The tail beyond the finite integration
// window is folded in by the 1/w substitution, so no truncation error.
inline double f_upper_tail_quadrature(double x, int d2) {
  if (x <= 0) return 1.0;
  const double d = static_cast<double>(d2);
  const double s = std::sqrt(x);
  const double logc = std::lgamma(0.5 * (d + 1.0)) - std::lgamma(0.5 * d) -
                      0.5 * std::log(d * 3.14159265358979323846);
  auto t_density = [&](double t) {
    return std::exp(logc - 0.5 * (d + 1.0) * std::log1p(t * t / d));
  };
  // integral over (s, inf) via t = s / w, w in (0, 1]
  auto g = [&](double w) {
    if (w <= 0.0) return 0.0;
    double t = s / w;
    return t_density(t) * s / (w * w);
  };
  double tail = integrate(g, 1e-12, 1.0, 1e-14);
  return 2.0 * tail;
}

// Best achievable squared distance when keeping at most r coordinates of v
// among `allowed`, found by exhaustive subset enumeration.
inline double brute_force_topk_error(const Vector& v,
                                     const std::vector<int>& allowed, int r) {
  double total = v.squaredNorm();
  int m = static_cast<int>(allowed.size());
  int k = std::min(r, m);
  if (k <= 0) return total;
  double best = total;
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    double kept = 0;
    for (int i : idx) kept += v[allowed[i]] * v[allowed[i]];
    best = std::min(best, total - kept);
    int i = k - 1;
    while (i >= 0 && idx[i] == m - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return best;
}

inline double dense_sigma_max_sq(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(A.transpose() * A);
  return es.eigenvalues().maxCoeff();
}

// Runs a shell command, returning its exit code and captured stdout+stderr.
inline std::pair<int, std::string> run_command(const std::string& cmd) {
  std::string full = cmd + " 2>&1";
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(full.c_str(), "r"), pclose);
  std::string out;
  if (!pipe) return {-1, out};
  char buf[4096];
  while (std::size_t got = fread(buf, 1, sizeof(buf), pipe.get()))
    out.append(buf, got);
  int rc = pclose(pipe.release());
  if (rc == -1) return {-1, out};
  return {WEXITSTATUS(rc), out};
}

}  // namespace oracle
