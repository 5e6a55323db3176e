#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "oracles.hpp"
#include "rmss/robust.hpp"
#include "rmss/simrng.hpp"
#include "rmss/stepwise.hpp"

using namespace rmss;

namespace {

Dataset random_dataset(std::uint64_t seed, int n, int p) {
  SimRng rng(seed);
  Dataset d;
  d.X = Matrix(n, p);
  d.y = Vector(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) d.X(i, j) = rng.normal();
  // response loads on the first few columns so selection has signal
  for (int i = 0; i < n; ++i)
    d.y[i] = 2.0 * d.X(i, 0) - 1.5 * d.X(i, 1) + 0.8 * d.X(i, 2) +
             0.7 * rng.normal();
  return d;
}

// Replays the conditioning recursion from scratch over a committed sequence;
// the incremental cache must agree with this.
void replay_partials(const RobustCorrelations& rc, int n,
                     const std::vector<int>& committed, Matrix& part,
                     Vector& part_y) {
  part = static_cast<double>(n) * rc.sigma;
  part_y = static_cast<double>(n) * rc.r_y;
  for (int jk : committed) {
    Matrix prev = part;
    Vector prev_y = part_y;
    double pjj = prev(jk, jk);
    for (Eigen::Index a = 0; a < part.rows(); ++a) {
      part_y[a] = prev_y[a] - prev(a, jk) / pjj * prev_y[jk];
      for (Eigen::Index b = 0; b < part.cols(); ++b)
        part(a, b) = prev(a, b) - prev(a, jk) * prev(b, jk) / pjj;
    }
  }
}

}  // namespace

TEST_CASE("partial F p-value agrees with numeric quadrature") {
  // F = ((10 - 5) / 5) * (20 - 3 - 1) = 16 on 1 and 16 df
  double p = partial_f_pvalue(10.0, 5.0, 20, 3);
  double ref = oracle::f_upper_tail_quadrature(16.0, 16);
  CHECK(p == doctest::Approx(ref).epsilon(1e-6));
  CHECK(std::abs(p - 0.001) < 1e-4);  // coarse location guard

  for (double f_prev : {4.0, 8.0, 30.0}) {
    double pv = partial_f_pvalue(10.0, 10.0 / (1.0 + f_prev / 16.0), 20, 3);
    double rv = oracle::f_upper_tail_quadrature(f_prev, 16);
    CHECK(pv == doctest::Approx(rv).epsilon(1e-6));
  }
}

TEST_CASE("partial F p-value edge cases") {
  CHECK(partial_f_pvalue(10.0, 0.0, 20, 3) == 0.0);
  CHECK(partial_f_pvalue(10.0, 10.0, 20, 3) == 1.0);
  // larger F means smaller p
  CHECK(partial_f_pvalue(10.0, 2.0, 20, 3) <
        partial_f_pvalue(10.0, 8.0, 20, 3));
  CHECK_THROWS_AS(partial_f_pvalue(10.0, 5.0, 4, 3), std::invalid_argument);
}

TEST_CASE("classical stepwise tracks exact least-squares RSS") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Dataset d = random_dataset(seed, 30, 8);
    oracle::classical_standardize(d.X, d.y);
    auto rc = robust_correlations(d, CorrelationEstimator::Classical);
    auto st = stepwise_begin(rc, 30, 1, 1.0);
    for (int step = 0; step < 5; ++step) {
      auto pr = select_next(st, 0);
      REQUIRE(pr.found);
      commit_selected(st, 0, pr);
      double rss = oracle::ols_rss(d.X, d.y, st.models[0].support);
      CHECK(std::abs(st.models[0].rrss - rss) <= 1e-8);
    }
  }
}

TEST_CASE("classical stepwise reproduces textbook forward selection order") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    Dataset d = random_dataset(seed, 30, 8);
    oracle::classical_standardize(d.X, d.y);
    auto rc = robust_correlations(d, CorrelationEstimator::Classical);
    auto sets = multi_model_stepwise(rc, 30, 1, 1.0);
    auto ref = oracle::forward_stepwise_reference(d.X, d.y, 8);
    REQUIRE(sets.size() == 1);
    REQUIRE(sets[0].size() == ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) CHECK(sets[0][k] == ref[k]);
  }
}

TEST_CASE("incremental partial covariances equal a from-scratch replay") {
  Dataset d = random_dataset(42, 30, 8);
  oracle::classical_standardize(d.X, d.y);
  auto rc = robust_correlations(d, CorrelationEstimator::Classical);
  auto st = stepwise_begin(rc, 30, 1, 1.0);
  for (int step = 0; step < 4; ++step) {
    auto pr = select_next(st, 0);
    REQUIRE(pr.found);
    commit_selected(st, 0, pr);
    Matrix part;
    Vector part_y;
    replay_partials(rc, 30, st.models[0].support, part, part_y);
    for (int j = 0; j < 8; ++j) {
      if (!st.in_pool[j]) continue;
      CHECK(st.models[0].part_y[j] ==
            doctest::Approx(part_y[j]).epsilon(1e-10));
      for (int b = 0; b < 8; ++b) {
        if (!st.in_pool[b]) continue;
        CHECK(st.models[0].part(j, b) ==
              doctest::Approx(part(j, b)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("two models split signal and noise, both nonempty and disjoint") {
  SimRng rng(77);
  Dataset d;
  d.X = Matrix(60, 4);
  d.y = Vector(60);
  for (int i = 0; i < 60; ++i) {
    for (int j = 0; j < 4; ++j) d.X(i, j) = rng.normal();
    d.y[i] = 3.0 * d.X(i, 0) + 2.0 * d.X(i, 1) + 0.5 * rng.normal();
  }
  oracle::classical_standardize(d.X, d.y);
  auto rc = robust_correlations(d, CorrelationEstimator::Classical);
  auto sets = multi_model_stepwise(rc, 60, 2, 1.0);
  REQUIRE(sets.size() == 2);
  CHECK(!sets[0].empty());
  CHECK(!sets[1].empty());
  // the two strongest predictors seed the two models
  CHECK(sets[0][0] == 0);
  CHECK(sets[1][0] == 1);
  std::set<int> seen;
  for (const auto& s : sets)
    for (int j : s) {
      CHECK(seen.insert(j).second);  // disjoint
      CHECK(j >= 0);
      CHECK(j < 4);
    }
}

TEST_CASE("as many models as predictors: one predictor each") {
  Dataset d = random_dataset(9, 30, 4);
  oracle::classical_standardize(d.X, d.y);
  auto rc = robust_correlations(d, CorrelationEstimator::Classical);
  auto sets = multi_model_stepwise(rc, 30, 4, 1.0);
  std::set<int> seen;
  for (const auto& s : sets) {
    CHECK(s.size() == 1);
    seen.insert(s.begin(), s.end());
  }
  CHECK(seen.size() == 4);
}

TEST_CASE("single generous model absorbs every informative predictor") {
  Dataset d = random_dataset(13, 30, 3);
  oracle::classical_standardize(d.X, d.y);
  auto rc = robust_correlations(d, CorrelationEstimator::Classical);
  auto st = stepwise_begin(rc, 30, 1, 1.0);
  std::vector<double> rrss_path;
  while (true) {
    auto pr = select_next(st, 0);
    if (!pr.found || pr.pvalue >= 1.0) break;
    commit_selected(st, 0, pr);
    rrss_path.push_back(st.models[0].rrss);
    if (st.pool_size == 0) break;
  }
  CHECK(rrss_path.size() == 3);
  for (std::size_t k = 1; k < rrss_path.size(); ++k)
    CHECK(rrss_path[k] <= rrss_path[k - 1] + 1e-12);
  CHECK(st.pool_size == 0);
}

TEST_CASE("an exact duplicate column is skipped as collinear") {
  SimRng rng(19);
  Dataset d;
  d.X = Matrix(40, 3);
  d.y = Vector(40);
  for (int i = 0; i < 40; ++i) {
    double z = rng.normal();
    d.X(i, 0) = z;
    d.X(i, 1) = z;  // exact duplicate
    d.X(i, 2) = rng.normal();
    d.y[i] = 2.0 * z + 0.6 * d.X(i, 2) + 0.3 * rng.normal();
  }
  oracle::classical_standardize(d.X, d.y);
  auto rc = robust_correlations(d, CorrelationEstimator::Classical);
  auto sets = multi_model_stepwise(rc, 40, 1, 1.0);
  REQUIRE(sets.size() == 1);
  CHECK(sets[0].size() == 2);
  bool has0 = std::count(sets[0].begin(), sets[0].end(), 0) > 0;
  bool has1 = std::count(sets[0].begin(), sets[0].end(), 1) > 0;
  CHECK(has0 != has1);  // only one of the twins enters
  CHECK(std::count(sets[0].begin(), sets[0].end(), 2) == 1);
}

TEST_CASE("a strict threshold saturates pure-noise models empty") {
  SimRng rng(23);
  Dataset d;
  d.X = Matrix(50, 6);
  d.y = Vector(50);
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 6; ++j) d.X(i, j) = rng.normal();
    d.y[i] = rng.normal();
  }
  oracle::classical_standardize(d.X, d.y);
  auto rc = robust_correlations(d, CorrelationEstimator::Classical);
  auto sets = multi_model_stepwise(rc, 50, 3, 1e-12);
  for (const auto& s : sets) CHECK(s.empty());
}

TEST_CASE("stepwise input validation") {
  Dataset d = random_dataset(1, 20, 3);
  oracle::classical_standardize(d.X, d.y);
  auto rc = robust_correlations(d, CorrelationEstimator::Classical);
  CHECK_THROWS_AS(multi_model_stepwise(rc, 20, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(multi_model_stepwise(rc, 20, 4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(multi_model_stepwise(rc, 20, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(multi_model_stepwise(rc, 20, 1, 1.5), std::invalid_argument);
}
