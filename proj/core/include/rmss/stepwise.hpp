#pragma once

#include <vector>

#include "rmss/dataset.hpp"
#include "rmss/robust.hpp"

namespace rmss {

// Upper-tail p-value of the partial F statistic for the k-th predictor
// entering a model:
//   F = ((rrss_prev - rrss_new) / rrss_new) * (n - k - 1),
// referred to an F(1, n - k - 1) distribution.
// rrss_new == 0 returns 0 (a perfect fit is maximally significant);
// rrss_new == rrss_prev returns 1. Requires n - k - 1 >= 1.
double partial_f_pvalue(double rrss_prev, double rrss_new, int n, int k);

// One candidate model grown by the shared stepwise procedure. `part` and
// `part_y` hold n-scaled partial covariances among the remaining candidates
// given this model's committed predictors; they start at n*sigma and n*r_y
// and are downdated in place on every commit (O(p^2) per step).
struct StepwiseModel {
  std::vector<int> support;  // committed predictors in entry order
  double rrss = 0.0;         // residual sum of squares on the correlation scale
  bool saturated = false;
  Matrix part;
  Vector part_y;
};

struct StepwiseState {
  int n = 0;
  double gamma = 1.0;
  std::vector<char> in_pool;  // shared candidate pool, 1 = still available
  int pool_size = 0;
  std::vector<StepwiseModel> models;
};

StepwiseState stepwise_begin(const RobustCorrelations& rc, int n, int n_models,
                             double gamma);

struct StepwiseProposal {
  int j = -1;            // best admissible candidate, -1 if none
  double rrss_new = 0.0;
  double pvalue = 1.0;
  bool found = false;
};

// Best next predictor for model g: the pool candidate maximizing
// |part_y_j| / sqrt(part_jj), ties to the lowest index. Candidates whose
// residual variance part_jj has collapsed below 1e-10 * n are numerically
// collinear with the committed set and are skipped. Does not mutate state.
StepwiseProposal select_next(const StepwiseState& s, int g);

// Commits proposal pr to model g: appends the predictor, updates rrss,
// removes the predictor from the shared pool, and downdates g's partial
// covariances by conditioning on it.
void commit_selected(StepwiseState& s, int g, const StepwiseProposal& pr);

// Grows n_models disjoint predictor sets from a shared candidate pool.
// Each round every unsaturated model proposes its best candidate with a
// partial-F p-value; a proposal with p-value >= gamma saturates its model.
// While any unsaturated model is still empty, the round's commit goes to the
// lowest-indexed empty model, so every model is seeded before open p-value
// competition begins; afterwards the unsaturated model with the smallest
// p-value commits (ties to the lowest model index). A model also saturates
// when it reaches n - 1 predictors, when its rrss is exhausted, or when no
// admissible candidate remains. Stops when all models are saturated or the
// pool is empty. Returned supports are pairwise disjoint, in entry order.
std::vector<std::vector<int>> multi_model_stepwise(const RobustCorrelations& rc,
                                                   int n, int n_models,
                                                   double gamma);

// Convenience overload: estimates the correlations from d first.
std::vector<std::vector<int>> multi_model_stepwise(const Dataset& d,
                                                   CorrelationEstimator est,
                                                   int n_models, double gamma);

}  // namespace rmss
