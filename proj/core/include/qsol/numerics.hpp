#pragma once

#include <span>
#include <vector>

namespace qsol {

/// Sum with a fixed binary reduction tree (blocks of 8 summed left to right).
/// The tree depends only on the length of the input.
double pairwise_sum(std::span<const double> values);

/// log(sum_i exp(v_i)) with the max-shift; returns -inf for empty or all -inf.
double log_sum_exp(std::span<const double> values);

/// Gauss-Legendre rule of order m on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Nodes/weights by Newton iteration on the three-term recurrence. Results
/// are cached per order; the returned reference stays valid for the process.
const GaussRule& gauss_legendre(int order);

/// Least-squares line through (log x_i, log y_i).
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  int points = 0;
};

SlopeFit loglog_fit(std::span<const double> x, std::span<const double> y);

}  // namespace qsol
