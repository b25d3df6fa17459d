#pragma once

#include "bap/problem.hpp"

#include <optional>
#include <vector>

namespace bap {

/// argmin_v t support(set, v) + 1/2 |v - u|^2 = u - t P_set(u / t).
Vec prox_support(const ConvexSet& set, const Vec& u, double t);

/// Positive root of (1 - s)/s^2 = 1/theta^2.
double theta_schedule_next(double theta);

/// Smooth part f(y) = 1/2 |sum y_i - d|^2 of the dual and its gradient
/// (every block equals sum y_i - d).
double smooth_part(const Problem& problem, const Blocks& blocks);
Blocks smooth_gradient(const Problem& problem, const Blocks& blocks);

struct ApgOutput {
  SolveResult result;            ///< state.blocks is the best iterate found
  std::vector<double> theta;     ///< theta_0, theta_1, ...
  std::vector<double> h_values;  ///< h(x_0), h(x_1), ...
  std::vector<double> h_hat;     ///< h(xhat_1), h(xhat_2), ...
  /// Right-hand side l_f(xhat; y) + L/2 |xhat - y|^2 of the acceptance test,
  /// aligned with h_values[1..].
  std::vector<double> model;
  long best_index = 0;
  long refinements_accepted = 0;
  long refinements_rejected = 0;
};

/// Accelerated proximal gradient on the dual with L = m and the equality
/// theta schedule from theta_0 = 1. The iteration limit is
/// options.rule.max_sweeps; options.shqp switches on the refinement step.
ApgOutput apg_solve(const Problem& problem, const std::optional<Blocks>& start = std::nullopt,
                    const SolveOptions& options = {});

/// Smallest k with k >= sqrt(4L/eps) |x - z0| - 2 (at least 0).
long apg_threshold_index(double L, double epsilon, double distance);

}  // namespace bap
