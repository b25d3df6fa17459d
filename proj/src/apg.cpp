#include "bap/apg.hpp"

#include "bap/dykstra.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bap {
namespace {

double block_distance_sq(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]).squaredNorm();
  return s;
}

Blocks combine(double alpha, const Blocks& a, double beta, const Blocks& b) {
  Blocks out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = alpha * a[i] + beta * b[i];
  return out;
}

}  // namespace

Vec prox_support(const ConvexSet& set, const Vec& u, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("prox_support: t must be positive");
  return u - t * project(set, u / t).x;
}

double theta_schedule_next(double theta) {
  if (!(theta > 0.0) || theta > 1.0) throw std::invalid_argument("theta_schedule_next: theta must lie in (0, 1]");
  const double t2 = theta * theta;
  return (std::sqrt(t2 * t2 + 4.0 * t2) - t2) / 2.0;
}

double smooth_part(const Problem& problem, const Blocks& blocks) {
  return 0.5 * (sum_blocks(blocks, problem.dim()) - problem.d).squaredNorm();
}

Blocks smooth_gradient(const Problem& problem, const Blocks& blocks) {
  const Vec g = sum_blocks(blocks, problem.dim()) - problem.d;
  return Blocks(blocks.size(), g);
}

long apg_threshold_index(double L, double epsilon, double distance) {
  if (!(L > 0.0) || !(epsilon > 0.0)) throw std::invalid_argument("apg_threshold_index: need L, epsilon > 0");
  const double k = std::sqrt(4.0 * L / epsilon) * distance - 2.0;
  // Rounding noise must not push an exact integer up by one.
  return std::max(0L, static_cast<long>(std::ceil(k - 1e-9 * std::max(1.0, std::abs(k)))));
}

ApgOutput apg_solve(const Problem& problem, const std::optional<Blocks>& start, const SolveOptions& options) {
  validate(problem);
  const std::size_t m = problem.m();
  const double L = static_cast<double>(m);
  Blocks X = start ? *start : zero_blocks(problem);
  check_blocks(problem, X, "start");
  Blocks Z = X;

  ApgOutput out;
  SolveResult& result = out.result;
  SolveTrace& trace = result.trace;
  double theta = 1.0;
  double hx = dual_objective(problem, X);
  if (!std::isfinite(hx)) throw std::invalid_argument("apg_solve: start point has infinite dual objective");
  trace.initial_blocks = X;
  trace.initial_h = hx;
  trace.initial_h_k = hx;
  out.theta.push_back(theta);
  out.h_values.push_back(hx);

  Blocks best = X;
  double best_h = hx;
  result.status = SolveStatus::MaxSweepsExceeded;

  for (long k = 1; k <= options.rule.max_sweeps; ++k) {
    const Blocks Y = combine(1.0 - theta, X, theta, Z);
    const Vec g = sum_blocks(Y, problem.dim()) - problem.d;
    const double step = 1.0 / (theta * L);
    Blocks Znew(m);
    std::vector<Halfspace> cuts;
    std::vector<std::size_t> cut_index;
    for (std::size_t i = 0; i < m; ++i) {
      const Vec u = Z[i] - step * g;
      const ProjectionResult r = project(problem.sets[i], u / step);
      Znew[i] = u - step * r.x;
      if (r.halfspace) {
        cuts.push_back(*r.halfspace);
        cut_index.push_back(i);
      }
    }
    const Blocks Xhat = combine(1.0 - theta, X, theta, Znew);

    double linear = 0.0;
    for (std::size_t i = 0; i < m; ++i) linear += g.dot(Xhat[i] - Y[i]);
    double penalty = 0.0;
    for (std::size_t i = 0; i < m; ++i) penalty += support(problem.sets[i], Xhat[i]);
    const double model = smooth_part(problem, Y) + linear + penalty + 0.5 * L * block_distance_sq(Xhat, Y);
    const double h_hat = dual_objective(problem, Xhat);

    Blocks Xnext = Xhat;
    double h_next = h_hat;
    if (options.shqp != ShqpSchedule::None && !cut_index.empty()) {
      Blocks refined = Xhat;
      shqp_refine(problem, refined, cut_index, cuts);
      const double h_ref = dual_objective(problem, refined);
      RefineRecord rec{k, cut_index, h_hat, h_ref};
      trace.refines.push_back(rec);
      if (h_ref <= model && h_ref <= h_hat) {
        Xnext = std::move(refined);
        h_next = h_ref;
        ++out.refinements_accepted;
      } else {
        ++out.refinements_rejected;
      }
    }

    const double change = std::sqrt(block_distance_sq(Xnext, X));
    SweepRecord rec;
    rec.sweep = k;
    for (std::size_t i = 0; i < m; ++i) rec.block_changes.push_back((Xnext[i] - X[i]).norm());
    X = std::move(Xnext);
    Z = std::move(Znew);
    theta = theta_schedule_next(theta);
    out.theta.push_back(theta);
    out.h_values.push_back(h_next);
    out.h_hat.push_back(h_hat);
    out.model.push_back(model);
    if (h_next < best_h) {
      best_h = h_next;
      best = X;
      out.best_index = k;
    }

    const Vec candidate = problem.d - sum_blocks(best, problem.dim());
    rec.h = best_h;
    rec.h_k = h_next;
    rec.primal_residual = primal_residual(problem, candidate);
    rec.max_dual_norm = 0.0;
    for (const Vec& y : X) rec.max_dual_norm = std::max(rec.max_dual_norm, y.norm());
    rec.x = candidate;
    if (options.record_blocks) rec.blocks = X;
    const bool done = rec.primal_residual <= options.rule.primal_tolerance && change <= options.rule.dual_tolerance;
    trace.sweeps.push_back(std::move(rec));
    if (done) {
      result.status = SolveStatus::Converged;
      break;
    }
  }

  result.state.x = problem.d - sum_blocks(best, problem.dim());
  result.state.blocks = std::move(best);
  result.state.sweep = static_cast<long>(trace.sweeps.size());
  return out;
}

}  // namespace bap
