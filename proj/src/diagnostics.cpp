#include "bap/diagnostics.hpp"

#include "bap/dykstra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bap {

RateBound rate_bound_btv(double a1, double a2, double alpha, long k) {
  if (!(alpha > 0.0) || k < 1) throw std::invalid_argument("rate_bound_btv: need alpha > 0 and k >= 1");
  RateBound r;
  r.bound = 1.5 / (alpha * static_cast<double>(k));
  r.hypotheses_hold = a1 <= 1.5 / alpha && a2 <= 1.5 / (2.0 * alpha);
  return r;
}

double rate_bound_bam(double a0, double alpha, long k) {
  if (k < 2) throw std::invalid_argument("rate_bound_bam: k must be at least 2");
  if (!(alpha > 0.0)) throw std::invalid_argument("rate_bound_bam: alpha must be positive");
  const double kk = static_cast<double>(k);
  return std::max(std::pow(0.5, (kk - 1.0) / 2.0) * a0, 4.0 / (alpha * (kk - 1.0)));
}

long rate_threshold_bam(double a0, double alpha, double epsilon) {
  if (!(alpha > 0.0) || !(epsilon > 0.0)) throw std::invalid_argument("rate_threshold_bam: need alpha, epsilon > 0");
  const double geometric = a0 > 0.0 ? 2.0 / std::log(2.0) * (std::log(a0) + std::log(1.0 / epsilon)) : 0.0;
  const double value = std::max(geometric, 4.0 / (alpha * epsilon)) + 1.0;
  return static_cast<long>(std::ceil(value));
}

RateCertificate am_rate_envelope(const std::vector<double>& h_values, double h_star, std::size_t m, double M,
                                 double mu, double L, bool extended) {
  RateCertificate cert;
  const double q = extended ? static_cast<double>(m) : static_cast<double>(m) - 1.0;
  const double scale_tol = 1e-12 * std::max(1.0, std::abs(h_star));
  for (double h : h_values) {
    const double a = h - h_star;
    if (a < -1e-9 * std::max(1.0, std::abs(h_star))) {
      throw std::invalid_argument("am_rate_envelope: dual value below h_star");
    }
    cert.a.push_back(std::max(a, 0.0));
  }
  if (q <= 0.0) {
    cert.vacuous = true;
    return cert;
  }
  cert.constant = q * q * q * M * M * L * L;
  cert.alpha = cert.constant > 0.0 ? mu / (2.0 * cert.constant) : std::numeric_limits<double>::infinity();

  const auto& a = cert.a;
  const std::size_t n = a.size();
  auto tol = [&](double ref) { return 1e-9 * std::abs(ref) + scale_tol; };
  for (std::size_t k = 1; k < n; ++k) {
    const double penalty = std::isinf(cert.alpha) ? (a[k] > scale_tol ? cert.alpha : 0.0) : cert.alpha * a[k] * a[k];
    const bool ok = a[k - 1] >= a[k] + penalty - tol(a[k - 1]);
    cert.recurrence_pass.push_back(ok);
    cert.passed = cert.passed && ok;
  }
  cert.envelope_pass.assign(n, true);
  if (cert.constant > 0.0) {
    const double c = cert.constant / mu;
    for (std::size_t k = 1; k < n; ++k) {
      const double kk = static_cast<double>(k);
      double first = 3.0 * c;
      if (n > 1) first = std::max(first, a[1]);
      if (n > 2) first = std::max(first, 2.0 * a[2]);
      bool ok = a[k] <= first / kk + tol(first / kk);
      if (k >= 2) {
        const double second = std::max(std::pow(0.5, (kk - 1.0) / 2.0) * a[0], 8.0 * c / (kk - 1.0));
        ok = ok && a[k] <= second + tol(second);
      }
      cert.envelope_pass[k] = ok;
      cert.passed = cert.passed && ok;
    }
  }
  return cert;
}

std::vector<double> dual_series(const SolveTrace& trace, bool extended) {
  std::vector<double> out;
  out.reserve(trace.sweeps.size() + 1);
  out.push_back(extended ? trace.initial_h_k : trace.initial_h);
  for (const SweepRecord& r : trace.sweeps) out.push_back(extended ? r.h_k : r.h);
  return out;
}

double measure_M(const SolveTrace& trace, const Blocks& y_star, std::size_t count) {
  double M = 0.0;
  auto visit = [&](const Blocks& blocks) {
    if (blocks.empty()) throw std::invalid_argument("measure_M: trace has no recorded blocks");
    for (std::size_t i = 0; i < count && i < blocks.size(); ++i) {
      const double d = i < y_star.size() ? (blocks[i] - y_star[i]).norm() : blocks[i].norm();
      M = std::max(M, d);
    }
  };
  visit(trace.initial_blocks);
  for (const SweepRecord& r : trace.sweeps) visit(r.blocks);
  return M;
}

double optimal_dual_value(const Problem& problem, const Vec& xbar) {
  return 0.5 * problem.d.squaredNorm() - 0.5 * (problem.d - xbar).squaredNorm();
}

double optimality_gap(const Problem& problem, const Blocks& blocks, const Vec& xbar) {
  return dual_objective(problem, blocks) - optimal_dual_value(problem, xbar);
}

bool growth_detected(const std::vector<double>& norms, std::size_t k) {
  if (k == 0 || k >= norms.size()) return false;
  const std::size_t start = k >= 1000 ? k - 1000 : 0;
  std::size_t base = start;
  while (base < k && !(norms[base] > 0.0)) ++base;
  if (base >= k) return false;
  if (norms[k] < 10.0 * norms[base]) return false;
  const std::size_t recent = std::max(base, k >= 100 ? k - 100 : 0);
  return norms[k] > norms[recent] * (1.0 + 1e-3);
}

BoundednessReport boundedness_monitor(const std::vector<double>& max_norms) {
  BoundednessReport report;
  report.max_norms = max_norms;
  for (std::size_t k = 1; k < max_norms.size(); ++k) {
    if (growth_detected(max_norms, k)) {
      report.flag = true;
      report.flag_sweep = static_cast<long>(k) + 1;
      break;
    }
  }
  return report;
}

BoundednessReport boundedness_monitor(const SolveTrace& trace) {
  std::vector<double> norms;
  norms.reserve(trace.sweeps.size());
  for (const SweepRecord& r : trace.sweeps) norms.push_back(r.max_dual_norm);
  return boundedness_monitor(norms);
}

void InnerStepMonitor::observe(const InnerStep& step) {
  const Vec& x = *step.x;
  const double inc = (previous_x_ - x).norm();
  increments_.push_back(inc);
  square_sum_ += inc * inc;
  const Vec expected = *step.y - *step.y_previous;
  identity_error_ = std::max(identity_error_, ((previous_x_ - x) - expected).norm());
  previous_x_ = x;

  window_.push_back(step.y->dot(x - xbar_));
  if (window_.size() > step.steps_per_sweep) window_.pop_front();
  if (static_cast<std::size_t>(step.index) >= step.steps_per_sweep) {
    double v = 0.5 * (x - xbar_).squaredNorm();
    for (double t : window_) v += t;
    v_.push_back(v);
    lower_.push_back(0.5 * (x - xbar_).squaredNorm());
  }
}

Blocks reference_dual(const Problem& problem, long max_sweeps) {
  SolveOptions options;
  options.rule.primal_tolerance = 1e-12;
  options.rule.dual_tolerance = 1e-12;
  options.rule.max_sweeps = max_sweeps;
  options.monitor_growth = false;
  return dykstra_solve(problem, std::nullopt, options).state.blocks;
}

}  // namespace bap
