#pragma once

#include "bap/problem.hpp"

#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

namespace bap {

struct RateBound {
  double bound = 0.0;
  bool hypotheses_hold = true;  ///< a1 <= 1.5/alpha and a2 <= 1.5/(2 alpha)
};

/// 1.5 / (alpha k) for sequences with a_{k-1} >= a_k + alpha a_k^2.
RateBound rate_bound_btv(double a1, double a2, double alpha, long k);

/// max{(1/2)^((k-1)/2) a0, 4/(alpha (k-1))}. Throws std::invalid_argument for k < 2.
double rate_bound_bam(double a0, double alpha, long k);

/// Smallest integer k with k >= max{2/ln2 (ln a0 + ln 1/eps), 4/(alpha eps)} + 1.
long rate_threshold_bam(double a0, double alpha, double epsilon);

struct RateCertificate {
  double alpha = 0.0;
  double constant = 0.0;  ///< q^3 M^2 L^2 with q = m-1 (plain) or m (extended)
  std::vector<double> a;  ///< a_k = h_k - h_star, k = 0..K
  std::vector<bool> recurrence_pass;  ///< entry k-1 for the step k-1 -> k
  std::vector<bool> envelope_pass;    ///< entry k for both closed-form bounds at a_k
  bool vacuous = false;
  bool passed = true;
};

/// Checks a_{k-1} >= a_k + alpha a_k^2, alpha = mu / (2 q^3 M^2 L^2), and the
/// closed-form O(1/k) envelopes. `h_values[0]` is the initial dual value.
/// Throws std::invalid_argument when some h value lies below h_star.
RateCertificate am_rate_envelope(const std::vector<double>& h_values, double h_star, std::size_t m, double M,
                                 double mu, double L, bool extended);

/// h values starting from the initial one; uses h_k for extended traces.
std::vector<double> dual_series(const SolveTrace& trace, bool extended);

/// max over recorded sweeps and blocks 0..count-1 of |y_i - y_i*|. Extra
/// blocks are compared against zero. Needs recorded blocks.
double measure_M(const SolveTrace& trace, const Blocks& y_star, std::size_t count);

/// h(y) - (1/2 |d|^2 - 1/2 |d - xbar|^2).
double optimality_gap(const Problem& problem, const Blocks& blocks, const Vec& xbar);

/// 1/2 |d|^2 - 1/2 |d - xbar|^2, the optimal dual value.
double optimal_dual_value(const Problem& problem, const Vec& xbar);

struct BoundednessReport {
  std::vector<double> max_norms;
  bool flag = false;
  long flag_sweep = 0;  ///< first sweep (1-based) at which the flag is raised
};

/// Growth test at position k (0-based) of a per-sweep norm series: the norm
/// grew at least 10x relative to the first nonzero value within the last
/// 1000 sweeps and is still rising over the last 100 sweeps.
bool growth_detected(const std::vector<double>& norms, std::size_t k);

BoundednessReport boundedness_monitor(const SolveTrace& trace);
BoundednessReport boundedness_monitor(const std::vector<double>& max_norms);

/// Tracks the inner-step quantities
///   v_i = 1/2 |x_i - xbar|^2 + sum over the last p steps <e_l, x_l - xbar>
/// and the increments |x_{i-1} - x_i|, where p is the number of steps per sweep.
class InnerStepMonitor {
 public:
  InnerStepMonitor(Vec start, Vec xbar) : previous_x_(std::move(start)), xbar_(std::move(xbar)) {}

  void observe(const InnerStep& step);

  /// v values for steps i >= p (earlier steps have incomplete sums).
  const std::vector<double>& v() const { return v_; }
  /// 1/2 |x_i - xbar|^2 alongside v().
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& increments() const { return increments_; }
  double increment_square_sum() const { return square_sum_; }
  /// Largest |(x_{i-1} - x_i) - (e_i - e_{i-p})| seen.
  double increment_identity_error() const { return identity_error_; }

 private:
  Vec previous_x_;
  Vec xbar_;
  std::deque<double> window_;
  std::vector<double> v_;
  std::vector<double> lower_;
  std::vector<double> increments_;
  double square_sum_ = 0.0;
  double identity_error_ = 0.0;
};

/// Dual blocks from a long plain Dykstra run at tight tolerance.
Blocks reference_dual(const Problem& problem, long max_sweeps = 1000000);

}  // namespace bap
