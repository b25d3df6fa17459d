#pragma once

#include "bap/geometry.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace bap {

/// One dual block per set.
using Blocks = std::vector<Vec>;

/// Project d onto C_1 ∩ ... ∩ C_m.
struct Problem {
  Vec d;
  std::vector<ConvexSet> sets;
  /// Per-set weights for the product-space solvers; uniform when absent.
  std::optional<std::vector<double>> weights;

  Eigen::Index dim() const { return d.size(); }
  std::size_t m() const { return sets.size(); }

  friend bool operator==(const Problem& a, const Problem& b);
};

/// Checks dimensions, finiteness and weights. Throws std::invalid_argument.
void validate(const Problem& problem);

/// Weights of the problem, or uniform 1/m.
std::vector<double> weights_or_uniform(const Problem& problem);

Blocks zero_blocks(const Problem& problem);

/// Throws std::invalid_argument naming the offending block.
void check_blocks(const Problem& problem, const Blocks& blocks, const char* what);

Vec sum_blocks(const Blocks& blocks, Eigen::Index dim);

struct StoppingRule {
  double primal_tolerance = 1e-8;  ///< on max_i dist(x, C_i)
  double dual_tolerance = 1e-10;   ///< on sum_i |y_i^k - y_i^{k-1}|
  long max_sweeps = 100000;
};

enum class SolveStatus { Converged, MaxSweepsExceeded };

const char* to_string(SolveStatus status);

inline constexpr double kNotAvailable = std::numeric_limits<double>::quiet_NaN();

struct SweepRecord {
  long sweep = 0;
  double h = 0.0;    ///< dual objective of the m set blocks
  double h_k = 0.0;  ///< dual objective including extra blocks and their current halfspaces
  double primal_residual = 0.0;
  double max_dual_norm = 0.0;
  double v_monitor = kNotAvailable;  ///< v_i at the last inner step of the sweep
  std::vector<double> block_changes;
  Vec x;
  Blocks blocks;  ///< all blocks, filled only when recording is enabled
};

struct RefineRecord {
  long sweep = 0;
  std::vector<std::size_t> indices;
  double h_before = 0.0;
  double h_after = 0.0;
};

struct SolveTrace {
  double initial_h = 0.0;
  double initial_h_k = 0.0;
  Blocks initial_blocks;
  std::vector<SweepRecord> sweeps;
  std::vector<RefineRecord> refines;
  bool growth_flag = false;
  long growth_flag_sweep = 0;
};

/// Set blocks followed by any extra blocks (one per halfspace buffer or SHQP node).
struct DualState {
  Blocks blocks;
  Blocks extra;
  long sweep = 0;
  Vec x;  ///< current primal iterate
};

struct SolveResult {
  DualState state;
  SolveTrace trace;
  SolveStatus status = SolveStatus::MaxSweepsExceeded;
};

/// One projection inside a sweep, in the order executed.
struct InnerStep {
  long index = 0;               ///< global step counter, starting at 1
  long sweep = 0;
  std::size_t position = 0;     ///< position in the sweep, 0-based
  std::size_t steps_per_sweep = 0;
  const Vec* x = nullptr;       ///< iterate after the step
  const Vec* y = nullptr;       ///< new block
  const Vec* y_previous = nullptr;  ///< the same block one sweep earlier
  const Blocks* blocks = nullptr;   ///< set blocks after the step
  const Blocks* extra = nullptr;    ///< extra blocks after the step
};

using InnerStepObserver = std::function<void(const InnerStep&)>;

enum class ShqpSchedule { None, EverySweep };

struct SolveOptions {
  StoppingRule rule;
  bool record_blocks = false;
  /// Known solution P_C(d); enables the v monitor column.
  std::optional<Vec> reference;
  InnerStepObserver on_inner_step;
  /// Ignore the dual tolerance once the boundedness monitor flags growth.
  bool monitor_growth = true;
  /// Plain Dykstra only: refine with supporting halfspaces after each sweep.
  ShqpSchedule shqp = ShqpSchedule::None;
  /// Extended Dykstra: halfspace buffer capacity (0 disables the extra sets).
  std::size_t buffer_capacity = 32;
  /// Extended Dykstra: an extra set is processed after this many ordinary
  /// sets, for each entry. Empty means a single one after all m sets.
  std::vector<std::size_t> insertion_points;
  /// Simultaneous Dykstra: worker threads for the leaf projections.
  unsigned threads = 1;
};

/// max_i dist(x, C_i).
double primal_residual(const Problem& problem, const Vec& x);

}  // namespace bap
