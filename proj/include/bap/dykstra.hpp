#pragma once

#include "bap/polytope_qp.hpp"
#include "bap/problem.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace bap {

/// h(y) = 1/2 |sum y_i - d|^2 + sum_i support(C_i, y_i).
double dual_objective(const Problem& problem, const Blocks& blocks);

/// h^k: dual_objective plus sum_j support(H_j, extra_j). A missing halfspace
/// stands for the whole space.
double extended_dual_objective(const Problem& problem, const Blocks& blocks, const Blocks& extra,
                               const std::vector<std::optional<Halfspace>>& halfspaces);

/// v(y) = 1/2 |d - sum y_i - xbar|^2 + sum_i support(C_i - xbar, y_i).
double v_function(const Problem& problem, const Blocks& blocks, const Vec& xbar);

/// Bounded store of supporting halfspaces of C.
class HalfspaceBuffer {
 public:
  explicit HalfspaceBuffer(std::size_t capacity = 32) : capacity_(capacity) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Adds h, refreshing the age of a near-duplicate instead of storing twice.
  /// Prunes down to capacity: halfspaces inactive at the last solve go first
  /// (oldest first), then the oldest overall.
  void insert(const Halfspace& h);

  std::vector<Halfspace> halfspaces() const;

  /// Records which stored halfspaces (by position in halfspaces()) were
  /// active in the latest QP solve.
  void mark_active(const std::vector<bool>& active);

 private:
  struct Entry {
    Halfspace h;
    unsigned long long stamp = 0;
    bool inactive = false;  ///< known inactive at the last solve
  };
  std::size_t capacity_;
  unsigned long long clock_ = 0;
  std::vector<Entry> entries_;
};

/// Extra set C^k = H^{k-1} ∩ (buffered halfspaces), where H^{k-1} is the
/// halfspace generated by the previous step on this set.
class CutSet {
 public:
  explicit CutSet(std::size_t capacity) : buffer_(capacity) {}

  void ingest(const Halfspace& h) { buffer_.insert(h); }

  /// Projects x + y onto C^k, replaces y by the new residual, updates the cut
  /// and returns the projection.
  Vec step(const Vec& x, Vec& y);

  /// Current cut; nullopt is the whole space.
  const std::optional<Halfspace>& cut() const { return cut_; }
  const HalfspaceBuffer& buffer() const { return buffer_; }

 private:
  HalfspaceBuffer buffer_;
  std::optional<Halfspace> cut_;
  std::vector<Halfspace> active_;
};

struct DykstraSweepResult {
  Vec x;
  /// Supporting halfspace from the latest projection onto each set.
  std::vector<std::optional<Halfspace>> halfspaces;
};

/// One cyclic pass over the sets, updating blocks in place. x_in must equal
/// d - sum of blocks.
DykstraSweepResult dykstra_sweep(const Problem& problem, Blocks& blocks, const Vec& x_in);

/// Warmstart Dykstra. `warmstart` defaults to all-zero blocks.
SolveResult dykstra_solve(const Problem& problem, const std::optional<Blocks>& warmstart = std::nullopt,
                          const SolveOptions& options = {});

/// Dykstra with extra halfspace-buffer sets. With buffer capacity 0 the
/// iterates coincide with dykstra_solve.
SolveResult extended_dykstra_solve(const Problem& problem, const std::optional<Blocks>& warmstart = std::nullopt,
                                   const SolveOptions& options = {});

/// Replaces y_i for i in `indices` by the minimizers of
///   f(sum y) + sum_{i in J} support(H_i, y_i)
/// with the remaining blocks fixed. `halfspaces[j]` is the cut for set indices[j].
void shqp_refine(const Problem& problem, Blocks& blocks, const std::vector<std::size_t>& indices,
                 const std::vector<Halfspace>& halfspaces, const QpOptions& qp = {});

}  // namespace bap
