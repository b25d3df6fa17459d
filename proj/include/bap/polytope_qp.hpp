#pragma once

#include "bap/geometry.hpp"

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bap {

enum class QpErrorKind { Infeasible, IterationLimit };

class QpError : public std::runtime_error {
 public:
  QpError(QpErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  QpErrorKind kind() const { return kind_; }

 private:
  QpErrorKind kind_;
};

/// Result of projecting onto the intersection of halfspaces.
///
/// `multipliers` has one entry per input halfspace (merged duplicates carry
/// zero); x = z - sum_j multipliers_j * normal_j.
struct PolyhedralProjection {
  Vec x;
  Vec multipliers;
  std::vector<std::size_t> active_set;
  int iterations = 0;
};

struct QpOptions {
  /// Primal feasibility tolerance, relative to max(1, |z|_inf, max |b_j|).
  double feasibility_tolerance = 1e-13;
  /// Singular values of the active constraint matrix below this fraction of
  /// the largest are truncated.
  double rank_tolerance = 1e-12;
  int max_iterations = 0;  ///< 0 selects 50 * (halfspaces + 1)
  /// Optional warm start: indices believed active. Ignored unless the
  /// corresponding equality-constrained solve has positive multipliers.
  std::vector<std::size_t> warm_active;
};

/// Projects z onto the intersection of `halfspaces` with a dual active-set
/// method (Goldfarb-Idnani style) for
///   min_{mu >= 0}  1/2 |z - A^T mu|^2 + b^T mu.
/// Throws QpError on an empty intersection or when the cycling guard trips.
PolyhedralProjection project_polyhedron(std::span<const Halfspace> halfspaces, const Vec& z,
                                        const QpOptions& options = {});

/// Dual blocks y_j = mu_j a_j of the projection; z - sum_j y_j is the projection.
std::vector<Vec> dual_decompose(std::span<const Halfspace> halfspaces, const Vec& z,
                                const QpOptions& options = {});

/// sup <y, x> over the polyhedron; +infinity when y is outside cone{a_j}.
double polyhedron_support(std::span<const Halfspace> halfspaces, const Vec& y);

}  // namespace bap
