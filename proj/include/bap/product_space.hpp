#pragma once

#include "bap/problem.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace bap {

/// Validates positive weights summing to one (within 1e-12).
void check_weights(const std::vector<double>& weights, std::size_t m);

/// Leaves carry a set index; internal nodes carry children and may run an
/// extra halfspace-buffer step after averaging.
struct TreeNode {
  std::vector<std::size_t> children;
  std::optional<std::size_t> set;
  bool shqp = false;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class TreeTopology {
 public:
  /// Root with one leaf per set.
  static TreeTopology flat(std::size_t m);

  /// Throws std::invalid_argument unless the nodes form a rooted tree whose
  /// leaves hold each set index 0..m-1 exactly once.
  TreeTopology(std::vector<TreeNode> nodes, std::size_t root, std::size_t m);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t root() const { return root_; }
  std::size_t m() const { return m_; }

  /// Children before parents, root last.
  const std::vector<std::size_t>& postorder() const { return postorder_; }

  /// Sum of leaf weights below each node.
  std::vector<double> node_weights(const std::vector<double>& lambda) const;

  /// Weighted mean of leaf values evaluated bottom-up through the tree.
  Vec aggregate(const std::vector<double>& lambda, const std::vector<Vec>& leaf_values) const;

  friend bool operator==(const TreeTopology& a, const TreeTopology& b) {
    return a.nodes_ == b.nodes_ && a.root_ == b.root_ && a.m_ == b.m_;
  }

 private:
  std::vector<TreeNode> nodes_;
  std::size_t root_ = 0;
  std::size_t m_ = 0;
  std::vector<std::size_t> postorder_;
};

/// Simultaneous Dykstra: all projections from the common iterate, then the
/// weighted average. Trace h is the product-space dual
///   1/2 |d - sum lambda_i y_i|^2 + sum lambda_i support(C_i, y_i).
SolveResult simultaneous_dykstra_solve(const Problem& problem, const std::vector<double>& weights,
                                       const std::optional<Blocks>& warmstart = std::nullopt,
                                       const SolveOptions& options = {});

/// Two-set problem in X^m, in coordinates scaled by sqrt(lambda_i) so the
/// weighted inner product becomes the Euclidean one.
struct ProductLift {
  Problem problem;  ///< sets: {product of C_i, diagonal}
  std::vector<double> weights;
  std::vector<double> scales;  ///< sqrt(lambda_i)
  Eigen::Index n = 0;

  Vec lift(const std::vector<Vec>& parts) const;
  std::vector<Vec> unlift(const Vec& v) const;
  /// Lifted warmstart matching x0 = d - sum lambda_i y_i.
  Blocks warmstart(const Blocks& blocks) const;
};

ProductLift product_lift(const Problem& problem, const std::vector<double>& weights);

/// Tree Dykstra. Flagged internal nodes keep their own block and halfspace
/// buffer, fed by halfspaces generated in their subtree. state.extra holds the
/// node blocks in postorder of the flagged nodes.
SolveResult tree_dykstra_solve(const Problem& problem, const TreeTopology& topology,
                               const std::optional<Blocks>& warmstart = std::nullopt,
                               const SolveOptions& options = {});

}  // namespace bap
