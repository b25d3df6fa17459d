#include "bap/product_space.hpp"

#include "bap/diagnostics.hpp"
#include "bap/dykstra.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>

namespace bap {
namespace {

double max_norm(const Blocks& blocks, const Blocks& extra) {
  double best = 0.0;
  for (const Vec& y : blocks) best = std::max(best, y.norm());
  for (const Vec& y : extra) best = std::max(best, y.norm());
  return best;
}

// Runs body(i) for i in [0, count), split across up to `threads` workers.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) body(i);
    });
  }
}

struct Tracker {
  std::vector<double> norms;
  bool flag = false;
  long flag_sweep = 0;

  bool update(double norm) {
    norms.push_back(norm);
    if (!flag && growth_detected(norms, norms.size() - 1)) {
      flag = true;
      flag_sweep = static_cast<long>(norms.size());
    }
    return flag;
  }
};

// 1/2 |d - sum lambda_i y_i - sum w_n y_n|^2 + sum lambda_i support(C_i, y_i)
//   + sum w_n support(H_n, y_n)
double weighted_dual(const Problem& problem, const std::vector<double>& lambda, const Blocks& blocks,
                     const std::vector<double>& node_weight, const Blocks& extra,
                     const std::vector<std::optional<Halfspace>>& cuts) {
  Vec r = problem.d;
  double value = 0.0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    r -= lambda[i] * blocks[i];
    value += lambda[i] * support(problem.sets[i], blocks[i]);
  }
  for (std::size_t j = 0; j < extra.size(); ++j) {
    r -= node_weight[j] * extra[j];
    const ConvexSet h = cuts[j] ? ConvexSet(*cuts[j]) : ConvexSet(WholeSpace{problem.dim()});
    value += node_weight[j] * support(h, extra[j]);
  }
  return value + 0.5 * r.squaredNorm();
}

}  // namespace

void check_weights(const std::vector<double>& weights, std::size_t m) {
  if (weights.size() != m) {
    throw std::invalid_argument("weights: expected " + std::to_string(m) + " entries, got " +
                                std::to_string(weights.size()));
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("weights: entries must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("weights: entries must sum to one");
}

TreeTopology TreeTopology::flat(std::size_t m) {
  std::vector<TreeNode> nodes(m + 1);
  for (std::size_t i = 0; i < m; ++i) {
    nodes[0].children.push_back(i + 1);
    nodes[i + 1].set = i;
  }
  return TreeTopology(std::move(nodes), 0, m);
}

TreeTopology::TreeTopology(std::vector<TreeNode> nodes, std::size_t root, std::size_t m)
    : nodes_(std::move(nodes)), root_(root), m_(m) {
  if (root_ >= nodes_.size()) throw std::invalid_argument("tree: root index out of range");
  std::vector<int> parent_count(nodes_.size(), 0);
  std::vector<int> set_count(m_, 0);
  for (std::size_t v = 0; v < nodes_.size(); ++v) {
    const TreeNode& node = nodes_[v];
    if (node.set && !node.children.empty()) {
      throw std::invalid_argument("tree: node " + std::to_string(v) + " has both a set and children");
    }
    if (!node.set && node.children.empty()) {
      throw std::invalid_argument("tree: node " + std::to_string(v) + " has neither a set nor children");
    }
    if (node.set) {
      if (*node.set >= m_) throw std::invalid_argument("tree: node " + std::to_string(v) + " has bad set index");
      ++set_count[*node.set];
      if (node.shqp) throw std::invalid_argument("tree: leaf " + std::to_string(v) + " cannot be flagged");
    }
    for (std::size_t c : node.children) {
      if (c >= nodes_.size()) throw std::invalid_argument("tree: node " + std::to_string(v) + " has bad child");
      ++parent_count[c];
    }
  }
  if (parent_count[root_] != 0) throw std::invalid_argument("tree: root has a parent");
  for (std::size_t v = 0; v < nodes_.size(); ++v) {
    if (v != root_ && parent_count[v] != 1) {
      throw std::invalid_argument("tree: node " + std::to_string(v) + " must have exactly one parent");
    }
  }
  for (std::size_t i = 0; i < m_; ++i) {
    if (set_count[i] != 1) {
      throw std::invalid_argument("tree: set " + std::to_string(i) + " must appear at exactly one leaf");
    }
  }
  // Iterative postorder; also detects nodes unreachable from the root.
  std::vector<std::pair<std::size_t, std::size_t>> stack{{root_, 0}};
  while (!stack.empty()) {
    auto& [v, next] = stack.back();
    if (next < nodes_[v].children.size()) {
      const std::size_t c = nodes_[v].children[next++];
      stack.emplace_back(c, 0);
    } else {
      postorder_.push_back(v);
      stack.pop_back();
    }
  }
  if (postorder_.size() != nodes_.size()) throw std::invalid_argument("tree: nodes unreachable from the root");
}

std::vector<double> TreeTopology::node_weights(const std::vector<double>& lambda) const {
  check_weights(lambda, m_);
  std::vector<double> w(nodes_.size(), 0.0);
  for (std::size_t v : postorder_) {
    const TreeNode& node = nodes_[v];
    if (node.set) {
      w[v] = lambda[*node.set];
    } else {
      for (std::size_t c : node.children) w[v] += w[c];
    }
  }
  return w;
}

Vec TreeTopology::aggregate(const std::vector<double>& lambda, const std::vector<Vec>& leaf_values) const {
  if (leaf_values.size() != m_) throw std::invalid_argument("tree: one value per set required");
  const std::vector<double> w = node_weights(lambda);
  std::vector<Vec> value(nodes_.size());
  for (std::size_t v : postorder_) {
    const TreeNode& node = nodes_[v];
    if (node.set) {
      value[v] = leaf_values[*node.set];
    } else {
      value[v] = Vec::Zero(leaf_values.front().size());
      for (std::size_t c : node.children) value[v] += (w[c] / w[v]) * value[c];
    }
  }
  return value[root_];
}

SolveResult simultaneous_dykstra_solve(const Problem& problem, const std::vector<double>& weights,
                                       const std::optional<Blocks>& warmstart, const SolveOptions& options) {
  validate(problem);
  const std::size_t m = problem.m();
  check_weights(weights, m);
  Blocks blocks = warmstart ? *warmstart : zero_blocks(problem);
  check_blocks(problem, blocks, "warmstart");

  const Blocks no_extra;
  const std::vector<double> no_weight;
  const std::vector<std::optional<Halfspace>> no_cut;
  SolveResult result;
  SolveTrace& trace = result.trace;
  trace.initial_blocks = blocks;
  trace.initial_h = weighted_dual(problem, weights, blocks, no_weight, no_extra, no_cut);
  trace.initial_h_k = trace.initial_h;

  Vec x = problem.d;
  for (std::size_t i = 0; i < m; ++i) x -= weights[i] * blocks[i];
  std::vector<Vec> xs(m);
  Tracker growth;
  result.status = SolveStatus::MaxSweepsExceeded;

  for (long k = 1; k <= options.rule.max_sweeps; ++k) {
    const Blocks previous = blocks;
    parallel_for(m, options.threads, [&](std::size_t i) {
      ProjectionResult r = project(problem.sets[i], x + blocks[i]);
      blocks[i] = std::move(r.y);
      xs[i] = std::move(r.x);
    });
    Vec next = Vec::Zero(problem.dim());
    for (std::size_t i = 0; i < m; ++i) next += weights[i] * xs[i];
    x = std::move(next);

    SweepRecord rec;
    rec.sweep = k;
    rec.h = weighted_dual(problem, weights, blocks, no_weight, no_extra, no_cut);
    rec.h_k = rec.h;
    rec.primal_residual = primal_residual(problem, x);
    rec.max_dual_norm = max_norm(blocks, no_extra);
    double change = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      rec.block_changes.push_back((blocks[i] - previous[i]).norm());
      change += rec.block_changes.back();
    }
    rec.x = x;
    if (options.record_blocks) rec.blocks = blocks;
    const bool flagged = growth.update(rec.max_dual_norm);
    const bool done = rec.primal_residual <= options.rule.primal_tolerance &&
                      (change <= options.rule.dual_tolerance || (options.monitor_growth && flagged));
    trace.sweeps.push_back(std::move(rec));
    if (done) {
      result.status = SolveStatus::Converged;
      break;
    }
  }

  trace.growth_flag = growth.flag;
  trace.growth_flag_sweep = growth.flag_sweep;
  result.state.blocks = std::move(blocks);
  result.state.sweep = static_cast<long>(trace.sweeps.size());
  result.state.x = std::move(x);
  return result;
}

Vec ProductLift::lift(const std::vector<Vec>& parts) const {
  if (parts.size() != scales.size()) throw std::invalid_argument("ProductLift::lift: wrong number of parts");
  Vec v(n * static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) v.segment(static_cast<Eigen::Index>(i) * n, n) = scales[i] * parts[i];
  return v;
}

std::vector<Vec> ProductLift::unlift(const Vec& v) const {
  if (v.size() != n * static_cast<Eigen::Index>(scales.size())) {
    throw std::invalid_argument("ProductLift::unlift: dimension mismatch");
  }
  std::vector<Vec> parts;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    parts.push_back(v.segment(static_cast<Eigen::Index>(i) * n, n) / scales[i]);
  }
  return parts;
}

Blocks ProductLift::warmstart(const Blocks& blocks) const {
  const Vec y = lift(blocks);
  const Vec r = problem.d - y;
  const ProjectionResult diag = project(problem.sets[1], r);
  return Blocks{y, diag.y};
}

ProductLift product_lift(const Problem& problem, const std::vector<double>& weights) {
  validate(problem);
  check_weights(weights, problem.m());
  ProductLift lift;
  lift.weights = weights;
  lift.n = problem.dim();
  for (double w : weights) lift.scales.push_back(std::sqrt(w));
  const auto m = static_cast<Eigen::Index>(problem.m());
  const Eigen::Index n = lift.n;

  Mat basis = Mat::Zero(n * m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    basis.block(i * n, 0, n, n) = lift.scales[static_cast<std::size_t>(i)] * Mat::Identity(n, n);
  }
  lift.problem.d = lift.lift(std::vector<Vec>(problem.m(), problem.d));
  lift.problem.sets.push_back(make_scaled_product(problem.sets, lift.scales));
  lift.problem.sets.push_back(ConvexSet(AffineSubspace{Vec::Zero(n * m), basis}));
  return lift;
}

SolveResult tree_dykstra_solve(const Problem& problem, const TreeTopology& topology,
                               const std::optional<Blocks>& warmstart, const SolveOptions& options) {
  validate(problem);
  const std::size_t m = problem.m();
  if (topology.m() != m) throw std::invalid_argument("tree_dykstra_solve: topology built for a different set count");
  const std::vector<double> lambda = weights_or_uniform(problem);
  const std::vector<double> w = topology.node_weights(lambda);
  const auto& nodes = topology.nodes();

  // Flagged nodes in postorder; extra block j belongs to flagged[j].
  std::vector<std::size_t> flagged;
  std::vector<int> extra_of(nodes.size(), -1);
  for (std::size_t v : topology.postorder()) {
    if (nodes[v].shqp) {
      extra_of[v] = static_cast<int>(flagged.size());
      flagged.push_back(v);
    }
  }
  std::vector<double> extra_weight;
  for (std::size_t v : flagged) extra_weight.push_back(w[v]);

  Blocks blocks = warmstart ? *warmstart : zero_blocks(problem);
  check_blocks(problem, blocks, "warmstart");
  Blocks extra(flagged.size(), Vec::Zero(problem.dim()));
  std::vector<CutSet> cuts(flagged.size(), CutSet(options.buffer_capacity));
  auto current_cuts = [&] {
    std::vector<std::optional<Halfspace>> out;
    for (const CutSet& c : cuts) out.push_back(c.cut());
    return out;
  };

  SolveResult result;
  SolveTrace& trace = result.trace;
  trace.initial_blocks = blocks;
  trace.initial_blocks.insert(trace.initial_blocks.end(), extra.begin(), extra.end());
  trace.initial_h = weighted_dual(problem, lambda, blocks, extra_weight, extra, current_cuts());
  trace.initial_h_k = trace.initial_h;

  Vec x = problem.d;
  for (std::size_t i = 0; i < m; ++i) x -= lambda[i] * blocks[i];
  std::vector<Vec> value(nodes.size());
  std::vector<std::vector<Halfspace>> generated(nodes.size());
  std::vector<std::optional<Halfspace>> leaf_cut(m);
  Tracker growth;
  result.status = SolveStatus::MaxSweepsExceeded;

  for (long k = 1; k <= options.rule.max_sweeps; ++k) {
    const Blocks previous = blocks;
    const Blocks previous_extra = extra;
    std::vector<Vec> xs(m);
    parallel_for(m, options.threads, [&](std::size_t i) {
      ProjectionResult r = project(problem.sets[i], x + blocks[i]);
      blocks[i] = std::move(r.y);
      xs[i] = std::move(r.x);
      leaf_cut[i] = std::move(r.halfspace);
    });

    for (std::size_t v : topology.postorder()) {
      const TreeNode& node = nodes[v];
      generated[v].clear();
      if (node.set) {
        value[v] = xs[*node.set];
        if (leaf_cut[*node.set]) generated[v].push_back(*leaf_cut[*node.set]);
        continue;
      }
      value[v] = Vec::Zero(problem.dim());
      for (std::size_t c : node.children) {
        value[v] += (w[c] / w[v]) * value[c];
        generated[v].insert(generated[v].end(), generated[c].begin(), generated[c].end());
      }
      if (extra_of[v] >= 0) {
        const auto j = static_cast<std::size_t>(extra_of[v]);
        for (const Halfspace& h : generated[v]) cuts[j].ingest(h);
        value[v] = cuts[j].step(value[v], extra[j]);
        if (cuts[j].cut()) generated[v].push_back(*cuts[j].cut());
      }
    }
    x = value[topology.root()];

    SweepRecord rec;
    rec.sweep = k;
    rec.h = weighted_dual(problem, lambda, blocks, extra_weight, extra, current_cuts());
    rec.h_k = rec.h;
    rec.primal_residual = primal_residual(problem, x);
    rec.max_dual_norm = max_norm(blocks, extra);
    double change = 0.0;
    for (std::size_t i = 0; i < m; ++i) rec.block_changes.push_back((blocks[i] - previous[i]).norm());
    for (std::size_t j = 0; j < extra.size(); ++j) rec.block_changes.push_back((extra[j] - previous_extra[j]).norm());
    for (double c : rec.block_changes) change += c;
    rec.x = x;
    if (options.record_blocks) {
      rec.blocks = blocks;
      rec.blocks.insert(rec.blocks.end(), extra.begin(), extra.end());
    }
    const bool flagged_growth = growth.update(rec.max_dual_norm);
    const bool done = rec.primal_residual <= options.rule.primal_tolerance &&
                      (change <= options.rule.dual_tolerance || (options.monitor_growth && flagged_growth));
    trace.sweeps.push_back(std::move(rec));
    if (done) {
      result.status = SolveStatus::Converged;
      break;
    }
  }

  trace.growth_flag = growth.flag;
  trace.growth_flag_sweep = growth.flag_sweep;
  result.state.blocks = std::move(blocks);
  result.state.extra = std::move(extra);
  result.state.sweep = static_cast<long>(trace.sweeps.size());
  result.state.x = std::move(x);
  return result;
}

}  // namespace bap
