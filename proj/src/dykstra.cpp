#include "bap/dykstra.hpp"

#include "bap/diagnostics.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <string>

namespace bap {
namespace {

double max_norm(const Blocks& blocks, const Blocks& extra) {
  double best = 0.0;
  for (const Vec& y : blocks) best = std::max(best, y.norm());
  for (const Vec& y : extra) best = std::max(best, y.norm());
  return best;
}

Blocks concat(const Blocks& a, const Blocks& b) {
  Blocks out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Growth flag bookkeeping shared by the solvers.
class GrowthTracker {
 public:
  bool update(double norm) {
    norms_.push_back(norm);
    if (!flag_ && growth_detected(norms_, norms_.size() - 1)) {
      flag_ = true;
      flag_sweep_ = static_cast<long>(norms_.size());
    }
    return flag_;
  }
  bool flag() const { return flag_; }
  long flag_sweep() const { return flag_sweep_; }

 private:
  std::vector<double> norms_;
  bool flag_ = false;
  long flag_sweep_ = 0;
};

// Running v_i sum over the last p inner steps for the end-of-sweep monitor.
class VWindow {
 public:
  VWindow(const std::optional<Vec>& reference, std::size_t p) : reference_(reference), p_(p) {}

  void push(const Vec& x, const Vec& y) {
    if (!reference_) return;
    window_.push_back(y.dot(x - *reference_));
    if (window_.size() > p_) window_.pop_front();
    ++count_;
  }

  double value(const Vec& x) const {
    if (!reference_ || count_ < p_) return kNotAvailable;
    double v = 0.5 * (x - *reference_).squaredNorm();
    for (double t : window_) v += t;
    return v;
  }

 private:
  const std::optional<Vec>& reference_;
  std::size_t p_;
  std::deque<double> window_;
  std::size_t count_ = 0;
};

std::vector<std::size_t> resolve_insertion_points(const Problem& problem, const SolveOptions& options) {
  std::vector<std::size_t> points = options.insertion_points;
  if (points.empty()) points.push_back(problem.m());
  std::sort(points.begin(), points.end());
  if (std::adjacent_find(points.begin(), points.end()) != points.end()) {
    throw std::invalid_argument("extended_dykstra_solve: duplicate insertion point");
  }
  if (points.back() > problem.m()) {
    throw std::invalid_argument("extended_dykstra_solve: insertion point " + std::to_string(points.back()) +
                                " exceeds the number of sets");
  }
  return points;
}

}  // namespace

double dual_objective(const Problem& problem, const Blocks& blocks) {
  check_blocks(problem, blocks, "dual_objective");
  double value = 0.5 * (sum_blocks(blocks, problem.dim()) - problem.d).squaredNorm();
  for (std::size_t i = 0; i < blocks.size(); ++i) value += support(problem.sets[i], blocks[i]);
  return value;
}

double extended_dual_objective(const Problem& problem, const Blocks& blocks, const Blocks& extra,
                               const std::vector<std::optional<Halfspace>>& halfspaces) {
  check_blocks(problem, blocks, "extended_dual_objective");
  if (extra.size() != halfspaces.size()) {
    throw std::invalid_argument("extended_dual_objective: one halfspace per extra block required");
  }
  const Vec total = sum_blocks(blocks, problem.dim()) + sum_blocks(extra, problem.dim());
  double value = 0.5 * (total - problem.d).squaredNorm();
  for (std::size_t i = 0; i < blocks.size(); ++i) value += support(problem.sets[i], blocks[i]);
  for (std::size_t j = 0; j < extra.size(); ++j) {
    if (extra[j].size() != problem.dim()) throw std::invalid_argument("extended_dual_objective: extra block dimension");
    const ConvexSet h = halfspaces[j] ? ConvexSet(*halfspaces[j]) : ConvexSet(WholeSpace{problem.dim()});
    value += support(h, extra[j]);
  }
  return value;
}

double v_function(const Problem& problem, const Blocks& blocks, const Vec& xbar) {
  check_blocks(problem, blocks, "v_function");
  double value = 0.5 * (problem.d - sum_blocks(blocks, problem.dim()) - xbar).squaredNorm();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    // support(C - xbar, y) = support(C, y) - <y, xbar>
    value += support(problem.sets[i], blocks[i]) - blocks[i].dot(xbar);
  }
  return value;
}

void HalfspaceBuffer::insert(const Halfspace& h) {
  if (capacity_ == 0) return;
  ++clock_;
  for (Entry& e : entries_) {
    if (near_duplicate(e.h, h)) {
      e.stamp = clock_;
      e.inactive = false;
      return;
    }
  }
  entries_.push_back(Entry{h, clock_, false});
  while (entries_.size() > capacity_) {
    auto victim = entries_.end();
    for (auto it = entries_.begin(); it != entries_.end(); ++it) {
      if (it->inactive && (victim == entries_.end() || it->stamp < victim->stamp)) victim = it;
    }
    if (victim == entries_.end()) {
      victim = std::min_element(entries_.begin(), entries_.end(),
                                [](const Entry& a, const Entry& b) { return a.stamp < b.stamp; });
    }
    entries_.erase(victim);
  }
}

std::vector<Halfspace> HalfspaceBuffer::halfspaces() const {
  std::vector<Halfspace> out;
  out.reserve(entries_.size());
  for (const Entry& e : entries_) out.push_back(e.h);
  return out;
}

Vec CutSet::step(const Vec& x, Vec& y) {
  const Vec z = x + y;
  std::vector<Halfspace> list;
  if (cut_) list.push_back(*cut_);
  const std::vector<Halfspace> stored = buffer_.halfspaces();
  std::vector<int> position(stored.size(), -1);
  for (std::size_t j = 0; j < stored.size(); ++j) {
    if (cut_ && near_duplicate(*cut_, stored[j])) continue;
    position[j] = static_cast<int>(list.size());
    list.push_back(stored[j]);
  }

  Vec xn = z;
  const bool inside = std::all_of(list.begin(), list.end(), [&](const Halfspace& h) { return h.contains(z); });
  if (!inside) {
    QpOptions qp;
    for (std::size_t j = 0; j < list.size(); ++j) {
      for (const Halfspace& a : active_) {
        if (near_duplicate(a, list[j])) {
          qp.warm_active.push_back(j);
          break;
        }
      }
    }
    const PolyhedralProjection p = project_polyhedron(list, z, qp);
    std::vector<bool> flags(stored.size(), false);
    for (std::size_t j = 0; j < stored.size(); ++j) {
      if (position[j] >= 0) flags[j] = p.multipliers[position[j]] > 0.0;
    }
    buffer_.mark_active(flags);
    active_.clear();
    for (std::size_t j : p.active_set) active_.push_back(list[j]);
    xn = p.x;
  }

  cut_ = supporting_halfspace(z, xn);
  if (!cut_) xn = z;
  y = z - xn;
  if (cut_) buffer_.insert(*cut_);
  return xn;
}

void HalfspaceBuffer::mark_active(const std::vector<bool>& active) {
  if (active.size() != entries_.size()) throw std::invalid_argument("HalfspaceBuffer::mark_active: size mismatch");
  for (std::size_t j = 0; j < entries_.size(); ++j) entries_[j].inactive = !active[j];
}

DykstraSweepResult dykstra_sweep(const Problem& problem, Blocks& blocks, const Vec& x_in) {
  check_blocks(problem, blocks, "dykstra_sweep");
  DykstraSweepResult out;
  out.halfspaces.resize(problem.m());
  Vec x = x_in;
  for (std::size_t i = 0; i < problem.m(); ++i) {
    ProjectionResult r = project(problem.sets[i], x + blocks[i]);
    blocks[i] = std::move(r.y);
    x = std::move(r.x);
    out.halfspaces[i] = std::move(r.halfspace);
  }
  out.x = std::move(x);
  return out;
}

void shqp_refine(const Problem& problem, Blocks& blocks, const std::vector<std::size_t>& indices,
                 const std::vector<Halfspace>& halfspaces, const QpOptions& qp) {
  check_blocks(problem, blocks, "shqp_refine");
  if (indices.size() != halfspaces.size()) throw std::invalid_argument("shqp_refine: one halfspace per index");
  if (indices.empty()) return;
  std::vector<bool> chosen(problem.m(), false);
  for (std::size_t i : indices) {
    if (i >= problem.m() || chosen[i]) throw std::invalid_argument("shqp_refine: bad index " + std::to_string(i));
    chosen[i] = true;
  }
  Vec z = problem.d;
  for (std::size_t i = 0; i < problem.m(); ++i) {
    if (!chosen[i]) z -= blocks[i];
  }
  const std::vector<Vec> y = dual_decompose(halfspaces, z, qp);
  for (std::size_t j = 0; j < indices.size(); ++j) blocks[indices[j]] = y[j];
}

SolveResult dykstra_solve(const Problem& problem, const std::optional<Blocks>& warmstart,
                          const SolveOptions& options) {
  validate(problem);
  const std::size_t m = problem.m();
  Blocks blocks = warmstart ? *warmstart : zero_blocks(problem);
  check_blocks(problem, blocks, "warmstart");

  SolveResult result;
  SolveTrace& trace = result.trace;
  trace.initial_blocks = blocks;
  trace.initial_h = dual_objective(problem, blocks);
  trace.initial_h_k = trace.initial_h;

  Vec x = problem.d - sum_blocks(blocks, problem.dim());
  GrowthTracker growth;
  VWindow vwindow(options.reference, m);
  const Blocks no_extra;
  long step = 0;
  result.status = SolveStatus::MaxSweepsExceeded;

  for (long k = 1; k <= options.rule.max_sweeps; ++k) {
    const Blocks previous = blocks;
    std::vector<std::optional<Halfspace>> cuts(m);
    for (std::size_t i = 0; i < m; ++i) {
      ProjectionResult r = project(problem.sets[i], x + blocks[i]);
      blocks[i] = std::move(r.y);
      x = std::move(r.x);
      cuts[i] = std::move(r.halfspace);
      vwindow.push(x, blocks[i]);
      if (options.on_inner_step) {
        options.on_inner_step(InnerStep{++step, k, i, m, &x, &blocks[i], &previous[i], &blocks, &no_extra});
      }
    }

    if (options.shqp == ShqpSchedule::EverySweep) {
      std::vector<std::size_t> indices;
      std::vector<Halfspace> hs;
      for (std::size_t i = 0; i < m; ++i) {
        if (cuts[i]) {
          indices.push_back(i);
          hs.push_back(*cuts[i]);
        }
      }
      if (!indices.empty()) {
        RefineRecord rec{k, indices, dual_objective(problem, blocks), 0.0};
        shqp_refine(problem, blocks, indices, hs);
        rec.h_after = dual_objective(problem, blocks);
        trace.refines.push_back(std::move(rec));
        x = problem.d - sum_blocks(blocks, problem.dim());
      }
    }

    SweepRecord rec;
    rec.sweep = k;
    rec.h = dual_objective(problem, blocks);
    rec.h_k = rec.h;
    rec.primal_residual = primal_residual(problem, x);
    rec.max_dual_norm = max_norm(blocks, no_extra);
    rec.v_monitor = options.shqp == ShqpSchedule::None ? vwindow.value(x) : kNotAvailable;
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

  trace.growth_flag = growth.flag();
  trace.growth_flag_sweep = growth.flag_sweep();
  result.state.blocks = std::move(blocks);
  result.state.sweep = static_cast<long>(trace.sweeps.size());
  result.state.x = std::move(x);
  return result;
}

SolveResult extended_dykstra_solve(const Problem& problem, const std::optional<Blocks>& warmstart,
                                   const SolveOptions& options) {
  validate(problem);
  const std::size_t m = problem.m();
  const std::vector<std::size_t> points = resolve_insertion_points(problem, options);
  const std::size_t q = points.size();

  std::vector<CutSet> extras(q, CutSet(options.buffer_capacity));
  // Set i feeds the first extra set processed after it (cyclically).
  std::vector<std::size_t> owner(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t j = 0;
    while (j < q && points[j] < i + 1) ++j;
    owner[i] = j < q ? j : 0;
  }

  Blocks blocks = warmstart ? *warmstart : zero_blocks(problem);
  check_blocks(problem, blocks, "warmstart");
  Blocks extra(q, Vec::Zero(problem.dim()));
  auto current_cuts = [&] {
    std::vector<std::optional<Halfspace>> cuts;
    for (const CutSet& e : extras) cuts.push_back(e.cut());
    return cuts;
  };

  SolveResult result;
  SolveTrace& trace = result.trace;
  trace.initial_blocks = concat(blocks, extra);
  trace.initial_h = dual_objective(problem, blocks);
  trace.initial_h_k = trace.initial_h;

  Vec x = problem.d - sum_blocks(blocks, problem.dim());
  const std::size_t p = m + q;
  GrowthTracker growth;
  VWindow vwindow(options.reference, p);
  long step = 0;
  result.status = SolveStatus::MaxSweepsExceeded;

  for (long k = 1; k <= options.rule.max_sweeps; ++k) {
    const Blocks previous = blocks;
    const Blocks previous_extra = extra;
    std::size_t position = 0;
    std::size_t next_extra = 0;

    auto run_extras = [&](std::size_t done_sets) {
      while (next_extra < q && points[next_extra] == done_sets) {
        x = extras[next_extra].step(x, extra[next_extra]);
        vwindow.push(x, extra[next_extra]);
        if (options.on_inner_step) {
          options.on_inner_step(InnerStep{++step, k, position, p, &x, &extra[next_extra],
                                          &previous_extra[next_extra], &blocks, &extra});
        }
        ++position;
        ++next_extra;
      }
    };

    run_extras(0);
    for (std::size_t i = 0; i < m; ++i) {
      ProjectionResult r = project(problem.sets[i], x + blocks[i]);
      blocks[i] = std::move(r.y);
      x = std::move(r.x);
      if (r.halfspace) extras[owner[i]].ingest(*r.halfspace);
      vwindow.push(x, blocks[i]);
      if (options.on_inner_step) {
        options.on_inner_step(InnerStep{++step, k, position, p, &x, &blocks[i], &previous[i], &blocks, &extra});
      }
      ++position;
      run_extras(i + 1);
    }

    SweepRecord rec;
    rec.sweep = k;
    rec.h = dual_objective(problem, blocks);
    rec.h_k = extended_dual_objective(problem, blocks, extra, current_cuts());
    rec.primal_residual = primal_residual(problem, x);
    rec.max_dual_norm = max_norm(blocks, extra);
    rec.v_monitor = vwindow.value(x);
    double change = 0.0;
    for (std::size_t i = 0; i < m; ++i) rec.block_changes.push_back((blocks[i] - previous[i]).norm());
    for (std::size_t j = 0; j < q; ++j) rec.block_changes.push_back((extra[j] - previous_extra[j]).norm());
    for (double c : rec.block_changes) change += c;
    rec.x = x;
    if (options.record_blocks) rec.blocks = concat(blocks, extra);
    const bool flagged = growth.update(rec.max_dual_norm);
    const bool done = rec.primal_residual <= options.rule.primal_tolerance &&
                      (change <= options.rule.dual_tolerance || (options.monitor_growth && flagged));
    trace.sweeps.push_back(std::move(rec));
    if (done) {
      result.status = SolveStatus::Converged;
      break;
    }
  }

  trace.growth_flag = growth.flag();
  trace.growth_flag_sweep = growth.flag_sweep();
  result.state.blocks = std::move(blocks);
  result.state.extra = std::move(extra);
  result.state.sweep = static_cast<long>(trace.sweeps.size());
  result.state.x = std::move(x);
  return result;
}

}  // namespace bap
