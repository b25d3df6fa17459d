#include "bap/diagnostics.hpp"
#include "bap/dykstra.hpp"

#include "instances.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

namespace bap {
namespace {

using testing::Rng;
using testing::mixed_instance;
using testing::narrow_wedge;
using testing::polyhedral_instance;
using testing::random_blocks_in_ball;
using testing::random_vec;
using testing::two_halfspaces;

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

SolveOptions fixed_sweeps(long sweeps) {
  SolveOptions o;
  o.rule.max_sweeps = sweeps;
  o.rule.primal_tolerance = 1e-300;
  o.rule.dual_tolerance = 1e-300;
  o.monitor_growth = false;
  return o;
}

TEST(DualObjective, Examples) {
  const Problem p = two_halfspaces();
  EXPECT_DOUBLE_EQ(dual_objective(p, zero_blocks(p)), 1.0);
  EXPECT_NEAR(dual_objective(p, {v2(1, 0), v2(0, 1)}), 0.0, 1e-15);
  EXPECT_EQ(dual_objective(p, {v2(0, 1), v2(0, 1)}), kInfinity);

  Problem ball;
  ball.d = v2(3, 4);
  ball.sets = {make_ball(v2(0, 0), 1)};
  EXPECT_NEAR(dual_objective(ball, {v2(2.4, 3.2)}), 4.5, 1e-12);
}

TEST(ExtendedDualObjective, Examples) {
  Problem p;
  p.d = v2(0, 0);
  p.sets = {make_ball(v2(0, 0), 1)};
  const Halfspace h{v2(1, 0), 1};
  EXPECT_NEAR(extended_dual_objective(p, {v2(0, 0)}, {v2(2, 0)}, {h}), 4.0, 1e-15);
  EXPECT_EQ(extended_dual_objective(p, {v2(0, 0)}, {v2(0, 2)}, {h}), kInfinity);
  const Problem q = two_halfspaces();
  const Blocks y{v2(0.5, 0), v2(0, 0.25)};
  EXPECT_EQ(extended_dual_objective(q, y, {v2(0, 0)}, {h}), dual_objective(q, y));
  EXPECT_EQ(extended_dual_objective(q, y, {v2(0, 0)}, {std::nullopt}), dual_objective(q, y));
  EXPECT_EQ(extended_dual_objective(q, y, {v2(1, 0)}, {std::nullopt}), kInfinity);
}

TEST(VFunction, Examples) {
  const Problem p = two_halfspaces();
  const Vec xbar = v2(0, 0);
  EXPECT_NEAR(v_function(p, {v2(1, 0), v2(0, 1)}, xbar), 0.0, 1e-15);
  EXPECT_NEAR(v_function(p, zero_blocks(p), xbar), 0.5 * (p.d - xbar).squaredNorm(), 1e-15);
}

TEST(VFunction, IdentityAndLowerBound) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = polyhedral_instance(seed, 3, 4);
    SolveOptions o = fixed_sweeps(50);
    o.record_blocks = true;
    const SolveResult r = dykstra_solve(inst.problem, std::nullopt, o);
    const Vec& xbar = inst.solution;
    for (const SweepRecord& s : r.trace.sweeps) {
      const double v = v_function(inst.problem, s.blocks, xbar);
      const double h = dual_objective(inst.problem, s.blocks);
      EXPECT_NEAR(v, h - inst.problem.d.dot(xbar) + 0.5 * xbar.squaredNorm(), 1e-10);
      EXPECT_GE(v, 0.5 * (inst.problem.d - sum_blocks(s.blocks, 3) - xbar).squaredNorm() - 1e-12);
    }
  }
}

TEST(DykstraSweep, HandTrace) {
  const Problem p = two_halfspaces();
  Blocks y = zero_blocks(p);
  const DykstraSweepResult s1 = dykstra_sweep(p, y, p.d);
  EXPECT_EQ(y[0], v2(1, 0));
  EXPECT_EQ(y[1], v2(0, 1));
  EXPECT_EQ(s1.x, v2(0, 0));
  const DykstraSweepResult s2 = dykstra_sweep(p, y, s1.x);
  EXPECT_EQ(y[0], v2(1, 0));
  EXPECT_EQ(y[1], v2(0, 1));
  EXPECT_EQ(s2.x, v2(0, 0));
}

TEST(DykstraSweep, SingleSetProjectsImmediately) {
  Problem p;
  p.d = v2(3, 4);
  p.sets = {make_ball(v2(0, 0), 1)};
  Blocks y = zero_blocks(p);
  EXPECT_TRUE(dykstra_sweep(p, y, p.d).x.isApprox(v2(0.6, 0.8)));
}

TEST(DykstraSolve, TwoHalfspacesFiniteConvergence) {
  const SolveResult r = dykstra_solve(two_halfspaces());
  EXPECT_EQ(r.status, SolveStatus::Converged);
  EXPECT_LE(r.state.sweep, 2);
  EXPECT_LE(r.state.x.norm(), 1e-12);
}

TEST(DykstraSolve, WarmstartAtOptimumIsFixed) {
  const Problem p = two_halfspaces();
  const SolveResult r = dykstra_solve(p, Blocks{v2(1, 0), v2(0, 1)});
  ASSERT_FALSE(r.trace.sweeps.empty());
  for (double c : r.trace.sweeps.front().block_changes) EXPECT_EQ(c, 0.0);
  EXPECT_EQ(r.state.sweep, 1);
}

TEST(DykstraSolve, MaxSweepsKeepsState) {
  const Problem p = narrow_wedge(0.01);
  SolveOptions o;
  o.rule.max_sweeps = 7;
  const SolveResult r = dykstra_solve(p, std::nullopt, o);
  EXPECT_EQ(r.status, SolveStatus::MaxSweepsExceeded);
  EXPECT_EQ(r.state.sweep, 7);
  EXPECT_LE((r.state.x - (p.d - sum_blocks(r.state.blocks, 2))).norm(), 1e-12);
  EXPECT_EQ(r.state.x, r.trace.sweeps.back().x);
}

TEST(DykstraSolve, RejectsMalformedWarmstart) {
  const Problem p = two_halfspaces();
  EXPECT_THROW(dykstra_solve(p, Blocks{v2(0, 0)}), std::invalid_argument);
  EXPECT_THROW(dykstra_solve(p, Blocks{v2(0, 0), Vec::Zero(3)}), std::invalid_argument);
}

class DykstraProperties : public ::testing::TestWithParam<int> {};

TEST_P(DykstraProperties, MonotoneDescentWithDecreaseBound) {
  const Problem p = mixed_instance(500 + GetParam());
  SolveOptions o = fixed_sweeps(300);
  const SolveResult r = dykstra_solve(p, std::nullopt, o);
  double prev = r.trace.initial_h;
  for (const SweepRecord& s : r.trace.sweeps) {
    double sq = 0.0;
    for (double c : s.block_changes) sq += c * c;
    EXPECT_LE(s.h, prev + 1e-10);
    EXPECT_GE(prev - s.h, 0.5 * sq - 1e-10);
    prev = s.h;
  }
}

TEST_P(DykstraProperties, RecoveryAtEveryInnerStep) {
  const Problem p = mixed_instance(600 + GetParam());
  for (int extended = 0; extended < 2; ++extended) {
    SolveOptions o = fixed_sweeps(40);
    double worst = 0.0;
    o.on_inner_step = [&](const InnerStep& s) {
      const Vec recon = p.d - sum_blocks(*s.blocks, p.dim()) - sum_blocks(*s.extra, p.dim());
      worst = std::max(worst, (recon - *s.x).norm());
    };
    if (extended) {
      extended_dykstra_solve(p, std::nullopt, o);
    } else {
      dykstra_solve(p, std::nullopt, o);
    }
    EXPECT_LE(worst, 1e-10);
  }
}

TEST_P(DykstraProperties, ExtendedDecreaseInequality) {
  const Problem p = mixed_instance(700 + GetParam());
  const SolveResult r = extended_dykstra_solve(p, std::nullopt, fixed_sweeps(200));
  double prev = r.trace.initial_h_k;
  for (const SweepRecord& s : r.trace.sweeps) {
    double sq = 0.0;
    for (double c : s.block_changes) sq += c * c;
    EXPECT_GE(prev, s.h_k + 0.5 * sq - 1e-10) << "sweep " << s.sweep;
    prev = s.h_k;
  }
}

TEST_P(DykstraProperties, SquareSumBudget) {
  // Summing the per-sweep decrease gives sum |dy|^2 <= 2 (h0 - min h).
  const auto inst = polyhedral_instance(800 + GetParam(), 3, 5);
  const double h_star = optimal_dual_value(inst.problem, inst.solution);
  for (int extended = 0; extended < 2; ++extended) {
    const SolveOptions o = fixed_sweeps(1000);
    const SolveResult r = extended ? extended_dykstra_solve(inst.problem, std::nullopt, o)
                                   : dykstra_solve(inst.problem, std::nullopt, o);
    double sum = 0.0;
    for (const SweepRecord& s : r.trace.sweeps) {
      for (double c : s.block_changes) sum += c * c;
    }
    EXPECT_LE(sum, 2.0 * (r.trace.initial_h - h_star) + 1e-6);
  }
}

TEST_P(DykstraProperties, IncrementsSquareSummableAndVanishing) {
  const auto inst = polyhedral_instance(900 + GetParam(), 3, 4);
  const double h_star = optimal_dual_value(inst.problem, inst.solution);
  SolveOptions o = fixed_sweeps(10000 / 4);
  InnerStepMonitor monitor(inst.problem.d, inst.solution);
  o.on_inner_step = [&](const InnerStep& s) { monitor.observe(s); };
  const SolveResult r = dykstra_solve(inst.problem, std::nullopt, o);
  EXPECT_LE(monitor.increment_square_sum(), 2.0 * (r.trace.initial_h - h_star) + 1e-6);
  EXPECT_LT(monitor.increments().back(), 1e-4);
}

TEST_P(DykstraProperties, WarmstartsReachTheSameLimit) {
  const auto inst = polyhedral_instance(1000 + GetParam(), 3, 4);
  Rng rng(1100 + GetParam());
  SolveOptions o;
  o.rule.primal_tolerance = 1e-10;
  o.rule.max_sweeps = 200000;
  for (int t = 0; t < 3; ++t) {
    const Blocks w = random_blocks_in_ball(rng, inst.problem.m(), 3, 10.0);
    const SolveResult plain = dykstra_solve(inst.problem, w, o);
    const SolveResult ext = extended_dykstra_solve(inst.problem, w, o);
    EXPECT_LE((plain.state.x - inst.solution).norm(), 1e-6);
    EXPECT_LE((ext.state.x - inst.solution).norm(), 1e-6);
  }
}

TEST_P(DykstraProperties, CapacityZeroReproducesPlainDykstra) {
  const Problem p = mixed_instance(1200 + GetParam());
  SolveOptions o = fixed_sweeps(100);
  const SolveResult plain = dykstra_solve(p, std::nullopt, o);
  o.buffer_capacity = 0;
  const SolveResult ext = extended_dykstra_solve(p, std::nullopt, o);
  ASSERT_EQ(plain.trace.sweeps.size(), ext.trace.sweeps.size());
  for (std::size_t k = 0; k < plain.trace.sweeps.size(); ++k) {
    EXPECT_LE((plain.trace.sweeps[k].x - ext.trace.sweeps[k].x).norm(), 1e-12);
  }
}

TEST_P(DykstraProperties, ShqpScheduleRefinementsNeverIncreaseH) {
  const auto inst = polyhedral_instance(1300 + GetParam(), 3, 5);
  SolveOptions o;
  o.shqp = ShqpSchedule::EverySweep;
  o.rule.max_sweeps = 20000;
  const SolveResult r = dykstra_solve(inst.problem, std::nullopt, o);
  for (const RefineRecord& rec : r.trace.refines) EXPECT_LE(rec.h_after, rec.h_before + 1e-12);
  EXPECT_LE((r.state.x - inst.solution).norm(), 1e-6);
}

INSTANTIATE_TEST_SUITE_P(Seeds, DykstraProperties, ::testing::Range(0, 10));

TEST(ExtendedDykstra, NarrowWedgeNeedsFewSweeps) {
  const Problem p = narrow_wedge(0.01);
  const SolveOptions o = fixed_sweeps(300000);
  auto sweeps_to = [](const SolveResult& r) {
    for (const SweepRecord& s : r.trace.sweeps) {
      if (s.x.norm() <= 1e-8) return s.sweep;
    }
    return -1L;
  };
  const long ext = sweeps_to(extended_dykstra_solve(p, std::nullopt, o));
  const long plain = sweeps_to(dykstra_solve(p, std::nullopt, o));
  ASSERT_GT(ext, 0);
  ASSERT_GT(plain, 0);
  EXPECT_LE(ext, 5);
  EXPECT_GT(plain, 10 * ext);
}

TEST(ExtendedDykstra, FullyBufferedStepIsTheExactProjection) {
  // Once every constraint of a polyhedral problem has entered the buffer,
  // the extra step returns P_C of its input.
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = polyhedral_instance(1400 + seed, 3, 4);
    std::vector<Halfspace> hs;
    for (const ConvexSet& s : inst.problem.sets) hs.push_back(*s.as<Halfspace>());
    std::vector<bool> cut(hs.size(), false);
    bool all_cut = false;
    SolveOptions o = fixed_sweeps(30);
    o.on_inner_step = [&](const InnerStep& s) {
      if (s.position < hs.size()) {
        if (!s.y->isZero(0.0)) cut[s.position] = true;
        return;
      }
      if (all_cut) {
        const Vec z = *s.x + *s.y;
        EXPECT_LE((*s.x - testing::brute_force_projection(hs, z)).norm(), 1e-10) << "seed " << seed;
        ++checked;
      }
      all_cut = std::all_of(cut.begin(), cut.end(), [](bool b) { return b; });
    };
    extended_dykstra_solve(inst.problem, std::nullopt, o);
  }
  EXPECT_GT(checked, 0);
}

TEST(ExtendedDykstra, InsertionPoints) {
  const Problem p = mixed_instance(42);
  SolveOptions o;
  o.rule.primal_tolerance = 1e-10;
  const Vec reference = dykstra_solve(p, std::nullopt, o).state.x;
  for (const std::vector<std::size_t>& points :
       {std::vector<std::size_t>{0}, std::vector<std::size_t>{1, p.m()}, std::vector<std::size_t>{0, 1, 2}}) {
    o.insertion_points = points;
    const SolveResult r = extended_dykstra_solve(p, std::nullopt, o);
    EXPECT_EQ(r.state.extra.size(), points.size());
    EXPECT_LE((r.state.x - reference).norm(), 1e-6);
  }
  o.insertion_points = {p.m() + 1};
  EXPECT_THROW(extended_dykstra_solve(p, std::nullopt, o), std::invalid_argument);
  o.insertion_points = {1, 1};
  EXPECT_THROW(extended_dykstra_solve(p, std::nullopt, o), std::invalid_argument);
}

TEST(ExtendedDykstra, EmittedHalfspacesContainTheIntersection) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Problem p = mixed_instance(1500 + seed);
    Rng rng(seed);
    std::vector<Vec> feasible;
    while (feasible.size() < 200) {
      const Vec q = random_vec(rng, p.dim(), -3, 3);
      if (primal_residual(p, q) == 0.0) feasible.push_back(q);
    }
    Blocks y = zero_blocks(p);
    Vec x = p.d;
    for (int k = 0; k < 20; ++k) {
      const DykstraSweepResult s = dykstra_sweep(p, y, x);
      x = s.x;
      for (const auto& h : s.halfspaces) {
        if (!h) continue;
        for (const Vec& q : feasible) EXPECT_LE(h->normal.dot(q), h->offset + 1e-10);
      }
    }
  }
}

TEST(HalfspaceBuffer, CapacityAndPruningOrder) {
  HalfspaceBuffer buf(2);
  const Halfspace a{v2(1, 0), 1}, b{v2(0, 1), 1}, c{v2(-1, 0), 1};
  buf.insert(a);
  buf.insert(b);
  buf.mark_active({true, false});
  buf.insert(c);  // b is inactive and goes first
  auto hs = buf.halfspaces();
  ASSERT_EQ(hs.size(), 2u);
  EXPECT_TRUE(near_duplicate(hs[0], a));
  EXPECT_TRUE(near_duplicate(hs[1], c));
  buf.mark_active({true, true});
  buf.insert(b);  // no inactive entry: the oldest (a) goes
  hs = buf.halfspaces();
  EXPECT_TRUE(near_duplicate(hs[0], c));
  EXPECT_TRUE(near_duplicate(hs[1], b));
}

TEST(HalfspaceBuffer, DuplicatesRefreshAge) {
  HalfspaceBuffer buf(2);
  const Halfspace a{v2(1, 0), 1}, b{v2(0, 1), 1}, c{v2(-1, 0), 1};
  buf.insert(a);
  buf.insert(b);
  buf.insert(a);  // refresh, no growth
  EXPECT_EQ(buf.size(), 2u);
  buf.insert(c);  // b is now the oldest
  const auto hs = buf.halfspaces();
  EXPECT_TRUE(near_duplicate(hs[0], a));
  EXPECT_TRUE(near_duplicate(hs[1], c));
}

TEST(HalfspaceBuffer, ZeroCapacityStoresNothing) {
  HalfspaceBuffer buf(0);
  buf.insert(Halfspace{v2(1, 0), 1});
  EXPECT_TRUE(buf.empty());
}

TEST(CutSet, WholeSpaceStepKeepsThePoint) {
  CutSet cs(4);
  Vec y = v2(0, 0);
  const Vec x = v2(3, -2);
  EXPECT_EQ(cs.step(x, y), x);
  EXPECT_TRUE(y.isZero(0.0));
  EXPECT_FALSE(cs.cut());
}

TEST(CutSet, ProjectsOntoBufferedHalfspaces) {
  CutSet cs(4);
  cs.ingest(Halfspace{v2(1, 0), 0});
  cs.ingest(Halfspace{v2(0, 1), 0});
  Vec y = v2(0, 0);
  const Vec x = cs.step(v2(1, 2), y);
  EXPECT_LE(x.norm(), 1e-14);
  EXPECT_TRUE(y.isApprox(v2(1, 2)));
  ASSERT_TRUE(cs.cut());
  EXPECT_TRUE(cs.cut()->normal.isApprox(v2(1, 2).normalized()));
}

TEST(ShqpRefine, Examples) {
  const Problem p = two_halfspaces();
  Blocks y = zero_blocks(p);
  const DykstraSweepResult s = dykstra_sweep(p, y, p.d);

  Blocks unchanged = y;
  shqp_refine(p, unchanged, {}, {});
  EXPECT_EQ(unchanged, y);

  Blocks single = y;
  shqp_refine(p, single, {1}, {*s.halfspaces[1]});
  EXPECT_LE((single[1] - y[1]).norm(), 1e-12);

  Blocks both = zero_blocks(p);
  shqp_refine(p, both, {0, 1}, {*s.halfspaces[0], *s.halfspaces[1]});
  EXPECT_LE((both[0] - v2(1, 0)).norm(), 1e-12);
  EXPECT_LE((both[1] - v2(0, 1)).norm(), 1e-12);
  EXPECT_NEAR(dual_objective(p, both), 0.0, 1e-12);
}

TEST(ShqpRefine, SingleIndexReproducesLatestResidual) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Problem p = mixed_instance(1600 + seed);
    Blocks y = zero_blocks(p);
    Vec x = p.d;
    for (int k = 0; k < 3; ++k) x = dykstra_sweep(p, y, x).x;
    // The last set's halfspace was produced from the current blocks.
    const std::size_t last = p.m() - 1;
    Blocks before = y;
    const ProjectionResult r = project(p.sets[last], x + y[last]);
    if (!r.halfspace) continue;
    Blocks refined = y;
    shqp_refine(p, refined, {last}, {*r.halfspace});
    EXPECT_LE((refined[last] - before[last]).norm(), 1e-12);
  }
}

TEST(ShqpRefine, RejectsBadIndices) {
  const Problem p = two_halfspaces();
  Blocks y = zero_blocks(p);
  const Halfspace h{v2(1, 0), 0};
  EXPECT_THROW(shqp_refine(p, y, {2}, {h}), std::invalid_argument);
  EXPECT_THROW(shqp_refine(p, y, {0, 0}, {h, h}), std::invalid_argument);
  EXPECT_THROW(shqp_refine(p, y, {0}, {}), std::invalid_argument);
}

TEST(TangentDisks, GrowthFlagRaisedEarly) {
  SolveOptions o;
  o.rule.max_sweeps = 10000;
  const SolveResult r = dykstra_solve(testing::tangent_disks(), std::nullopt, o);
  EXPECT_TRUE(r.trace.growth_flag);
  EXPECT_LE(r.trace.growth_flag_sweep, 10000);
  EXPECT_LT(r.state.x.norm(), 0.05);
}

}  // namespace
}  // namespace bap
