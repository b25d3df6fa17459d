#include "bap/geometry.hpp"

#include "instances.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

namespace bap {
namespace {

using testing::Rng;
using testing::random_unit;
using testing::random_vec;
using testing::uniform;

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

TEST(Project, HalfspaceClosedForm) {
  const ProjectionResult r = project(make_halfspace(v2(1, 0), 0), v2(2, 3));
  EXPECT_TRUE(r.x.isApprox(v2(0, 3)));
  EXPECT_TRUE(r.y.isApprox(v2(2, 0)));
  ASSERT_TRUE(r.halfspace.has_value());
}

TEST(Project, BallRadialScaling) {
  const ProjectionResult r = project(make_ball(v2(0, 0), 1), v2(3, 4));
  EXPECT_NEAR(r.x(0), 0.6, 1e-15);
  EXPECT_NEAR(r.x(1), 0.8, 1e-15);
}

TEST(Project, PointInsideIsFixed) {
  const Vec z = v2(0.25, 0.5);
  for (const ConvexSet& s : {make_halfspace(v2(1, 0), 1), make_ball(v2(0, 0), 1), make_box(v2(0, 0), v2(1, 1))}) {
    const ProjectionResult r = project(s, z);
    EXPECT_EQ(r.x, z);
    EXPECT_TRUE(r.y.isZero(0.0));
    EXPECT_FALSE(r.halfspace.has_value());
  }
}

TEST(Project, BoxClamp) {
  const ProjectionResult r = project(make_box(v2(0, 0), v2(1, 1)), v2(2, -1));
  EXPECT_EQ(r.x, v2(1, 0));
}

TEST(Project, HyperplaneAffineAndWholeSpace) {
  EXPECT_TRUE(project(make_hyperplane(v2(0, 2), 2), v2(5, -3)).x.isApprox(v2(5, 1)));
  Mat dirs(3, 1);
  dirs << 1, 1, 0;
  Vec base(3), z(3), expected(3);
  base << 0, 0, 1;
  z << 2, 0, 5;
  expected << 1, 1, 1;
  EXPECT_TRUE(project(make_affine_subspace(base, dirs), z).x.isApprox(expected));
  EXPECT_EQ(project(make_whole_space(3), z).x, z);
}

TEST(Project, DegenerateBallIsAPoint) {
  const ProjectionResult r = project(make_ball(v2(1, 2), 0), v2(5, 5));
  EXPECT_EQ(r.x, v2(1, 2));
}

TEST(Project, PolyhedronDispatchesToQp) {
  const ConvexSet p = make_polyhedron({Halfspace{v2(1, 0), 0}, Halfspace{v2(0, 1), 0}});
  EXPECT_LE((project(p, v2(1, 2)).x).norm(), 1e-14);
}

TEST(Project, RejectsDimensionMismatch) {
  EXPECT_THROW(project(make_ball(v2(0, 0), 1), Vec::Zero(3)), std::invalid_argument);
  EXPECT_THROW(support(make_ball(v2(0, 0), 1), Vec::Zero(3)), std::invalid_argument);
}

TEST(Construct, RejectsMalformedSets) {
  EXPECT_THROW(make_halfspace(v2(0, 0), 1), std::invalid_argument);
  EXPECT_THROW(make_box(v2(1, 0), v2(0, 1)), std::invalid_argument);
  EXPECT_THROW(make_ball(v2(0, 0), -1), std::invalid_argument);
  EXPECT_THROW(make_halfspace(v2(NAN, 1), 0), std::invalid_argument);
  EXPECT_THROW(make_whole_space(0), std::invalid_argument);
}

TEST(Construct, NormalsAreNormalized) {
  const ConvexSet h = make_halfspace(v2(3, 4), 10);
  EXPECT_NEAR(h.as<Halfspace>()->normal.norm(), 1.0, 1e-15);
  EXPECT_NEAR(h.as<Halfspace>()->offset, 2.0, 1e-15);
}

TEST(Support, Examples) {
  EXPECT_NEAR(support(make_ball(v2(0, 0), 1), v2(3, 4)), 5.0, 1e-14);
  EXPECT_NEAR(support(make_halfspace(v2(1, 0), 3), v2(2, 0)), 6.0, 1e-14);
  EXPECT_EQ(support(make_halfspace(v2(1, 0), 3), v2(0, 1)), kInfinity);
  EXPECT_NEAR(support(make_box(v2(0, 0), v2(1, 1)), v2(1, -2)), 1.0, 1e-15);
  EXPECT_EQ(support(make_ball(v2(5, 5), 2), v2(0, 0)), 0.0);
}

TEST(Support, UnboundedDirections) {
  EXPECT_EQ(support(make_hyperplane(v2(1, 0), 1), v2(0, 1)), kInfinity);
  EXPECT_NEAR(support(make_hyperplane(v2(1, 0), 1), v2(-2, 0)), -2.0, 1e-15);
  EXPECT_EQ(support(make_whole_space(2), v2(0, 1)), kInfinity);
  const ConvexSet cone = make_polyhedron({Halfspace{v2(1, 0), 1}, Halfspace{v2(0, 1), 2}});
  EXPECT_NEAR(support(cone, v2(1, 1)), 3.0, 1e-9);
  EXPECT_EQ(support(cone, v2(-1, 1)), kInfinity);
}

TEST(SupportingHalfspace, Examples) {
  const auto h = supporting_halfspace(v2(2, 0), v2(1, 0));
  ASSERT_TRUE(h);
  EXPECT_TRUE(h->normal.isApprox(v2(1, 0)));
  EXPECT_NEAR(h->offset, 1.0, 1e-15);
  EXPECT_FALSE(supporting_halfspace(v2(1, 1), v2(1, 1)));

  const ConvexSet set = make_halfspace(v2(1, 0), 0);
  const ProjectionResult r = project(set, v2(2, 3));
  ASSERT_TRUE(r.halfspace);
  EXPECT_NEAR(support(ConvexSet(*r.halfspace), r.y), support(set, r.y), 1e-12);
}

TEST(NearDuplicate, ParallelOnly) {
  const Halfspace a{v2(1, 0), 1};
  EXPECT_TRUE(near_duplicate(a, Halfspace{v2(1, 0), 1 + 1e-14}));
  EXPECT_FALSE(near_duplicate(a, Halfspace{v2(-1, 0), -1}));
  EXPECT_FALSE(near_duplicate(a, Halfspace{v2(std::cos(1e-6), std::sin(1e-6)), 1}));
}

// Random set of every projectable kind, with a sampler of interior points.
struct SampledSet {
  ConvexSet set;
  std::function<Vec(Rng&)> sample;
};

std::vector<SampledSet> random_sets(Rng& rng, Eigen::Index n) {
  std::vector<SampledSet> out;
  const Vec a = random_unit(rng, n);
  const double b = uniform(rng, -1, 1);
  out.push_back({make_halfspace(a, b), [a, b, n](Rng& g) {
                   Vec p = random_vec(g, n, -3, 3);
                   const double excess = a.dot(p) - b;
                   if (excess > 0) p -= (excess + uniform(g, 0, 1)) * a;
                   return p;
                 }});
  out.push_back({make_hyperplane(a, b), [a, b, n](Rng& g) {
                   Vec p = random_vec(g, n, -3, 3);
                   return Vec(p - (a.dot(p) - b) * a);
                 }});
  const Vec c = random_vec(rng, n, -1, 1);
  const double r = uniform(rng, 0.2, 2);
  out.push_back({make_ball(c, r), [c, r, n](Rng& g) { return Vec(c + uniform(g, 0, r) * random_unit(g, n)); }});
  const Vec lo = random_vec(rng, n, -2, 0), hi = lo + random_vec(rng, n, 0.1, 2);
  out.push_back({make_box(lo, hi), [lo, hi, n](Rng& g) {
                   Vec p(n);
                   for (Eigen::Index i = 0; i < n; ++i) p(i) = uniform(g, lo(i), hi(i));
                   return p;
                 }});
  Mat dirs(n, 1);
  dirs.col(0) = random_unit(rng, n);
  const Vec base = random_vec(rng, n, -1, 1);
  const ConvexSet affine = make_affine_subspace(base, dirs);
  const Mat basis = affine.as<AffineSubspace>()->basis;
  out.push_back({affine, [base, basis](Rng& g) { return Vec(base + basis * random_vec(g, 1, -3, 3)); }});
  return out;
}

class GeometryProperties : public ::testing::TestWithParam<int> {};

TEST_P(GeometryProperties, ProjectionOptimality) {
  Rng rng(100 + GetParam());
  const Eigen::Index n = 2 + GetParam() % 4;
  for (const SampledSet& s : random_sets(rng, n)) {
    const Vec z = random_vec(rng, n, -5, 5);
    const ProjectionResult r = project(s.set, z);
    EXPECT_LE((r.x + r.y - z).norm(), 1e-15 * std::max(1.0, z.norm()));
    for (int t = 0; t < 1000; ++t) {
      const Vec p = s.sample(rng);
      EXPECT_GE((p - z).norm(), (r.x - z).norm() - 1e-12);
    }
  }
}

TEST_P(GeometryProperties, FirmNonexpansiveness) {
  Rng rng(200 + GetParam());
  const Eigen::Index n = 2 + GetParam() % 4;
  for (const SampledSet& s : random_sets(rng, n)) {
    for (int t = 0; t < 100; ++t) {
      const Vec z1 = random_vec(rng, n, -5, 5), z2 = random_vec(rng, n, -5, 5);
      const Vec dx = project(s.set, z1).x - project(s.set, z2).x;
      EXPECT_LE(dx.squaredNorm(), dx.dot(z1 - z2) + 1e-10);
    }
  }
}

TEST_P(GeometryProperties, SupportEqualityAndOuterApproximation) {
  Rng rng(300 + GetParam());
  const Eigen::Index n = 2 + GetParam() % 4;
  for (const SampledSet& s : random_sets(rng, n)) {
    const Vec z = random_vec(rng, n, -5, 5);
    const ProjectionResult r = project(s.set, z);
    if (!r.halfspace) continue;
    EXPECT_NEAR(r.halfspace->normal.dot(r.x), r.halfspace->offset, 1e-12);
    EXPECT_NEAR(r.y.normalized().dot(r.halfspace->normal), 1.0, 1e-12);
    EXPECT_NEAR(support(s.set, r.y), support(ConvexSet(*r.halfspace), r.y), 1e-10 * std::max(1.0, r.y.norm()));
    for (int t = 0; t < 1000; ++t) {
      const Vec p = s.sample(rng);
      EXPECT_LE(r.halfspace->normal.dot(p), r.halfspace->offset + 1e-10);
    }
  }
}

TEST_P(GeometryProperties, PositiveHomogeneity) {
  Rng rng(400 + GetParam());
  const Eigen::Index n = 2 + GetParam() % 4;
  for (const SampledSet& s : random_sets(rng, n)) {
    // Residual directions always have finite support.
    const Vec y = project(s.set, random_vec(rng, n, -5, 5)).y;
    const double base = support(s.set, y);
    ASSERT_TRUE(std::isfinite(base));
    for (double t : {0.0, 0.5, 3.0, 17.0}) {
      EXPECT_NEAR(support(s.set, t * y), t * base, 1e-10 * std::max(1.0, std::abs(t * base)));
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, GeometryProperties, ::testing::Range(0, 8));

}  // namespace
}  // namespace bap
