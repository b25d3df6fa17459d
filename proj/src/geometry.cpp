#include "bap/geometry.hpp"

#include "bap/polytope_qp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bap {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool all_finite(const Vec& v) { return v.allFinite(); }
bool all_finite(const Mat& m) { return m.allFinite(); }

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

void require_dim(const ConvexSet& set, const Vec& v, const char* op) {
  if (v.size() != set.dim()) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch (set " + std::to_string(set.dim()) +
                                ", vector " + std::to_string(v.size()) + ")");
  }
}

// Normalizes in place, leaving vectors whose norm is already 1 to rounding
// untouched.
void normalize(Vec& a, double& b) {
  const double norm = a.norm();
  require(std::isfinite(norm) && norm > 0.0, "normal vector must be nonzero and finite");
  if (std::abs(norm - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) return;
  a /= norm;
  b /= norm;
}

double direction_slack(const Vec& y) { return kDirectionTolerance * std::max(1.0, y.norm()); }

ProjectionResult finish(const Vec& z, Vec x) {
  ProjectionResult r;
  r.y = z - x;
  r.halfspace = supporting_halfspace(z, x);
  r.x = std::move(x);
  return r;
}

}  // namespace

ConvexSet::ConvexSet(Halfspace h) {
  require(all_finite(h.normal) && std::isfinite(h.offset), "halfspace: non-finite data");
  normalize(h.normal, h.offset);
  dim_ = h.normal.size();
  shape_ = std::move(h);
}

ConvexSet::ConvexSet(Hyperplane h) {
  require(all_finite(h.normal) && std::isfinite(h.offset), "hyperplane: non-finite data");
  normalize(h.normal, h.offset);
  dim_ = h.normal.size();
  shape_ = std::move(h);
}

ConvexSet::ConvexSet(Box b) {
  require(b.lower.size() == b.upper.size(), "box: bound dimensions differ");
  require(all_finite(b.lower) && all_finite(b.upper), "box: non-finite bounds");
  require((b.lower.array() <= b.upper.array()).all(), "box: lower bound exceeds upper bound");
  dim_ = b.lower.size();
  shape_ = std::move(b);
}

ConvexSet::ConvexSet(Ball b) {
  require(all_finite(b.center) && std::isfinite(b.radius), "ball: non-finite data");
  require(b.radius >= 0.0, "ball: negative radius");
  dim_ = b.center.size();
  shape_ = std::move(b);
}

ConvexSet::ConvexSet(AffineSubspace a) {
  require(all_finite(a.base) && all_finite(a.basis), "affine subspace: non-finite data");
  require(a.basis.rows() == a.base.size() || a.basis.cols() == 0, "affine subspace: basis dimension mismatch");
  if (a.basis.cols() == 0) a.basis.resize(a.base.size(), 0);
  const Mat gram = a.basis.transpose() * a.basis;
  require((gram - Mat::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() <= 1e-10 || gram.size() == 0,
          "affine subspace: basis is not orthonormal (use make_affine_subspace)");
  dim_ = a.base.size();
  shape_ = std::move(a);
}

ConvexSet::ConvexSet(Polyhedron p) {
  require(!p.faces.empty(), "polyhedron: needs at least one halfspace");
  dim_ = p.faces.front().normal.size();
  for (Halfspace& h : p.faces) {
    require(h.normal.size() == dim_, "polyhedron: inconsistent face dimensions");
    require(all_finite(h.normal) && std::isfinite(h.offset), "polyhedron: non-finite data");
    normalize(h.normal, h.offset);
  }
  shape_ = std::move(p);
}

ConvexSet::ConvexSet(WholeSpace w) {
  require(w.dimension > 0, "whole space: dimension must be positive");
  dim_ = w.dimension;
  shape_ = w;
}

ConvexSet::ConvexSet(ScaledProduct p) {
  require(!p.factors.empty() && p.factors.size() == p.scales.size(), "scaled product: factor/scale count");
  const Eigen::Index factor_dim = p.factors.front().dim();
  for (std::size_t i = 0; i < p.factors.size(); ++i) {
    require(p.factors[i].dim() == factor_dim, "scaled product: factors must share a dimension");
    require(std::isfinite(p.scales[i]) && p.scales[i] > 0.0, "scaled product: scales must be positive");
  }
  dim_ = factor_dim * static_cast<Eigen::Index>(p.factors.size());
  shape_ = std::move(p);
}

bool operator==(const ConvexSet& a, const ConvexSet& b) {
  if (a.shape_.index() != b.shape_.index() || a.dim_ != b.dim_) return false;
  return std::visit(
      Overloaded{
          [&](const Halfspace& h) {
            const auto& o = std::get<Halfspace>(b.shape_);
            return h.normal == o.normal && h.offset == o.offset;
          },
          [&](const Hyperplane& h) {
            const auto& o = std::get<Hyperplane>(b.shape_);
            return h.normal == o.normal && h.offset == o.offset;
          },
          [&](const Box& x) {
            const auto& o = std::get<Box>(b.shape_);
            return x.lower == o.lower && x.upper == o.upper;
          },
          [&](const Ball& x) {
            const auto& o = std::get<Ball>(b.shape_);
            return x.center == o.center && x.radius == o.radius;
          },
          [&](const AffineSubspace& x) {
            const auto& o = std::get<AffineSubspace>(b.shape_);
            return x.base == o.base && x.basis.cols() == o.basis.cols() && x.basis == o.basis;
          },
          [&](const Polyhedron& x) {
            const auto& o = std::get<Polyhedron>(b.shape_);
            if (x.faces.size() != o.faces.size()) return false;
            for (std::size_t i = 0; i < x.faces.size(); ++i) {
              if (x.faces[i].normal != o.faces[i].normal || x.faces[i].offset != o.faces[i].offset) return false;
            }
            return true;
          },
          [&](const WholeSpace&) { return true; },
          [&](const ScaledProduct& x) {
            const auto& o = std::get<ScaledProduct>(b.shape_);
            return x.scales == o.scales && x.factors == o.factors;
          },
      },
      a.shape_);
}

Halfspace normalized_halfspace(const Vec& normal, double offset) {
  Halfspace h{normal, offset};
  require(all_finite(h.normal) && std::isfinite(h.offset), "halfspace: non-finite data");
  normalize(h.normal, h.offset);
  return h;
}

ConvexSet make_halfspace(const Vec& normal, double offset) { return ConvexSet(Halfspace{normal, offset}); }
ConvexSet make_hyperplane(const Vec& normal, double offset) { return ConvexSet(Hyperplane{normal, offset}); }
ConvexSet make_box(const Vec& lower, const Vec& upper) { return ConvexSet(Box{lower, upper}); }
ConvexSet make_ball(const Vec& center, double radius) { return ConvexSet(Ball{center, radius}); }
ConvexSet make_polyhedron(const std::vector<Halfspace>& faces) { return ConvexSet(Polyhedron{faces}); }
ConvexSet make_whole_space(Eigen::Index dimension) { return ConvexSet(WholeSpace{dimension}); }

ConvexSet make_scaled_product(std::vector<ConvexSet> factors, std::vector<double> scales) {
  return ConvexSet(ScaledProduct{std::move(factors), std::move(scales)});
}

ConvexSet make_affine_subspace(const Vec& base, const Mat& directions) {
  require(all_finite(base) && all_finite(directions), "affine subspace: non-finite data");
  if (directions.cols() == 0) return ConvexSet(AffineSubspace{base, Mat(base.size(), 0)});
  require(directions.rows() == base.size(), "affine subspace: direction dimension mismatch");

  const Mat gram = directions.transpose() * directions;
  if ((gram - Mat::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() <= 1e-14) {
    return ConvexSet(AffineSubspace{base, directions});
  }
  Eigen::ColPivHouseholderQR<Mat> qr(directions);
  qr.setThreshold(1e-12);
  const Eigen::Index rank = qr.rank();
  require(rank > 0 || directions.isZero(), "affine subspace: rank detection failed");
  const Mat q = qr.householderQ() * Mat::Identity(base.size(), rank);
  return ConvexSet(AffineSubspace{base, q});
}

bool is_zero_residual(const Vec& y, const Vec& z) { return y.norm() <= kZeroResidual * std::max(1.0, z.norm()); }

std::optional<Halfspace> supporting_halfspace(const Vec& z, const Vec& x) {
  Vec y = z - x;
  const double norm = y.norm();
  if (norm <= kZeroResidual * std::max(1.0, z.norm())) return std::nullopt;
  y /= norm;
  const double offset = y.dot(x);
  return Halfspace{std::move(y), offset};
}

bool near_duplicate(const Halfspace& a, const Halfspace& b) {
  const double scale = std::max({1.0, std::abs(a.offset), std::abs(b.offset)});
  return (a.normal - b.normal).norm() <= 1e-12 && std::abs(a.offset - b.offset) <= 1e-12 * scale;
}

ProjectionResult project(const ConvexSet& set, const Vec& z) {
  require_dim(set, z, "project");
  return std::visit(
      Overloaded{
          [&](const Halfspace& h) {
            const double excess = h.normal.dot(z) - h.offset;
            if (excess <= 0.0) return ProjectionResult{z, Vec::Zero(z.size()), std::nullopt};
            return finish(z, z - excess * h.normal);
          },
          [&](const Hyperplane& h) {
            const double excess = h.normal.dot(z) - h.offset;
            if (excess == 0.0) return ProjectionResult{z, Vec::Zero(z.size()), std::nullopt};
            return finish(z, z - excess * h.normal);
          },
          [&](const Box& b) {
            if ((z.array() >= b.lower.array()).all() && (z.array() <= b.upper.array()).all()) {
              return ProjectionResult{z, Vec::Zero(z.size()), std::nullopt};
            }
            return finish(z, z.cwiseMax(b.lower).cwiseMin(b.upper));
          },
          [&](const Ball& b) {
            const Vec offset = z - b.center;
            const double norm = offset.norm();
            if (norm <= b.radius) return ProjectionResult{z, Vec::Zero(z.size()), std::nullopt};
            return finish(z, b.center + (b.radius / norm) * offset);
          },
          [&](const AffineSubspace& a) {
            const Vec rel = z - a.base;
            Vec x = a.base + a.basis * (a.basis.transpose() * rel);
            return finish(z, std::move(x));
          },
          [&](const Polyhedron& p) {
            const bool inside =
                std::all_of(p.faces.begin(), p.faces.end(), [&](const Halfspace& h) { return h.contains(z); });
            if (inside) return ProjectionResult{z, Vec::Zero(z.size()), std::nullopt};
            return finish(z, project_polyhedron(p.faces, z).x);
          },
          [&](const WholeSpace&) { return ProjectionResult{z, Vec::Zero(z.size()), std::nullopt}; },
          [&](const ScaledProduct& p) {
            const Eigen::Index n = p.factors.front().dim();
            Vec x(z.size());
            for (std::size_t i = 0; i < p.factors.size(); ++i) {
              const double s = p.scales[i];
              const auto block = static_cast<Eigen::Index>(i) * n;
              x.segment(block, n) = s * project(p.factors[i], z.segment(block, n) / s).x;
            }
            return finish(z, std::move(x));
          },
      },
      set.shape());
}

double support(const ConvexSet& set, const Vec& y) {
  require_dim(set, y, "support");
  if (y.isZero(0.0)) return 0.0;
  return std::visit(
      Overloaded{
          [&](const Halfspace& h) {
            const double t = y.dot(h.normal);
            const double slack = direction_slack(y);
            if ((y - t * h.normal).norm() > slack || t < -slack) return kInfinity;
            return std::max(t, 0.0) * h.offset;
          },
          [&](const Hyperplane& h) {
            const double t = y.dot(h.normal);
            if ((y - t * h.normal).norm() > direction_slack(y)) return kInfinity;
            return t * h.offset;
          },
          [&](const Box& b) {
            double value = 0.0;
            for (Eigen::Index j = 0; j < y.size(); ++j) value += y[j] > 0.0 ? y[j] * b.upper[j] : y[j] * b.lower[j];
            return value;
          },
          [&](const Ball& b) { return y.dot(b.center) + b.radius * y.norm(); },
          [&](const AffineSubspace& a) {
            const Vec along = a.basis * (a.basis.transpose() * y);
            if (along.norm() > direction_slack(y)) return kInfinity;
            return (y - along).dot(a.base);
          },
          [&](const Polyhedron& p) { return polyhedron_support(p.faces, y); },
          [&](const WholeSpace&) { return y.norm() <= kDirectionTolerance ? 0.0 : kInfinity; },
          [&](const ScaledProduct& p) {
            const Eigen::Index n = p.factors.front().dim();
            double value = 0.0;
            for (std::size_t i = 0; i < p.factors.size(); ++i) {
              value += p.scales[i] * support(p.factors[i], y.segment(static_cast<Eigen::Index>(i) * n, n));
            }
            return value;
          },
      },
      set.shape());
}

double distance(const ConvexSet& set, const Vec& z) { return project(set, z).y.norm(); }

}  // namespace bap
