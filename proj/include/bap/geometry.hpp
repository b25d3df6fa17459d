#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

namespace bap {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Residuals with norm at or below this fraction of max(1, |z|) count as zero.
inline constexpr double kZeroResidual = 1e-12;

/// Relative tolerance used to decide whether a direction lies in the barrier
/// cone of a set (support finite) or not.
inline constexpr double kDirectionTolerance = 1e-9;

/// {x : <normal, x> <= offset}, normal of unit length.
struct Halfspace {
  Vec normal;
  double offset = 0.0;

  bool contains(const Vec& x, double tol = 0.0) const { return normal.dot(x) <= offset + tol; }
};

/// {x : <normal, x> = offset}, normal of unit length.
struct Hyperplane {
  Vec normal;
  double offset = 0.0;
};

struct Box {
  Vec lower;
  Vec upper;
};

struct Ball {
  Vec center;
  double radius = 0.0;
};

/// base + span(basis), columns of basis orthonormal (possibly zero columns).
struct AffineSubspace {
  Vec base;
  Mat basis;
};

struct Polyhedron {
  std::vector<Halfspace> faces;
};

struct WholeSpace {
  Eigen::Index dimension = 0;
};

class ConvexSet;

/// {(s_1 c_1, ..., s_m c_m) : c_i in C_i} in the stacked space, all factors of
/// the same dimension. Used for the scaled product-space lift.
struct ScaledProduct {
  std::vector<ConvexSet> factors;
  std::vector<double> scales;
};

/// Closed convex set description. Immutable after construction.
class ConvexSet {
 public:
  using Shape =
      std::variant<Halfspace, Hyperplane, Box, Ball, AffineSubspace, Polyhedron, WholeSpace, ScaledProduct>;

  ConvexSet(Halfspace h);
  ConvexSet(Hyperplane h);
  ConvexSet(Box b);
  ConvexSet(Ball b);
  ConvexSet(AffineSubspace a);
  ConvexSet(Polyhedron p);
  ConvexSet(WholeSpace w);
  ConvexSet(ScaledProduct p);

  const Shape& shape() const { return shape_; }
  Eigen::Index dim() const { return dim_; }

  template <typename T>
  const T* as() const {
    return std::get_if<T>(&shape_);
  }

  friend bool operator==(const ConvexSet& a, const ConvexSet& b);

 private:
  Shape shape_;
  Eigen::Index dim_ = 0;
};

// Validating constructors. Normals are normalized; inputs that already have
// unit norm (to rounding) are stored unchanged so serialization round-trips.
// All throw std::invalid_argument on malformed input.
ConvexSet make_halfspace(const Vec& normal, double offset);
ConvexSet make_hyperplane(const Vec& normal, double offset);
ConvexSet make_box(const Vec& lower, const Vec& upper);
ConvexSet make_ball(const Vec& center, double radius);
/// Directions are given as columns; an orthonormal basis of their span is stored.
ConvexSet make_affine_subspace(const Vec& base, const Mat& directions);
ConvexSet make_polyhedron(const std::vector<Halfspace>& faces);
ConvexSet make_whole_space(Eigen::Index dimension);
ConvexSet make_scaled_product(std::vector<ConvexSet> factors, std::vector<double> scales);

/// Builds a normalized halfspace; throws for a zero normal.
Halfspace normalized_halfspace(const Vec& normal, double offset);

struct ProjectionResult {
  Vec x;  ///< projection of z
  Vec y;  ///< residual z - x
  std::optional<Halfspace> halfspace;  ///< supporting halfspace at x, absent when y is zero
};

/// Euclidean projection. Polyhedra are dispatched to the active-set QP.
ProjectionResult project(const ConvexSet& set, const Vec& z);

/// sup_{x in set} <y, x>; +infinity outside the barrier cone.
double support(const ConvexSet& set, const Vec& y);

/// Halfspace through x with unit normal (z - x)/|z - x|; nullopt (the whole
/// space) when the residual is below the zero threshold.
std::optional<Halfspace> supporting_halfspace(const Vec& z, const Vec& x);

double distance(const ConvexSet& set, const Vec& z);

bool is_zero_residual(const Vec& y, const Vec& z);

/// Near-duplicate test used by the QP and the halfspace buffers: normals
/// within 1e-12 and offsets within 1e-12 relative.
bool near_duplicate(const Halfspace& a, const Halfspace& b);

}  // namespace bap
