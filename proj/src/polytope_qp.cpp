#include "bap/polytope_qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bap {
namespace {

// Halfspaces after merging near-duplicates. `origin[r]` is the input index of
// representative r.
struct Reduced {
  Mat normals;  // one row per representative
  Vec offsets;
  std::vector<std::size_t> origin;
  std::vector<std::size_t> representative_of;  // input index -> representative row
};

Reduced reduce(std::span<const Halfspace> halfspaces, Eigen::Index dim) {
  Reduced r;
  r.representative_of.resize(halfspaces.size());
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < halfspaces.size(); ++j) {
    const Halfspace& h = halfspaces[j];
    if (h.normal.size() != dim) throw std::invalid_argument("project_polyhedron: dimension mismatch");
    std::size_t rep = kept.size();
    for (std::size_t u = 0; u < kept.size(); ++u) {
      if (near_duplicate(halfspaces[kept[u]], h)) {
        rep = u;
        break;
      }
    }
    if (rep == kept.size()) kept.push_back(j);
    r.representative_of[j] = rep;
  }
  r.normals.resize(static_cast<Eigen::Index>(kept.size()), dim);
  r.offsets.resize(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t u = 0; u < kept.size(); ++u) {
    r.normals.row(static_cast<Eigen::Index>(u)) = halfspaces[kept[u]].normal.transpose();
    r.offsets[static_cast<Eigen::Index>(u)] = halfspaces[kept[u]].offset;
  }
  r.origin = std::move(kept);
  return r;
}

// Least-squares fit of `target` by the active normals: r minimizing
// |N r - target|, returned with the residual target - N r.
struct ActiveFit {
  Vec r;
  Vec residual;
};

Mat active_matrix(const Reduced& red, const std::vector<Eigen::Index>& active, Eigen::Index dim) {
  Mat n(dim, static_cast<Eigen::Index>(active.size()));
  for (std::size_t i = 0; i < active.size(); ++i) n.col(static_cast<Eigen::Index>(i)) = red.normals.row(active[i]).transpose();
  return n;
}

ActiveFit fit(const Mat& n, const Vec& target) {
  ActiveFit out;
  if (n.cols() == 0) {
    out.r = Vec::Zero(0);
    out.residual = target;
    return out;
  }
  out.r = n.householderQr().solve(target);
  out.residual = target - n * out.r;
  return out;
}

// Projection of v onto {x : N^T x = b} for N of full column rank, written as
// a particular solution plus the component of v - x_p orthogonal to range(N).
// Large multipliers never enter the sum, which keeps thin wedges accurate.
Vec affine_projection(const Mat& n, const Vec& b, const Vec& v) {
  if (n.cols() == 0) return v;
  const Eigen::HouseholderQR<Mat> qr(n);
  const auto k = n.cols();
  const Mat q = qr.householderQ() * Mat::Identity(n.rows(), k);
  const auto r = qr.matrixQR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
  const Vec particular = q * r.transpose().solve(b);
  const Vec free = v - particular;
  return particular + (free - q * (q.transpose() * free));
}

}  // namespace

PolyhedralProjection project_polyhedron(std::span<const Halfspace> halfspaces, const Vec& z,
                                        const QpOptions& options) {
  if (halfspaces.empty()) throw std::invalid_argument("project_polyhedron: empty halfspace list");
  const Reduced red = reduce(halfspaces, z.size());
  const auto u = static_cast<Eigen::Index>(red.origin.size());
  const Eigen::Index dim = z.size();

  const double scale = std::max({1.0, z.cwiseAbs().maxCoeff(), red.offsets.cwiseAbs().maxCoeff()});
  const double tol = options.feasibility_tolerance * scale;
  const int max_iterations = options.max_iterations > 0 ? options.max_iterations : 50 * (static_cast<int>(u) + 1);

  // Dual active-set method: x always minimizes |x - z| over the active
  // equalities with nonnegative multipliers, x = z - sum mu_j a_j.
  Vec mu = Vec::Zero(u);
  std::vector<Eigen::Index> active;
  Vec x = z;

  if (!options.warm_active.empty()) {
    std::vector<Eigen::Index> warm;
    for (std::size_t j : options.warm_active) {
      if (j >= halfspaces.size()) continue;
      const auto rep = static_cast<Eigen::Index>(red.representative_of[j]);
      if (std::find(warm.begin(), warm.end(), rep) == warm.end()) warm.push_back(rep);
    }
    std::sort(warm.begin(), warm.end());
    if (!warm.empty() && static_cast<Eigen::Index>(warm.size()) <= dim) {
      const Mat n = active_matrix(red, warm, dim);
      Eigen::ColPivHouseholderQR<Mat> qr(n);
      qr.setThreshold(options.rank_tolerance);
      if (qr.rank() == n.cols()) {
        Vec b(n.cols());
        for (Eigen::Index i = 0; i < n.cols(); ++i) b[i] = red.offsets[warm[static_cast<std::size_t>(i)]];
        // Multipliers from the column-permuted factorization R^T R m = N^T z - b,
        // which avoids forming N^T N.
        const auto k = n.cols();
        const auto r = qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
        const Vec permuted_rhs = qr.colsPermutation().transpose() * (n.transpose() * z - b);
        const Vec m = qr.colsPermutation() * r.solve(r.transpose().solve(permuted_rhs));
        if (m.allFinite() && (m.array() > 0.0).all()) {
          active = warm;
          for (std::size_t i = 0; i < warm.size(); ++i) mu[warm[i]] = m[static_cast<Eigen::Index>(i)];
          x = affine_projection(n, b, z);
        }
      }
    }
  }

  // x = z - A^T mu with the active constraints tight; only the entering
  // constraint can carry a multiplier outside the active set.
  auto current_point = [&] {
    Vec v = z;
    for (Eigen::Index j = 0; j < u; ++j) {
      if (mu[j] > 0.0 && std::find(active.begin(), active.end(), j) == active.end()) {
        v -= mu[j] * red.normals.row(j).transpose();
      }
    }
    Vec b(static_cast<Eigen::Index>(active.size()));
    for (std::size_t i = 0; i < active.size(); ++i) b[static_cast<Eigen::Index>(i)] = red.offsets[active[i]];
    return affine_projection(active_matrix(red, active, dim), b, v);
  };

  int iterations = 0;
  while (true) {
    const Vec w = red.normals * x - red.offsets;
    Eigen::Index p = -1;
    double worst = tol;
    for (Eigen::Index j = 0; j < u; ++j) {
      if (mu[j] > 0.0 || std::find(active.begin(), active.end(), j) != active.end()) continue;
      if (w[j] > worst) {
        worst = w[j];
        p = j;
      }
    }
    if (p < 0) break;

    const Vec np = red.normals.row(p).transpose();
    while (true) {
      if (++iterations > max_iterations) {
        throw QpError(QpErrorKind::IterationLimit, "project_polyhedron: iteration limit reached");
      }
      const Mat n = active_matrix(red, active, dim);
      const ActiveFit f = fit(n, np);
      const double violation = np.dot(x) - red.offsets[p];
      const double curvature = f.residual.dot(np);
      const bool independent = f.residual.norm() > options.rank_tolerance * 1e2;

      // Largest step keeping the active multipliers nonnegative.
      double t_dual = std::numeric_limits<double>::infinity();
      std::size_t leave = active.size();
      for (std::size_t i = 0; i < active.size(); ++i) {
        const double ri = f.r[static_cast<Eigen::Index>(i)];
        if (ri > 0.0) {
          const double t = mu[active[i]] / ri;
          if (t < t_dual) {
            t_dual = t;
            leave = i;
          }
        }
      }
      const double t_primal = independent && curvature > 0.0 ? std::max(violation, 0.0) / curvature
                                                               : std::numeric_limits<double>::infinity();
      if (std::isinf(t_primal) && std::isinf(t_dual)) {
        throw QpError(QpErrorKind::Infeasible, "project_polyhedron: violated constraint cannot be satisfied; "
                                               "intersection appears empty");
      }
      const double t = std::min(t_primal, t_dual);
      for (std::size_t i = 0; i < active.size(); ++i) {
        mu[active[i]] = std::max(0.0, mu[active[i]] - t * f.r[static_cast<Eigen::Index>(i)]);
      }
      mu[p] += t;
      const bool added = t_primal <= t_dual;
      if (added) {
        active.push_back(p);
      } else {
        mu[active[leave]] = 0.0;
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(leave));
      }
      x = current_point();
      if (added) break;
    }
  }

  PolyhedralProjection out;
  out.x = std::move(x);
  out.multipliers = Vec::Zero(static_cast<Eigen::Index>(halfspaces.size()));
  for (Eigen::Index r = 0; r < u; ++r) {
    if (mu[r] > 0.0) {
      const std::size_t j = red.origin[static_cast<std::size_t>(r)];
      out.multipliers[static_cast<Eigen::Index>(j)] = mu[r];
    }
  }
  for (std::size_t j = 0; j < halfspaces.size(); ++j) {
    if (out.multipliers[static_cast<Eigen::Index>(j)] > 0.0) out.active_set.push_back(j);
  }
  out.iterations = iterations;
  return out;
}

std::vector<Vec> dual_decompose(std::span<const Halfspace> halfspaces, const Vec& z, const QpOptions& options) {
  const PolyhedralProjection p = project_polyhedron(halfspaces, z, options);
  std::vector<Vec> blocks;
  blocks.reserve(halfspaces.size());
  for (std::size_t j = 0; j < halfspaces.size(); ++j) {
    blocks.push_back(p.multipliers[static_cast<Eigen::Index>(j)] * halfspaces[j].normal);
  }
  return blocks;
}

double polyhedron_support(std::span<const Halfspace> halfspaces, const Vec& y) {
  if (y.isZero(0.0)) return 0.0;
  const double ynorm = y.norm();

  // y lies in cone{a_j} iff its projection onto the polar cone vanishes.
  std::vector<Halfspace> polar(halfspaces.begin(), halfspaces.end());
  for (Halfspace& h : polar) h.offset = 0.0;
  if (project_polyhedron(polar, y).x.norm() > kDirectionTolerance * std::max(1.0, ynorm)) return kInfinity;

  // Proximal point iteration on the linear objective; terminates finitely on
  // polyhedra.
  Vec x = project_polyhedron(halfspaces, Vec::Zero(y.size())).x;
  double offset_scale = 0.0;
  for (const Halfspace& h : halfspaces) offset_scale = std::max(offset_scale, std::abs(h.offset));
  const double step = 1e3 * (1.0 + x.norm() + offset_scale) / ynorm;
  std::vector<std::size_t> face;
  for (int it = 0; it < 200; ++it) {
    PolyhedralProjection next = project_polyhedron(halfspaces, x + step * y);
    const double moved = (next.x - x).norm();
    x = std::move(next.x);
    face = std::move(next.active_set);
    if (moved <= 1e-13 * (1.0 + x.norm())) break;
  }
  // y lies in the span of the face normals, so <y, x> only depends on the
  // face offsets; re-projecting from x drops the rounding of the large prox point.
  if (!face.empty() && static_cast<Eigen::Index>(face.size()) <= y.size()) {
    Mat n(y.size(), static_cast<Eigen::Index>(face.size()));
    Vec b(static_cast<Eigen::Index>(face.size()));
    for (std::size_t i = 0; i < face.size(); ++i) {
      n.col(static_cast<Eigen::Index>(i)) = halfspaces[face[i]].normal;
      b[static_cast<Eigen::Index>(i)] = halfspaces[face[i]].offset;
    }
    x = affine_projection(n, b, x);
  }
  return y.dot(x);
}

}  // namespace bap
