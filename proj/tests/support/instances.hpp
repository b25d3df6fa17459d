#pragma once

#include "bap/problem.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace bap::testing {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi);
Vec random_vec(Rng& rng, Eigen::Index n, double lo, double hi);
Vec random_unit(Rng& rng, Eigen::Index n);
/// Blocks with norms drawn uniformly from [0, radius].
Blocks random_blocks_in_ball(Rng& rng, std::size_t m, Eigen::Index n, double radius);

/// k halfspaces whose intersection contains a ball around `interior`.
std::vector<Halfspace> random_feasible_halfspaces(Rng& rng, Eigen::Index n, std::size_t k, const Vec& interior);

/// Projection onto an intersection of halfspaces by enumerating candidate
/// active sets: the closest feasible projection onto the affine hull of any
/// subset of at most n constraints. Independent of the library's QP.
Vec brute_force_projection(std::span<const Halfspace> halfspaces, const Vec& z);

/// Problem with known solution P_C(d).
struct OracleInstance {
  Problem problem;
  Vec solution;
};

/// One halfspace set per constraint, solution from brute_force_projection.
OracleInstance polyhedral_instance(std::uint64_t seed, Eigen::Index n, std::size_t k);

/// Halfspaces, balls and boxes sharing an interior point (Slater holds).
Problem mixed_instance(std::uint64_t seed);

/// Sets as in mixed_instance plus hyperplanes and polyhedra.
Problem assorted_instance(std::uint64_t seed);

/// C1 = {x1 <= 0}, C2 = {x2 <= 0}, d = (1, 1).
Problem two_halfspaces();

/// Balls of radius 1 around (-1, 0) and (1, 0), d = (0, 1).
Problem tangent_disks();

/// Hyperplane {x2 = 0} and the halfspace bounded by the line through 0 at
/// angle `angle` to it, d = (1, 1). P_C(d) = 0.
Problem narrow_wedge(double angle);

}  // namespace bap::testing
