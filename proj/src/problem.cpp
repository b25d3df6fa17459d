#include "bap/problem.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace bap {

bool operator==(const Problem& a, const Problem& b) {
  return a.d.size() == b.d.size() && a.d == b.d && a.sets == b.sets && a.weights == b.weights;
}

void validate(const Problem& problem) {
  if (problem.d.size() == 0) throw std::invalid_argument("problem: empty point");
  if (!problem.d.allFinite()) throw std::invalid_argument("problem: point has non-finite entries");
  if (problem.sets.empty()) throw std::invalid_argument("problem: no sets");
  for (std::size_t i = 0; i < problem.sets.size(); ++i) {
    if (problem.sets[i].dim() != problem.dim()) {
      throw std::invalid_argument("problem: set " + std::to_string(i) + " has dimension " +
                                  std::to_string(problem.sets[i].dim()) + ", expected " +
                                  std::to_string(problem.dim()));
    }
  }
  if (problem.weights) {
    const auto& w = *problem.weights;
    if (w.size() != problem.m()) throw std::invalid_argument("problem: weight count differs from set count");
    double total = 0.0;
    for (double x : w) {
      if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("problem: weights must be positive");
      total += x;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("problem: weights must sum to one");
  }
}

std::vector<double> weights_or_uniform(const Problem& problem) {
  if (problem.weights) return *problem.weights;
  return std::vector<double>(problem.m(), 1.0 / static_cast<double>(problem.m()));
}

Blocks zero_blocks(const Problem& problem) { return Blocks(problem.m(), Vec::Zero(problem.dim())); }

void check_blocks(const Problem& problem, const Blocks& blocks, const char* what) {
  if (blocks.size() != problem.m()) {
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(problem.m()) + " blocks, got " +
                                std::to_string(blocks.size()));
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].size() != problem.dim()) {
      throw std::invalid_argument(std::string(what) + ": block " + std::to_string(i) + " has dimension " +
                                  std::to_string(blocks[i].size()) + ", expected " + std::to_string(problem.dim()));
    }
    if (!blocks[i].allFinite()) {
      throw std::invalid_argument(std::string(what) + ": block " + std::to_string(i) + " is not finite");
    }
  }
}

Vec sum_blocks(const Blocks& blocks, Eigen::Index dim) {
  Vec s = Vec::Zero(dim);
  for (const Vec& b : blocks) s += b;
  return s;
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged:
      return "converged";
    case SolveStatus::MaxSweepsExceeded:
      return "max_sweeps_exceeded";
  }
  return "unknown";
}

double primal_residual(const Problem& problem, const Vec& x) {
  double worst = 0.0;
  for (const ConvexSet& c : problem.sets) worst = std::max(worst, distance(c, x));
  return worst;
}

}  // namespace bap
