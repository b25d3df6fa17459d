#pragma once

#include "bap/apg.hpp"
#include "bap/problem_io.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace bap {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitNotConverged = 2;
inline constexpr int kExitInputError = 3;
inline constexpr int kExitSolverError = 4;

struct RunSummary {
  SolveResult result;
  std::optional<ApgOutput> apg;
  /// APG only: iteration-count estimate for options.epsilon.
  std::optional<long> threshold_index;
};

/// Runs the configured algorithm. Solver failures propagate as exceptions.
RunSummary execute(const ProblemFile& file);

/// One row per sweep: sweep,h,h_k,primal_residual,max_dual_norm,v_monitor,dy_1,...
std::string trace_csv(const SolveTrace& trace);

std::string report_json(const ProblemFile& file, const RunSummary& summary);

struct RunPaths {
  std::optional<std::string> trace_out;
  std::optional<std::string> report_out;
};

/// Executes, writes the requested outputs and maps the outcome to an exit code.
int run(const ProblemFile& file, const RunPaths& paths, std::ostream& out, std::ostream& err);

}  // namespace bap
