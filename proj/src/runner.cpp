#include "bap/runner.hpp"

#include "bap/diagnostics.hpp"
#include "bap/dykstra.hpp"
#include "bap/polytope_qp.hpp"
#include "bap/product_space.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace bap {
namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

// JSON has no NaN or infinity.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << content;
  if (!out) throw InputError("failed writing '" + path + "'");
}

double block_distance(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]).squaredNorm();
  return std::sqrt(s);
}

}  // namespace

RunSummary execute(const ProblemFile& file) {
  const Problem& problem = file.problem;
  const RunOptions& o = file.options;

  SolveOptions options;
  options.rule = o.rule;
  options.reference = file.reference;
  options.shqp = o.shqp;
  options.buffer_capacity = o.buffer_capacity;
  options.insertion_points = o.insertion_points;
  options.threads = o.threads;

  std::optional<Blocks> warmstart = o.warmstart;
  if (!warmstart && o.random_warmstart > 0.0) warmstart = random_blocks(problem, o.random_warmstart, o.seed);

  RunSummary summary;
  switch (o.algorithm) {
    case Algorithm::Dykstra:
      summary.result = dykstra_solve(problem, warmstart, options);
      break;
    case Algorithm::Extended:
      summary.result = extended_dykstra_solve(problem, warmstart, options);
      break;
    case Algorithm::Simultaneous:
      summary.result = simultaneous_dykstra_solve(problem, weights_or_uniform(problem), warmstart, options);
      break;
    case Algorithm::Tree:
      summary.result = tree_dykstra_solve(problem, file.tree ? *file.tree : TreeTopology::flat(problem.m()), warmstart,
                                          options);
      break;
    case Algorithm::Apg: {
      ApgOutput apg = apg_solve(problem, warmstart, options);
      if (o.epsilon) {
        // The best iterate stands in for the unknown dual minimizer.
        const double dist = block_distance(apg.result.state.blocks, apg.result.trace.initial_blocks);
        summary.threshold_index = apg_threshold_index(static_cast<double>(problem.m()), *o.epsilon, dist);
      }
      summary.result = apg.result;
      summary.apg = std::move(apg);
      break;
    }
  }
  return summary;
}

std::string trace_csv(const SolveTrace& trace) {
  std::size_t blocks = 0;
  for (const SweepRecord& r : trace.sweeps) blocks = std::max(blocks, r.block_changes.size());
  std::ostringstream out;
  out << "sweep,h,h_k,primal_residual,max_dual_norm,v_monitor";
  for (std::size_t i = 1; i <= blocks; ++i) out << ",dy_" << i;
  out << "\n";
  for (const SweepRecord& r : trace.sweeps) {
    out << r.sweep << ',' << fmt(r.h) << ',' << fmt(r.h_k) << ',' << fmt(r.primal_residual) << ','
        << fmt(r.max_dual_norm) << ',' << fmt(r.v_monitor);
    for (std::size_t i = 0; i < blocks; ++i) out << ',' << (i < r.block_changes.size() ? fmt(r.block_changes[i]) : "");
    out << "\n";
  }
  return out.str();
}

std::string report_json(const ProblemFile& file, const RunSummary& summary) {
  const SolveResult& result = summary.result;
  const SolveTrace& trace = result.trace;
  json report;
  report["algorithm"] = to_string(file.options.algorithm);
  report["status"] = to_string(result.status);
  report["sweeps"] = result.state.sweep;
  report["x"] = to_json(result.state.x);
  const double h = trace.sweeps.empty() ? trace.initial_h : trace.sweeps.back().h;
  const double h_k = trace.sweeps.empty() ? trace.initial_h_k : trace.sweeps.back().h_k;
  report["h"] = number_or_null(h);
  report["h_k"] = number_or_null(h_k);
  report["primal_residual"] = primal_residual(file.problem, result.state.x);
  report["growth_flag"] = trace.growth_flag;
  report["growth_flag_sweep"] = trace.growth_flag_sweep;
  report["refinements"] = trace.refines.size();
  if (file.reference) {
    report["error"] = (result.state.x - *file.reference).norm();
    report["optimal_dual_value"] = optimal_dual_value(file.problem, *file.reference);
    report["gap"] = number_or_null(h - optimal_dual_value(file.problem, *file.reference));
  }
  if (summary.apg) {
    const ApgOutput& apg = *summary.apg;
    json a;
    a["best_index"] = apg.best_index;
    a["min_h"] = number_or_null(apg.h_values.at(static_cast<std::size_t>(apg.best_index)));
    a["refinements_accepted"] = apg.refinements_accepted;
    a["refinements_rejected"] = apg.refinements_rejected;
    if (summary.threshold_index) {
      a["epsilon"] = *file.options.epsilon;
      a["threshold_index"] = *summary.threshold_index;
    }
    report["apg"] = a;
  }
  return report.dump(2) + "\n";
}

int run(const ProblemFile& file, const RunPaths& paths, std::ostream& out, std::ostream& err) {
  RunSummary summary;
  try {
    summary = execute(file);
  } catch (const QpError& e) {
    err << "solver error: " << e.what() << "\n";
    return kExitSolverError;
  } catch (const std::invalid_argument& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "solver error: " << e.what() << "\n";
    return kExitSolverError;
  }

  try {
    if (paths.trace_out) write_file(*paths.trace_out, trace_csv(summary.result.trace));
    if (paths.report_out) write_file(*paths.report_out, report_json(file, summary));
  } catch (const InputError& e) {
    err << "output error: " << e.what() << "\n";
    return kExitInputError;
  }

  const SolveResult& r = summary.result;
  out << "status=" << to_string(r.status) << " sweeps=" << r.state.sweep
      << " primal_residual=" << fmt(primal_residual(file.problem, r.state.x)) << "\n";
  out << "x =";
  for (Eigen::Index i = 0; i < r.state.x.size(); ++i) out << ' ' << fmt(r.state.x(i));
  out << "\n";
  return r.status == SolveStatus::Converged ? kExitSuccess : kExitNotConverged;
}

}  // namespace bap
