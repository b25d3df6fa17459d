// Batch solver for best-approximation problem files.

#include "bap/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"Project a point onto an intersection of closed convex sets"};

  std::string problem_path;
  std::optional<std::string> algorithm;
  std::optional<double> tolerance;
  std::optional<double> dual_tolerance;
  std::optional<long> max_sweeps;
  std::optional<std::size_t> buffer_capacity;
  std::optional<std::string> shqp_schedule;
  std::optional<std::string> warmstart_file;
  std::optional<std::uint64_t> seed;
  std::optional<double> random_warmstart;
  std::optional<double> epsilon;
  std::optional<unsigned> threads;
  bap::RunPaths paths;

  app.add_option("problem", problem_path, "Problem file (JSON)")->required();
  app.add_option("--algorithm", algorithm, "dykstra | extended | simultaneous | tree | apg")
      ->check(CLI::IsMember({"dykstra", "extended", "simultaneous", "tree", "apg"}));
  app.add_option("--tolerance", tolerance, "Primal tolerance on max_i dist(x, C_i)");
  app.add_option("--dual-tolerance", dual_tolerance, "Tolerance on the summed block changes per sweep");
  app.add_option("--max-sweeps", max_sweeps, "Sweep (or iteration) limit");
  app.add_option("--buffer-capacity", buffer_capacity, "Halfspace buffer capacity for extended and tree runs");
  app.add_option("--shqp-schedule", shqp_schedule, "none | every_sweep")->check(CLI::IsMember({"none", "every_sweep"}));
  app.add_option("--warmstart-file", warmstart_file, "JSON array with one dual block per set");
  app.add_option("--seed", seed, "Seed for the random warmstart");
  app.add_option("--random-warmstart", random_warmstart, "Radius of a seeded random warmstart (0 disables)");
  app.add_option("--epsilon", epsilon, "Accuracy for the APG iteration estimate");
  app.add_option("--threads", threads, "Worker threads for simultaneous runs");
  app.add_option("--trace-out", paths.trace_out, "Write the per-sweep trace (CSV)");
  app.add_option("--report-out", paths.report_out, "Write the summary report (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return bap::kExitInputError;
  }

  bap::ProblemFile file;
  try {
    file = bap::load_problem(problem_path);
    bap::RunOptions& o = file.options;
    if (algorithm) o.algorithm = *bap::parse_algorithm(*algorithm);
    if (tolerance) o.rule.primal_tolerance = *tolerance;
    if (dual_tolerance) o.rule.dual_tolerance = *dual_tolerance;
    if (max_sweeps) o.rule.max_sweeps = *max_sweeps;
    if (buffer_capacity) o.buffer_capacity = *buffer_capacity;
    if (shqp_schedule) o.shqp = *bap::parse_shqp_schedule(*shqp_schedule);
    if (warmstart_file) o.warmstart = bap::load_warmstart(*warmstart_file, file.problem);
    if (seed) o.seed = *seed;
    if (random_warmstart) o.random_warmstart = *random_warmstart;
    if (epsilon) o.epsilon = *epsilon;
    if (threads) o.threads = *threads;
    if (!(o.rule.primal_tolerance > 0.0) || !(o.rule.dual_tolerance > 0.0) || o.rule.max_sweeps < 1 ||
        o.random_warmstart < 0.0 || (o.epsilon && !(*o.epsilon > 0.0)) || o.threads < 1) {
      throw bap::InputError("tolerances, epsilon, max sweeps and threads must be positive");
    }
  } catch (const bap::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return bap::kExitInputError;
  }

  return bap::run(file, paths, std::cout, std::cerr);
}
