#pragma once

#include "bap/problem.hpp"
#include "bap/product_space.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bap {

/// Base of all problem-file errors.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

/// Carries the JSON path of the offending field, e.g. "sets[1].normal".
class SchemaError : public InputError {
 public:
  SchemaError(std::string path, const std::string& message)
      : InputError(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class DimensionMismatch : public InputError {
 public:
  DimensionMismatch(std::string path, const std::string& message)
      : InputError(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class Algorithm { Dykstra, Extended, Simultaneous, Tree, Apg };

const char* to_string(Algorithm algorithm);
std::optional<Algorithm> parse_algorithm(std::string_view name);

const char* to_string(ShqpSchedule schedule);
std::optional<ShqpSchedule> parse_shqp_schedule(std::string_view name);

struct RunOptions {
  Algorithm algorithm = Algorithm::Dykstra;
  StoppingRule rule;
  std::size_t buffer_capacity = 32;
  std::vector<std::size_t> insertion_points;
  ShqpSchedule shqp = ShqpSchedule::None;
  std::optional<Blocks> warmstart;
  std::uint64_t seed = 0;
  /// Radius of a seeded random warmstart; 0 disables. Ignored when explicit
  /// warmstart blocks are given.
  double random_warmstart = 0.0;
  /// Accuracy used for the APG iteration-count estimate in the report.
  std::optional<double> epsilon;
  unsigned threads = 1;
};

bool operator==(const RunOptions& a, const RunOptions& b);

struct ProblemFile {
  Problem problem;
  std::optional<TreeTopology> tree;
  /// Known P_C(d); enables gap and error reporting.
  std::optional<Vec> reference;
  RunOptions options;
};

bool operator==(const ProblemFile& a, const ProblemFile& b);

/// Parses JSON text. Throws ParseError, SchemaError or DimensionMismatch.
ProblemFile parse_problem(const std::string& text);
ProblemFile load_problem(const std::string& path);

std::string serialize_problem(const ProblemFile& file);
void save_problem(const ProblemFile& file, const std::string& path);

/// Reads warmstart blocks (a JSON array of m vectors) for the given problem.
Blocks load_warmstart(const std::string& path, const Problem& problem);

/// Deterministic random blocks with norms at most `radius`.
Blocks random_blocks(const Problem& problem, double radius, std::uint64_t seed);

}  // namespace bap
