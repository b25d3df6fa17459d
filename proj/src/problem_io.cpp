#include "bap/problem_io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>

namespace bap {
namespace {

using nlohmann::json;

std::string at(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, std::size_t index) { return path + "[" + std::to_string(index) + "]"; }

void allow_keys(const json& object, const std::string& path, std::initializer_list<const char*> keys) {
  for (auto it = object.begin(); it != object.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw SchemaError(at(path, it.key()), "unknown field");
  }
}

const json& require_field(const json& object, const std::string& path, const char* key) {
  auto it = object.find(key);
  if (it == object.end()) throw SchemaError(at(path, key), "missing required field");
  return *it;
}

double read_number(const json& value, const std::string& path) {
  if (!value.is_number()) throw SchemaError(path, "expected a number");
  const double v = value.get<double>();
  if (!std::isfinite(v)) throw SchemaError(path, "expected a finite number");
  return v;
}

std::uint64_t read_count(const json& value, const std::string& path) {
  if (!value.is_number_integer() || (value.is_number_integer() && !value.is_number_unsigned() && value.get<long long>() < 0)) {
    throw SchemaError(path, "expected a non-negative integer");
  }
  return value.get<std::uint64_t>();
}

Vec read_vector(const json& value, const std::string& path) {
  if (!value.is_array()) throw SchemaError(path, "expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(value.size()));
  for (std::size_t i = 0; i < value.size(); ++i) v(static_cast<Eigen::Index>(i)) = read_number(value[i], at(path, i));
  return v;
}

Vec read_vector_of_dim(const json& value, const std::string& path, Eigen::Index n) {
  Vec v = read_vector(value, path);
  if (v.size() != n) {
    throw DimensionMismatch(path, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
  }
  return v;
}

// Wraps geometry validation failures with the field path.
template <typename F>
ConvexSet build(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path, e.what());
  }
}

ConvexSet read_set(const json& value, const std::string& path, Eigen::Index n) {
  if (!value.is_object()) throw SchemaError(path, "expected an object");
  const json& type_field = require_field(value, path, "type");
  if (!type_field.is_string()) throw SchemaError(at(path, "type"), "expected a string");
  const std::string type = type_field.get<std::string>();

  if (type == "halfspace" || type == "hyperplane") {
    allow_keys(value, path, {"type", "normal", "offset"});
    const Vec a = read_vector_of_dim(require_field(value, path, "normal"), at(path, "normal"), n);
    const double b = read_number(require_field(value, path, "offset"), at(path, "offset"));
    return build(path, [&] { return type == "halfspace" ? make_halfspace(a, b) : make_hyperplane(a, b); });
  }
  if (type == "box") {
    allow_keys(value, path, {"type", "lower", "upper"});
    const Vec lo = read_vector_of_dim(require_field(value, path, "lower"), at(path, "lower"), n);
    const Vec hi = read_vector_of_dim(require_field(value, path, "upper"), at(path, "upper"), n);
    return build(path, [&] { return make_box(lo, hi); });
  }
  if (type == "ball") {
    allow_keys(value, path, {"type", "center", "radius"});
    const Vec c = read_vector_of_dim(require_field(value, path, "center"), at(path, "center"), n);
    const double r = read_number(require_field(value, path, "radius"), at(path, "radius"));
    return build(path, [&] { return make_ball(c, r); });
  }
  if (type == "affine") {
    allow_keys(value, path, {"type", "base", "directions"});
    const Vec base = read_vector_of_dim(require_field(value, path, "base"), at(path, "base"), n);
    const json& dirs = require_field(value, path, "directions");
    const std::string dpath = at(path, "directions");
    if (!dirs.is_array()) throw SchemaError(dpath, "expected an array of vectors");
    Mat directions(n, static_cast<Eigen::Index>(dirs.size()));
    for (std::size_t j = 0; j < dirs.size(); ++j) {
      directions.col(static_cast<Eigen::Index>(j)) = read_vector_of_dim(dirs[j], at(dpath, j), n);
    }
    return build(path, [&] { return make_affine_subspace(base, directions); });
  }
  if (type == "polyhedron") {
    allow_keys(value, path, {"type", "faces"});
    const json& faces = require_field(value, path, "faces");
    const std::string fpath = at(path, "faces");
    if (!faces.is_array() || faces.empty()) throw SchemaError(fpath, "expected a non-empty array of faces");
    std::vector<Halfspace> hs;
    for (std::size_t j = 0; j < faces.size(); ++j) {
      const std::string p = at(fpath, j);
      if (!faces[j].is_object()) throw SchemaError(p, "expected an object");
      allow_keys(faces[j], p, {"normal", "offset"});
      const Vec a = read_vector_of_dim(require_field(faces[j], p, "normal"), at(p, "normal"), n);
      const double b = read_number(require_field(faces[j], p, "offset"), at(p, "offset"));
      if (a.norm() == 0.0) throw SchemaError(at(p, "normal"), "normal must be nonzero");
      hs.push_back(Halfspace{a, b});
    }
    return build(path, [&] { return make_polyhedron(hs); });
  }
  if (type == "whole_space") {
    allow_keys(value, path, {"type"});
    return make_whole_space(n);
  }
  throw SchemaError(at(path, "type"), "unknown set type '" + type + "'");
}

json write_vector(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json write_set(const ConvexSet& set) {
  json out;
  if (const auto* h = set.as<Halfspace>()) {
    out = {{"type", "halfspace"}, {"normal", write_vector(h->normal)}, {"offset", h->offset}};
  } else if (const auto* p = set.as<Hyperplane>()) {
    out = {{"type", "hyperplane"}, {"normal", write_vector(p->normal)}, {"offset", p->offset}};
  } else if (const auto* b = set.as<Box>()) {
    out = {{"type", "box"}, {"lower", write_vector(b->lower)}, {"upper", write_vector(b->upper)}};
  } else if (const auto* b = set.as<Ball>()) {
    out = {{"type", "ball"}, {"center", write_vector(b->center)}, {"radius", b->radius}};
  } else if (const auto* a = set.as<AffineSubspace>()) {
    json dirs = json::array();
    for (Eigen::Index j = 0; j < a->basis.cols(); ++j) dirs.push_back(write_vector(a->basis.col(j)));
    out = {{"type", "affine"}, {"base", write_vector(a->base)}, {"directions", dirs}};
  } else if (const auto* p = set.as<Polyhedron>()) {
    json faces = json::array();
    for (const Halfspace& h : p->faces) faces.push_back({{"normal", write_vector(h.normal)}, {"offset", h.offset}});
    out = {{"type", "polyhedron"}, {"faces", faces}};
  } else if (set.as<WholeSpace>()) {
    out = {{"type", "whole_space"}};
  } else {
    throw std::invalid_argument("serialize_problem: product sets cannot be written to a problem file");
  }
  return out;
}

Blocks read_blocks(const json& value, const std::string& path, std::size_t m, Eigen::Index n) {
  if (!value.is_array()) throw SchemaError(path, "expected an array of blocks");
  if (value.size() != m) {
    throw DimensionMismatch(path, "expected " + std::to_string(m) + " blocks, got " + std::to_string(value.size()));
  }
  Blocks out;
  for (std::size_t i = 0; i < m; ++i) out.push_back(read_vector_of_dim(value[i], at(path, i), n));
  return out;
}

TreeTopology read_tree(const json& value, const std::string& path, std::size_t m) {
  if (!value.is_object()) throw SchemaError(path, "expected an object");
  allow_keys(value, path, {"root", "nodes"});
  const std::size_t root = read_count(require_field(value, path, "root"), at(path, "root"));
  const json& nodes = require_field(value, path, "nodes");
  const std::string npath = at(path, "nodes");
  if (!nodes.is_array()) throw SchemaError(npath, "expected an array of nodes");
  std::vector<TreeNode> out;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const std::string p = at(npath, j);
    if (!nodes[j].is_object()) throw SchemaError(p, "expected an object");
    allow_keys(nodes[j], p, {"set", "children", "shqp"});
    TreeNode node;
    if (nodes[j].contains("set")) node.set = read_count(nodes[j]["set"], at(p, "set"));
    if (nodes[j].contains("children")) {
      const json& c = nodes[j]["children"];
      if (!c.is_array()) throw SchemaError(at(p, "children"), "expected an array of node indices");
      for (std::size_t k = 0; k < c.size(); ++k) node.children.push_back(read_count(c[k], at(at(p, "children"), k)));
    }
    if (nodes[j].contains("shqp")) {
      if (!nodes[j]["shqp"].is_boolean()) throw SchemaError(at(p, "shqp"), "expected a boolean");
      node.shqp = nodes[j]["shqp"].get<bool>();
    }
    out.push_back(std::move(node));
  }
  try {
    return TreeTopology(std::move(out), root, m);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path, e.what());
  }
}

json write_tree(const TreeTopology& tree) {
  json nodes = json::array();
  for (const TreeNode& node : tree.nodes()) {
    json j = json::object();
    if (node.set) j["set"] = *node.set;
    if (!node.children.empty()) j["children"] = node.children;
    if (node.shqp) j["shqp"] = true;
    nodes.push_back(j);
  }
  return {{"root", tree.root()}, {"nodes", nodes}};
}

void read_options(const json& value, const std::string& path, const Problem& problem, RunOptions& o) {
  if (!value.is_object()) throw SchemaError(path, "expected an object");
  allow_keys(value, path,
             {"primal_tolerance", "dual_tolerance", "max_sweeps", "buffer_capacity", "insertion_points",
              "shqp_schedule", "warmstart", "seed", "random_warmstart", "epsilon", "threads"});
  auto positive = [&](const char* key) {
    const double v = read_number(value[key], at(path, key));
    if (!(v > 0.0)) throw SchemaError(at(path, key), "must be positive");
    return v;
  };
  if (value.contains("primal_tolerance")) o.rule.primal_tolerance = positive("primal_tolerance");
  if (value.contains("dual_tolerance")) o.rule.dual_tolerance = positive("dual_tolerance");
  if (value.contains("max_sweeps")) {
    o.rule.max_sweeps = static_cast<long>(read_count(value["max_sweeps"], at(path, "max_sweeps")));
    if (o.rule.max_sweeps < 1) throw SchemaError(at(path, "max_sweeps"), "must be at least 1");
  }
  if (value.contains("buffer_capacity")) {
    o.buffer_capacity = read_count(value["buffer_capacity"], at(path, "buffer_capacity"));
  }
  if (value.contains("insertion_points")) {
    const json& ip = value["insertion_points"];
    const std::string p = at(path, "insertion_points");
    if (!ip.is_array()) throw SchemaError(p, "expected an array of integers");
    for (std::size_t k = 0; k < ip.size(); ++k) {
      const std::size_t point = read_count(ip[k], at(p, k));
      if (point > problem.m()) throw SchemaError(at(p, k), "insertion point exceeds the number of sets");
      o.insertion_points.push_back(point);
    }
  }
  if (value.contains("shqp_schedule")) {
    const json& s = value["shqp_schedule"];
    const auto parsed = s.is_string() ? parse_shqp_schedule(s.get<std::string>()) : std::nullopt;
    if (!parsed) throw SchemaError(at(path, "shqp_schedule"), "expected \"none\" or \"every_sweep\"");
    o.shqp = *parsed;
  }
  if (value.contains("warmstart")) {
    o.warmstart = read_blocks(value["warmstart"], at(path, "warmstart"), problem.m(), problem.dim());
  }
  if (value.contains("seed")) o.seed = read_count(value["seed"], at(path, "seed"));
  if (value.contains("random_warmstart")) {
    o.random_warmstart = read_number(value["random_warmstart"], at(path, "random_warmstart"));
    if (o.random_warmstart < 0.0) throw SchemaError(at(path, "random_warmstart"), "must be non-negative");
  }
  if (value.contains("epsilon")) o.epsilon = positive("epsilon");
  if (value.contains("threads")) {
    o.threads = static_cast<unsigned>(read_count(value["threads"], at(path, "threads")));
    if (o.threads < 1) throw SchemaError(at(path, "threads"), "must be at least 1");
  }
}

json write_options(const RunOptions& o) {
  json out = {{"primal_tolerance", o.rule.primal_tolerance},
              {"dual_tolerance", o.rule.dual_tolerance},
              {"max_sweeps", o.rule.max_sweeps},
              {"buffer_capacity", o.buffer_capacity},
              {"shqp_schedule", to_string(o.shqp)},
              {"seed", o.seed},
              {"random_warmstart", o.random_warmstart},
              {"threads", o.threads}};
  if (!o.insertion_points.empty()) out["insertion_points"] = o.insertion_points;
  if (o.warmstart) {
    json blocks = json::array();
    for (const Vec& y : *o.warmstart) blocks.push_back(write_vector(y));
    out["warmstart"] = blocks;
  }
  if (o.epsilon) out["epsilon"] = *o.epsilon;
  return out;
}

bool same_blocks(const std::optional<Blocks>& a, const std::optional<Blocks>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  if (a->size() != b->size()) return false;
  for (std::size_t i = 0; i < a->size(); ++i) {
    if ((*a)[i].size() != (*b)[i].size() || (*a)[i] != (*b)[i]) return false;
  }
  return true;
}

}  // namespace

const char* to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Dykstra: return "dykstra";
    case Algorithm::Extended: return "extended";
    case Algorithm::Simultaneous: return "simultaneous";
    case Algorithm::Tree: return "tree";
    case Algorithm::Apg: return "apg";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::Dykstra, Algorithm::Extended, Algorithm::Simultaneous, Algorithm::Tree, Algorithm::Apg}) {
    if (name == to_string(a)) return a;
  }
  return std::nullopt;
}

const char* to_string(ShqpSchedule schedule) { return schedule == ShqpSchedule::None ? "none" : "every_sweep"; }

std::optional<ShqpSchedule> parse_shqp_schedule(std::string_view name) {
  if (name == "none") return ShqpSchedule::None;
  if (name == "every_sweep") return ShqpSchedule::EverySweep;
  return std::nullopt;
}

bool operator==(const RunOptions& a, const RunOptions& b) {
  return a.algorithm == b.algorithm && a.rule.primal_tolerance == b.rule.primal_tolerance &&
         a.rule.dual_tolerance == b.rule.dual_tolerance && a.rule.max_sweeps == b.rule.max_sweeps &&
         a.buffer_capacity == b.buffer_capacity && a.insertion_points == b.insertion_points && a.shqp == b.shqp &&
         same_blocks(a.warmstart, b.warmstart) && a.seed == b.seed && a.random_warmstart == b.random_warmstart &&
         a.epsilon == b.epsilon && a.threads == b.threads;
}

bool operator==(const ProblemFile& a, const ProblemFile& b) {
  if (a.reference.has_value() != b.reference.has_value()) return false;
  if (a.reference && (a.reference->size() != b.reference->size() || *a.reference != *b.reference)) return false;
  return a.problem == b.problem && a.tree == b.tree && a.options == b.options;
}

ProblemFile parse_problem(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("$", "top level must be an object");
  allow_keys(doc, "", {"dimension", "point", "sets", "weights", "tree", "reference_solution", "algorithm", "options"});

  ProblemFile file;
  Problem& problem = file.problem;
  problem.d = read_vector(require_field(doc, "", "point"), "point");
  const Eigen::Index n = problem.d.size();
  if (n == 0) throw SchemaError("point", "must be non-empty");
  if (doc.contains("dimension")) {
    const std::uint64_t dim = read_count(doc["dimension"], "dimension");
    if (dim != static_cast<std::uint64_t>(n)) {
      throw DimensionMismatch("point", "dimension is " + std::to_string(dim) + " but the point has " +
                                           std::to_string(n) + " entries");
    }
  }

  const json& sets = require_field(doc, "", "sets");
  if (!sets.is_array() || sets.empty()) throw SchemaError("sets", "expected a non-empty array of sets");
  for (std::size_t i = 0; i < sets.size(); ++i) problem.sets.push_back(read_set(sets[i], at("sets", i), n));

  if (doc.contains("weights")) {
    const Vec w = read_vector(doc["weights"], "weights");
    if (static_cast<std::size_t>(w.size()) != problem.m()) {
      throw DimensionMismatch("weights", "expected one weight per set");
    }
    std::vector<double> weights(w.data(), w.data() + w.size());
    try {
      check_weights(weights, problem.m());
    } catch (const std::invalid_argument& e) {
      throw SchemaError("weights", e.what());
    }
    problem.weights = std::move(weights);
  }
  if (doc.contains("tree")) file.tree = read_tree(doc["tree"], "tree", problem.m());
  if (doc.contains("reference_solution")) {
    file.reference = read_vector_of_dim(doc["reference_solution"], "reference_solution", n);
  }
  if (doc.contains("algorithm")) {
    const json& a = doc["algorithm"];
    const auto parsed = a.is_string() ? parse_algorithm(a.get<std::string>()) : std::nullopt;
    if (!parsed) throw SchemaError("algorithm", "expected one of dykstra, extended, simultaneous, tree, apg");
    file.options.algorithm = *parsed;
  }
  if (doc.contains("options")) read_options(doc["options"], "options", problem, file.options);

  try {
    validate(problem);
  } catch (const std::invalid_argument& e) {
    throw SchemaError("$", e.what());
  }
  return file;
}

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open problem file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_problem(buffer.str());
}

std::string serialize_problem(const ProblemFile& file) {
  json doc;
  doc["dimension"] = file.problem.dim();
  doc["point"] = write_vector(file.problem.d);
  json sets = json::array();
  for (const ConvexSet& s : file.problem.sets) sets.push_back(write_set(s));
  doc["sets"] = sets;
  if (file.problem.weights) doc["weights"] = *file.problem.weights;
  if (file.tree) doc["tree"] = write_tree(*file.tree);
  if (file.reference) doc["reference_solution"] = write_vector(*file.reference);
  doc["algorithm"] = to_string(file.options.algorithm);
  doc["options"] = write_options(file.options);
  return doc.dump(2) + "\n";
}

void save_problem(const ProblemFile& file, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << serialize_problem(file);
  if (!out) throw InputError("failed writing '" + path + "'");
}

Blocks load_warmstart(const std::string& path, const Problem& problem) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open warmstart file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON in warmstart file: ") + e.what());
  }
  if (doc.is_object()) {
    allow_keys(doc, "", {"warmstart"});
    return read_blocks(require_field(doc, "", "warmstart"), "warmstart", problem.m(), problem.dim());
  }
  return read_blocks(doc, "warmstart", problem.m(), problem.dim());
}

Blocks random_blocks(const Problem& problem, double radius, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  // Fixed 53-bit mapping keeps the stream identical across standard libraries.
  auto uniform = [&gen] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
  Blocks out;
  for (std::size_t i = 0; i < problem.m(); ++i) {
    Vec v(problem.dim());
    for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = 2.0 * uniform() - 1.0;
    const double norm = v.norm();
    const double target = radius * uniform();
    out.push_back(norm > 0.0 ? Vec(v * (target / norm)) : Vec(Vec::Zero(problem.dim())));
  }
  return out;
}

}  // namespace bap
