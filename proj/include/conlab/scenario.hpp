#pragma once

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "conlab/errors.hpp"
#include "conlab/design.hpp"
#include "conlab/sim.hpp"

namespace conlab {

/// Deterministic uniform sampler: mantissa-width draws from mt19937_64, so
/// identical seeds give identical values on every platform.
class SeededUniform {
 public:
  explicit SeededUniform(std::uint64_t seed) : rng_(seed) {}

  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }  // [0, 1)

  double in(double lo, double hi) { return lo + unit() * (hi - lo); }

  /// Strictly inside (lo, hi): redraws the measure-zero endpoint.
  double in_open(double lo, double hi) {
    double v = in(lo, hi);
    while (v <= lo) v = in(lo, hi);
    return v;
  }

 private:
  std::mt19937_64 rng_;
};

struct OutputSpec {
  std::string csv = "trajectory.csv";
  std::string json = "report.json";
  std::vector<std::string> svg;  ///< subset of {error_norm, weights, states}
};

struct ScenarioBundle {
  Scenario scenario;
  OutputSpec outputs;
};

namespace scenario_io {

using nlohmann::json;

inline Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ParseError(what + ": expected a 2-D array");
  const size_t rows = j.size();
  const size_t cols = j[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ParseError(what + ": ragged rows");
    for (size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r),
                                        static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

/// Section seed: explicit "seed" key, else the top-level seed salted with the
/// section name. Randomized fields without any seed are an error.
inline std::uint64_t section_seed(const json& section, const json& root,
                                  const std::string& name) {
  if (section.contains("seed")) return section["seed"].get<std::uint64_t>();
  if (root.contains("seed")) return fnv1a(name, root["seed"].get<std::uint64_t>());
  throw ParseError(name + ": randomized fields require an explicit seed");
}

inline SystemDynamics parse_dynamics(const json& j) {
  const json& d = j.contains("dynamics") ? j["dynamics"] : j;
  if (!d.contains("A") || !d.contains("B"))
    throw ParseError("dynamics: sections A and B are required");
  try {
    return SystemDynamics(matrix_from_json(d["A"], "dynamics.A"),
                          matrix_from_json(d["B"], "dynamics.B"));
  } catch (const DimensionMismatch& e) {
    throw ParseError(std::string("dynamics: ") + e.what());
  }
}

inline DirectedGraph parse_graph(const json& root) {
  const json& g = root.contains("graph") ? root["graph"] : root;
  if (!g.contains("nodes") || !g.contains("leaders") || !g.contains("edges"))
    throw ParseError("graph: nodes, leaders and edges are required");

  const int nodes = g["nodes"].get<int>();
  std::vector<int> leaders = g["leaders"].get<std::vector<int>>();

  bool needs_draw = false;
  for (const json& e : g["edges"])
    if (e.is_array() && e.size() == 2) needs_draw = true;

  double wlo = 0.0, whi = 0.0;
  std::unique_ptr<SeededUniform> draw;
  if (needs_draw) {
    if (!g.contains("edge_weight_interval"))
      throw ParseError("graph: weightless edges require edge_weight_interval");
    wlo = g["edge_weight_interval"][0].get<double>();
    whi = g["edge_weight_interval"][1].get<double>();
    draw = std::make_unique<SeededUniform>(section_seed(g, root, "graph"));
  }

  std::vector<Edge> edges;
  for (const json& e : g["edges"]) {
    if (!e.is_array() || (e.size() != 2 && e.size() != 3))
      throw ParseError("graph: edges must be [source, target] or [source, target, weight]");
    Edge edge;
    edge.source = e[0].get<int>();
    edge.target = e[1].get<int>();
    edge.weight = e.size() == 3 ? e[2].get<double>() : draw->in_open(wlo, whi);
    edges.push_back(edge);
  }
  try {
    return DirectedGraph(nodes, std::move(leaders), std::move(edges));
  } catch (const InvalidGraph& e) {
    throw ParseError(std::string("graph: ") + e.what());
  }
}

inline ProtocolConfig parse_protocol(const json& root, const SystemDynamics& sys,
                                     int follower_count) {
  if (!root.contains("protocol")) throw ParseError("protocol section is required");
  const json& p = root["protocol"];
  ProtocolConfig cfg;
  const std::string kind = p.value("kind", "adaptive");
  if (kind == "static")
    cfg.kind = ProtocolKind::Static;
  else if (kind == "adaptive")
    cfg.kind = ProtocolKind::Adaptive;
  else
    throw ParseError("protocol.kind must be \"static\" or \"adaptive\"");

  cfg.rho_exponent = p.value("rho_exponent", 3);
  if (cfg.kind == ProtocolKind::Static) {
    if (!p.contains("c")) throw ParseError("protocol: static kind requires c");
    cfg.c = p["c"].get<double>();
  } else {
    if (p.contains("c_init")) {
      if (p["c_init"].is_number()) {
        cfg.c_init = Eigen::VectorXd::Constant(follower_count, p["c_init"].get<double>());
      } else {
        const std::vector<double> v = p["c_init"].get<std::vector<double>>();
        cfg.c_init = Eigen::Map<const Eigen::VectorXd>(v.data(),
                                                       static_cast<Eigen::Index>(v.size()));
      }
    } else if (p.contains("c_init_interval")) {
      SeededUniform draw(section_seed(p, root, "protocol"));
      const double lo = p["c_init_interval"][0].get<double>();
      const double hi = p["c_init_interval"][1].get<double>();
      cfg.c_init.resize(follower_count);
      for (int i = 0; i < follower_count; ++i) cfg.c_init(i) = draw.in(lo, hi);
    } else {
      throw ParseError("protocol: adaptive kind requires c_init or c_init_interval");
    }
  }

  cfg.gains = solve_care(sys);
  return cfg;
}

inline Eigen::VectorXd parse_initial_states(const json& root, int node_count, int n) {
  if (!root.contains("initial_states")) throw ParseError("initial_states section is required");
  const json& s = root["initial_states"];
  Eigen::VectorXd x0(static_cast<Eigen::Index>(node_count) * n);
  if (s.contains("explicit")) {
    const json& rows = s["explicit"];
    if (!rows.is_array() || static_cast<int>(rows.size()) != node_count)
      throw ParseError("initial_states.explicit: one row per agent required");
    for (int a = 0; a < node_count; ++a) {
      if (static_cast<int>(rows[static_cast<size_t>(a)].size()) != n)
        throw ParseError("initial_states.explicit: row " + std::to_string(a) +
                         " must have n entries");
      for (int k = 0; k < n; ++k)
        x0(static_cast<Eigen::Index>(a) * n + k) =
            rows[static_cast<size_t>(a)][static_cast<size_t>(k)].get<double>();
    }
  } else if (s.contains("interval")) {
    SeededUniform draw(section_seed(s, root, "initial_states"));
    const double lo = s["interval"][0].get<double>();
    const double hi = s["interval"][1].get<double>();
    for (Eigen::Index i = 0; i < x0.size(); ++i) x0(i) = draw.in(lo, hi);
  } else {
    throw ParseError("initial_states: explicit or interval is required");
  }
  return x0;  // user node-id order; caller permutes to internal order
}

inline void parse_sim_section(const json& root, Scenario& sc) {
  if (!root.contains("sim")) throw ParseError("sim section is required");
  const json& s = root["sim"];
  if (!s.contains("t_end")) throw ParseError("sim: t_end is required");
  sc.t_end = s["t_end"].get<double>();
  const std::string method = s.value("method", "rk4");
  if (method == "rk4")
    sc.integrator.method = IntegratorSettings::Method::rk4;
  else if (method == "rkf45")
    sc.integrator.method = IntegratorSettings::Method::rkf45;
  else
    throw ParseError("sim.method must be \"rk4\" or \"rkf45\"");
  sc.integrator.step = s.value("step", 1e-3);
  sc.integrator.rel_tol = s.value("rel_tol", 1e-8);
  sc.integrator.abs_tol = s.value("abs_tol", 1e-10);
  sc.integrator.min_step = s.value("min_step", 1e-12);
  sc.integrator.max_step = s.value("max_step", 1.0);
  sc.sample_interval = s.value("sample_interval", 0.01);
  sc.convergence_threshold = s.value("convergence_threshold", 1e-10);
}

/// Parses a full scenario file. `seed_offset` shifts every effective seed (the
/// --runs batch mechanism); resolved fields are unaffected.
inline ScenarioBundle parse_scenario(json root, std::uint64_t seed_offset = 0) {
  if (seed_offset != 0) {
    // Shift whichever seeds the file declares.
    if (root.contains("seed")) root["seed"] = root["seed"].get<std::uint64_t>() + seed_offset;
    for (const char* section : {"graph", "protocol", "initial_states"})
      if (root.contains(section) && root[section].contains("seed"))
        root[section]["seed"] = root[section]["seed"].get<std::uint64_t>() + seed_offset;
  }

  SystemDynamics sys = parse_dynamics(root);
  DirectedGraph graph = parse_graph(root);
  ProtocolConfig protocol = parse_protocol(root, sys, graph.follower_count());
  Eigen::VectorXd x0_user = parse_initial_states(root, graph.node_count(), sys.n());

  // Permute user node-id order into internal (leaders-first) order.
  Eigen::VectorXd x0(x0_user.size());
  const int n = sys.n();
  for (int uid = 0; uid < graph.node_count(); ++uid)
    x0.segment(static_cast<Eigen::Index>(graph.internal_index(uid)) * n, n) =
        x0_user.segment(static_cast<Eigen::Index>(uid) * n, n);

  ScenarioBundle bundle{
      Scenario{std::move(sys), std::move(graph), std::move(protocol), std::move(x0)}, {}};
  parse_sim_section(root, bundle.scenario);
  bundle.scenario.seed = root.value("seed", std::uint64_t{0});
  bundle.scenario.validate();

  if (root.contains("outputs")) {
    const json& o = root["outputs"];
    bundle.outputs.csv = o.value("csv", bundle.outputs.csv);
    bundle.outputs.json = o.value("json", bundle.outputs.json);
    if (o.contains("svg")) bundle.outputs.svg = o["svg"].get<std::vector<std::string>>();
    for (const std::string& kind : bundle.outputs.svg)
      if (kind != "error_norm" && kind != "weights" && kind != "states")
        throw ParseError("outputs.svg: unknown plot kind \"" + kind + "\"");
  }
  return bundle;
}

inline ScenarioBundle parse_scenario_text(const std::string& text, std::uint64_t seed_offset = 0) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(std::move(root), seed_offset);
}

/// Serializes a scenario in fully resolved form (drawn weights and initial
/// conditions materialized), so parse(serialize(parse(file))) == parse(file).
inline json serialize_scenario(const ScenarioBundle& bundle) {
  const Scenario& sc = bundle.scenario;
  json root;
  root["dynamics"]["A"] = matrix_to_json(sc.sys.A);
  root["dynamics"]["B"] = matrix_to_json(sc.sys.B);

  root["graph"]["nodes"] = sc.graph.node_count();
  root["graph"]["leaders"] = sc.graph.leaders();
  json edges = json::array();
  for (const Edge& e : sc.graph.edges()) edges.push_back(json::array({e.source, e.target, e.weight}));
  root["graph"]["edges"] = edges;

  if (sc.protocol.kind == ProtocolKind::Static) {
    root["protocol"]["kind"] = "static";
    root["protocol"]["c"] = sc.protocol.c;
  } else {
    root["protocol"]["kind"] = "adaptive";
    root["protocol"]["c_init"] = vector_to_json(sc.protocol.c_init);
  }
  root["protocol"]["rho_exponent"] = sc.protocol.rho_exponent;

  json states = json::array();
  const int n = sc.sys.n();
  for (int uid = 0; uid < sc.graph.node_count(); ++uid) {
    json row = json::array();
    const Eigen::Index base = static_cast<Eigen::Index>(sc.graph.internal_index(uid)) * n;
    for (int k = 0; k < n; ++k) row.push_back(sc.x0(base + k));
    states.push_back(row);
  }
  root["initial_states"]["explicit"] = states;

  root["sim"]["t_end"] = sc.t_end;
  root["sim"]["method"] =
      sc.integrator.method == IntegratorSettings::Method::rk4 ? "rk4" : "rkf45";
  root["sim"]["step"] = sc.integrator.step;
  root["sim"]["rel_tol"] = sc.integrator.rel_tol;
  root["sim"]["abs_tol"] = sc.integrator.abs_tol;
  root["sim"]["min_step"] = sc.integrator.min_step;
  root["sim"]["max_step"] = sc.integrator.max_step;
  root["sim"]["sample_interval"] = sc.sample_interval;
  root["sim"]["convergence_threshold"] = sc.convergence_threshold;
  root["seed"] = sc.seed;

  root["outputs"]["csv"] = bundle.outputs.csv;
  root["outputs"]["json"] = bundle.outputs.json;
  root["outputs"]["svg"] = bundle.outputs.svg;
  return root;
}

}  // namespace scenario_io

}  // namespace conlab
