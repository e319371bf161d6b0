#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "conlab/analysis.hpp"
#include "conlab/containment.hpp"
#include "conlab/errors.hpp"
#include "conlab/output.hpp"
#include "conlab/scenario.hpp"
#include "conlab/sim.hpp"

namespace conlab {

namespace cli {

using nlohmann::json;

// Exit-code contract (stable for CI use):
//   0 success / verdict positive
//   1 IO or parse failure
//   2 assumption violated or (A, B) not stabilizable
//   3 run completed but did not converge / contain by t_end
inline constexpr int kExitOk = 0;
inline constexpr int kExitIoError = 1;
inline constexpr int kExitAssumption = 2;
inline constexpr int kExitNotConverged = 3;

inline json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open " + path);
  std::stringstream buffer;
  buffer << is.rdbuf();
  try {
    return json::parse(buffer.str());
  } catch (const json::exception& e) {
    throw ParseError(path + ": invalid JSON: " + e.what());
  }
}

/// `analyze`: reachability report plus M-matrix analysis of L1.
/// Accepts a scenario file or a bare graph file.
inline int cmd_analyze(const std::string& path, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  try {
    const DirectedGraph graph = scenario_io::parse_graph(load_json(path));
    const AssumptionReport assumption = check_assumption(graph);

    json doc;
    doc["assumption"] = output::assumption_json(assumption);
    if (assumption.satisfied && graph.follower_count() > 0)
      doc["m_matrix"] = output::analysis_json(analyze_m_matrix(build_laplacian(graph)));
    out << doc.dump(2) << "\n";
    return assumption.satisfied ? kExitOk : kExitAssumption;
  } catch (const Error& e) {
    err << "analyze: " << e.what() << "\n";
    return kExitIoError;
  }
}

/// `design`: stabilizability check plus Riccati gain synthesis from the
/// dynamics section (or a bare {"A":..., "B":...} file).
inline int cmd_design(const std::string& path, std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
  try {
    const SystemDynamics sys = scenario_io::parse_dynamics(load_json(path));
    try {
      const GainDesign design = solve_care(sys);
      out << output::gain_json(sys, design).dump(2) << "\n";
      return kExitOk;
    } catch (const NotStabilizable& e) {
      err << "design: " << e.what() << "\n";
      return kExitAssumption;
    }
  } catch (const Error& e) {
    err << "design: " << e.what() << "\n";
    return kExitIoError;
  }
}

namespace detail {

inline void write_artifacts(const ScenarioBundle& bundle, const Trajectory& traj,
                            const RunReport& report, const std::filesystem::path& dir,
                            const std::string& suffix) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto with_suffix = [&](const std::string& name) {
    if (suffix.empty()) return dir / name;
    fs::path p(name);
    return dir / (p.stem().string() + suffix + p.extension().string());
  };

  output::write_csv_file(with_suffix(bundle.outputs.csv).string(), traj, bundle.scenario);
  {
    std::ofstream os(with_suffix(bundle.outputs.json));
    if (!os) throw Error("cannot open report file for writing");
    os << output::report_json(report).dump(2) << "\n";
  }
  for (const std::string& kind : bundle.outputs.svg) {
    const auto path = with_suffix(kind + ".svg").string();
    if (kind == "error_norm")
      output::write_svg_file(path, "consensus error", "||xi_i||",
                             output::error_series(traj, bundle.scenario));
    else if (kind == "weights")
      output::write_svg_file(path, "adaptive coupling weights", "c_i",
                             output::weight_series(traj, bundle.scenario));
    else if (kind == "states")
      output::write_svg_file(path, "agent states", "x",
                             output::state_series(traj, bundle.scenario));
  }
}

}  // namespace detail

/// `simulate`: integrates the scenario and writes CSV / report / SVG
/// artifacts under out_dir. With runs > 1 every run re-derives its seeds with
/// offset k and artifact names gain a _runk suffix.
inline int cmd_simulate(const std::string& path, const std::string& out_dir = ".", int runs = 1,
                        std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  json root;
  try {
    root = load_json(path);
  } catch (const Error& e) {
    err << "simulate: " << e.what() << "\n";
    return kExitIoError;
  }

  int exit_code = kExitOk;
  for (int run = 0; run < runs; ++run) {
    const std::string suffix = runs > 1 ? "_run" + std::to_string(run) : "";
    try {
      const ScenarioBundle bundle =
          scenario_io::parse_scenario(root, static_cast<std::uint64_t>(run));
      if (bundle.scenario.protocol.rho_exponent != 3)
        err << "simulate: warning: rho exponent != 3 is outside the adaptive-protocol "
               "guarantee\n";
      const Trajectory traj = integrate(bundle.scenario);
      const RunReport report = summarize(traj, bundle.scenario);
      detail::write_artifacts(bundle, traj, report, out_dir, suffix);
      out << output::report_json(report).dump(2) << "\n";
      if (!report.convergence_achieved) exit_code = std::max(exit_code, kExitNotConverged);
    } catch (const AssumptionViolated& e) {
      err << "simulate: " << e.what() << "\n";
      return kExitAssumption;
    } catch (const NotStabilizable& e) {
      err << "simulate: " << e.what() << "\n";
      return kExitAssumption;
    } catch (const Error& e) {
      err << "simulate: " << e.what() << "\n";
      return kExitIoError;
    }
  }
  return exit_code;
}

/// `containment`: simulate plus hull-distance verification; exit 0 iff the
/// final distance is within threshold.
inline int cmd_containment(const std::string& path, const std::string& out_dir = ".",
                           int runs = 1, std::ostream& out = std::cout,
                           std::ostream& err = std::cerr) {
  json root;
  try {
    root = load_json(path);
  } catch (const Error& e) {
    err << "containment: " << e.what() << "\n";
    return kExitIoError;
  }

  int exit_code = kExitOk;
  for (int run = 0; run < runs; ++run) {
    const std::string suffix = runs > 1 ? "_run" + std::to_string(run) : "";
    try {
      const ScenarioBundle bundle =
          scenario_io::parse_scenario(root, static_cast<std::uint64_t>(run));
      const Trajectory traj = integrate(bundle.scenario);
      const RunReport report = summarize(traj, bundle.scenario);
      const ContainmentAnalysis analysis =
          containment_weights(build_laplacian(bundle.scenario.graph));
      const ContainmentReport containment = verify_containment(analysis, traj);

      detail::write_artifacts(bundle, traj, report, out_dir, suffix);
      {
        namespace fs = std::filesystem;
        fs::path p = fs::path(out_dir) / ("containment" + suffix + ".json");
        std::ofstream os(p);
        if (!os) throw Error("cannot open containment report for writing");
        os << output::containment_json(containment).dump(2) << "\n";
      }
      out << output::containment_json(containment).dump(2) << "\n";
      if (!containment.achieved) exit_code = std::max(exit_code, kExitNotConverged);
    } catch (const AssumptionViolated& e) {
      err << "containment: " << e.what() << "\n";
      return kExitAssumption;
    } catch (const SingularL1& e) {
      err << "containment: " << e.what() << "\n";
      return kExitAssumption;
    } catch (const NotStabilizable& e) {
      err << "containment: " << e.what() << "\n";
      return kExitAssumption;
    } catch (const Error& e) {
      err << "containment: " << e.what() << "\n";
      return kExitIoError;
    }
  }
  return exit_code;
}

}  // namespace cli

}  // namespace conlab
