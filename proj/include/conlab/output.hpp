#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "conlab/analysis.hpp"
#include "conlab/containment.hpp"
#include "conlab/errors.hpp"
#include "conlab/scenario.hpp"
#include "conlab/sim.hpp"
#include "conlab/spectra.hpp"

namespace conlab {

namespace output {

using nlohmann::json;

inline std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Trajectory CSV: t, x_<agent>_<component>..., c_<follower>..., err_norm
/// and, for monitored adaptive runs, V1. Agents appear in user node-id order;
/// floats carry 17 significant digits so repeated runs are byte-identical.
inline void write_csv(std::ostream& os, const Trajectory& traj, const Scenario& sc) {
  const int n = traj.n;
  os << "t";
  for (int uid = 0; uid < sc.graph.node_count(); ++uid)
    for (int k = 0; k < n; ++k) os << ",x_" << uid << "_" << k;
  const bool with_weights = !traj.weights.empty();
  if (with_weights)
    for (int uid : sc.graph.followers()) os << ",c_" << uid;
  os << ",err_norm";
  const bool with_v1 = !traj.lyapunov.empty();
  if (with_v1) os << ",V1";
  os << "\n";

  for (size_t s = 0; s < traj.times.size(); ++s) {
    os << fmt17(traj.times[s]);
    for (int uid = 0; uid < sc.graph.node_count(); ++uid) {
      const Eigen::Index base = static_cast<Eigen::Index>(sc.graph.internal_index(uid)) * n;
      for (int k = 0; k < n; ++k) os << "," << fmt17(traj.states[s](base + k));
    }
    if (with_weights)
      for (int i = 0; i < traj.follower_count; ++i) os << "," << fmt17(traj.weights[s](i));
    os << "," << fmt17(traj.error_norm[s]);
    if (with_v1) os << "," << fmt17(traj.lyapunov[s]);
    os << "\n";
  }
}

inline void write_csv_file(const std::string& path, const Trajectory& traj, const Scenario& sc) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_csv(os, traj, sc);
}

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

namespace svg_detail {

inline const char* color(size_t i) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return palette[i % 10];
}

}  // namespace svg_detail

/// Minimal native SVG time-series plot: autoscaled linear axes, one polyline
/// per series, legend down the right edge.
inline void write_svg(std::ostream& os, const std::string& title, const std::string& ylabel,
                      const std::vector<Series>& series) {
  const double width = 860, height = 520;
  const double ml = 70, mr = 150, mt = 40, mb = 50;

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const Series& s : series)
    for (size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      if (first) {
        xmin = xmax = s.x[k];
        ymin = ymax = s.y[k];
        first = false;
      }
      xmin = std::min(xmin, s.x[k]);
      xmax = std::max(xmax, s.x[k]);
      ymin = std::min(ymin, s.y[k]);
      ymax = std::max(ymax, s.y[k]);
    }
  if (xmax - xmin < 1e-300) xmax = xmin + 1;
  if (ymax - ymin < 1e-300) {
    ymax += 0.5;
    ymin -= 0.5;
  }
  const double px = (width - ml - mr) / (xmax - xmin);
  const double py = (height - mt - mb) / (ymax - ymin);
  const auto X = [&](double x) { return ml + (x - xmin) * px; };
  const auto Y = [&](double y) { return height - mb - (y - ymin) * py; };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
     << title << "</text>\n";

  // axes + ticks
  os << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\""
     << height - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
     << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = xmin + k * (xmax - xmin) / 5;
    const double yv = ymin + k * (ymax - ymin) / 5;
    char lbl[32];
    os << "<line x1=\"" << X(xv) << "\" y1=\"" << height - mb << "\" x2=\"" << X(xv) << "\" y2=\""
       << height - mb + 5 << "\" stroke=\"black\"/>\n";
    std::snprintf(lbl, sizeof(lbl), "%.4g", xv);
    os << "<text x=\"" << X(xv) << "\" y=\"" << height - mb + 20
       << "\" text-anchor=\"middle\" font-size=\"11\">" << lbl << "</text>\n";
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << Y(yv) << "\" x2=\"" << ml << "\" y2=\"" << Y(yv)
       << "\" stroke=\"black\"/>\n";
    std::snprintf(lbl, sizeof(lbl), "%.4g", yv);
    os << "<text x=\"" << ml - 8 << "\" y=\"" << Y(yv) + 4
       << "\" text-anchor=\"end\" font-size=\"11\">" << lbl << "</text>\n";
  }
  os << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
     << "\" text-anchor=\"middle\" font-size=\"13\">t</text>\n";
  os << "<text x=\"18\" y=\"" << (mt + height - mb) / 2
     << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
     << (mt + height - mb) / 2 << ")\">" << ylabel << "</text>\n";

  for (size_t i = 0; i < series.size(); ++i) {
    os << "<polyline fill=\"none\" stroke=\"" << svg_detail::color(i)
       << "\" stroke-width=\"1.3\" points=\"";
    for (size_t k = 0; k < series[i].x.size(); ++k) {
      if (!std::isfinite(series[i].y[k])) continue;
      char pt[64];
      std::snprintf(pt, sizeof(pt), "%.2f,%.2f ", X(series[i].x[k]), Y(series[i].y[k]));
      os << pt;
    }
    os << "\"/>\n";
    if (i < 24) {  // legend space is finite
      const double ly = mt + 16.0 * static_cast<double>(i);
      os << "<line x1=\"" << width - mr + 10 << "\" y1=\"" << ly << "\" x2=\"" << width - mr + 30
         << "\" y2=\"" << ly << "\" stroke=\"" << svg_detail::color(i)
         << "\" stroke-width=\"2\"/>\n";
      os << "<text x=\"" << width - mr + 36 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">"
         << series[i].label << "</text>\n";
    }
  }
  os << "</svg>\n";
}

inline void write_svg_file(const std::string& path, const std::string& title,
                           const std::string& ylabel, const std::vector<Series>& series) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_svg(os, title, ylabel, series);
}

/// Per-follower ||xi_i(t)|| series (the shape of the paper-style error plot).
inline std::vector<Series> error_series(const Trajectory& traj, const Scenario& sc) {
  std::vector<Series> series(static_cast<size_t>(traj.follower_count));
  for (int i = 0; i < traj.follower_count; ++i)
    series[static_cast<size_t>(i)].label =
        "follower " + std::to_string(sc.graph.followers()[static_cast<size_t>(i)]);
  for (size_t s = 0; s < traj.times.size(); ++s) {
    const ConsensusError err = consensus_error(sc.graph, traj.states[s]);
    for (int i = 0; i < traj.follower_count; ++i) {
      series[static_cast<size_t>(i)].x.push_back(traj.times[s]);
      series[static_cast<size_t>(i)].y.push_back(err.segment(i).norm());
    }
  }
  return series;
}

inline std::vector<Series> weight_series(const Trajectory& traj, const Scenario& sc) {
  std::vector<Series> series(static_cast<size_t>(traj.follower_count));
  for (int i = 0; i < traj.follower_count; ++i)
    series[static_cast<size_t>(i)].label =
        "c_" + std::to_string(sc.graph.followers()[static_cast<size_t>(i)]);
  for (size_t s = 0; s < traj.weights.size(); ++s)
    for (int i = 0; i < traj.follower_count; ++i) {
      series[static_cast<size_t>(i)].x.push_back(traj.times[s]);
      series[static_cast<size_t>(i)].y.push_back(traj.weights[s](i));
    }
  return series;
}

inline std::vector<Series> state_series(const Trajectory& traj, const Scenario& sc) {
  std::vector<Series> series;
  const int n = traj.n;
  for (int uid = 0; uid < sc.graph.node_count(); ++uid) {
    const Eigen::Index base = static_cast<Eigen::Index>(sc.graph.internal_index(uid)) * n;
    for (int k = 0; k < n; ++k) {
      Series s;
      s.label = "x_" + std::to_string(uid) + "_" + std::to_string(k);
      for (size_t t = 0; t < traj.times.size(); ++t) {
        s.x.push_back(traj.times[t]);
        s.y.push_back(traj.states[t](base + k));
      }
      series.push_back(std::move(s));
    }
  }
  return series;
}

inline json complex_to_json(const Eigen::VectorXcd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out.push_back(json::array({v(i).real(), v(i).imag()}));
  return out;
}

inline json assumption_json(const AssumptionReport& report) {
  json j;
  j["satisfied"] = report.satisfied;
  j["unreachable"] = report.unreachable;
  j["follower_reached"] = report.follower_reached;
  return j;
}

inline json analysis_json(const MMatrixAnalysis& analysis) {
  json j;
  j["eigenvalues_L1"] = complex_to_json(analysis.eigenvalues_L1);
  j["min_re_lambda"] = analysis.min_re_lambda;
  json q = json::array();
  for (Eigen::Index i = 0; i < analysis.q.size(); ++i) q.push_back(analysis.q(i));
  j["q"] = q;
  j["G"] = scenario_io::matrix_to_json(analysis.G);
  j["lambda0_hat"] = analysis.lambda0_hat;
  return j;
}

inline json gain_json(const SystemDynamics& sys, const GainDesign& design) {
  json j;
  j["Q"] = scenario_io::matrix_to_json(design.Q);
  j["K"] = scenario_io::matrix_to_json(design.K);
  j["Gamma"] = scenario_io::matrix_to_json(design.Gamma);
  j["residual"] = design.residual;
  j["hurwitz_margin"] = -spectral_abscissa(sys.A + sys.B * design.K);
  j["newton_residuals"] = design.newton_residuals;
  return j;
}

inline json report_json(const RunReport& report) {
  json j;
  char digest[24];
  std::snprintf(digest, sizeof(digest), "%016llx",
                static_cast<unsigned long long>(report.digest));
  j["scenario_digest"] = digest;
  j["assumption_ok"] = report.assumption_ok;
  j["protocol"] = report.protocol_kind;
  if (!std::isnan(report.static_c)) j["static_c"] = report.static_c;
  j["care_residual"] = report.care_residual;
  j["hurwitz_margin"] = report.hurwitz_margin;
  j["lemma3_threshold"] = report.lemma3_threshold;
  j["t_end"] = report.t_end;
  j["final_error"] = report.final_error;
  j["convergence"]["achieved"] = report.convergence_achieved;
  json ttt = json::array();
  for (const auto& [threshold, when] : report.time_to_threshold) {
    json row;
    row["threshold"] = threshold;
    row["time"] = std::isnan(when) ? json() : json(when);
    ttt.push_back(row);
  }
  j["convergence"]["time_to_threshold"] = ttt;
  if (!report.weights.empty()) {
    json ws = json::array();
    for (const WeightSummary& w : report.weights) {
      json row;
      row["follower"] = w.follower_id;
      row["c_start"] = w.c_start;
      row["c_end"] = w.c_end;
      row["converged"] = w.converged;
      ws.push_back(row);
    }
    j["weights"] = ws;
    j["weights_converged"] = report.weights_converged;
  }
  j["lyapunov_max_increment"] = report.lyapunov_max_increment;
  j["terminated_early"] = report.terminated_early;
  if (report.terminated_early) j["termination_reason"] = report.termination_reason;
  j["warnings"] = report.warnings;
  return j;
}

inline json containment_json(const ContainmentReport& report) {
  json j;
  j["final_distance"] = report.final_distance;
  j["achieved"] = report.achieved;
  j["threshold"] = report.threshold;
  j["per_sample_distance"] = report.per_sample_distance;
  return j;
}

}  // namespace output

}  // namespace conlab
