#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "conlab/errors.hpp"
#include "conlab/sim.hpp"
#include "conlab/spectra.hpp"

namespace conlab {

struct WeightSummary {
  int follower_id = 0;  ///< user node id
  double c_start = 0.0;
  double c_end = 0.0;
  bool converged = false;  ///< |c(t_end) - c(0.9 t_end)| <= 1e-3
};

/// Post-run metrics for one simulation.
struct RunReport {
  std::uint64_t digest = 0;         ///< full scenario digest
  std::uint64_t family_digest = 0;  ///< dynamics + graph + initial states
  bool assumption_ok = false;
  std::string protocol_kind;
  double static_c = std::numeric_limits<double>::quiet_NaN();
  double care_residual = std::numeric_limits<double>::quiet_NaN();
  double hurwitz_margin = std::numeric_limits<double>::quiet_NaN();  ///< of A + BK
  double lemma3_threshold = std::numeric_limits<double>::quiet_NaN();  ///< 1 / min Re(lambda_i)
  double t_end = 0.0;
  double final_error = 0.0;
  bool convergence_achieved = false;  ///< final error norm <= 1e-3
  /// (threshold, first time the error drops below it and stays below);
  /// time is NaN when the run never settles under the threshold.
  std::vector<std::pair<double, double>> time_to_threshold;
  std::vector<WeightSummary> weights;
  bool weights_converged = false;
  double lyapunov_max_increment = 0.0;  ///< largest positive V1 step observed
  bool terminated_early = false;
  std::string termination_reason;
  std::vector<std::string> warnings;
};

namespace detail {

inline void hash_doubles(std::uint64_t& h, const double* data, Eigen::Index count) {
  char buf[32];
  for (Eigen::Index i = 0; i < count; ++i) {
    const int len = std::snprintf(buf, sizeof(buf), "%.17g,", data[i]);
    h = fnv1a(std::string_view(buf, static_cast<size_t>(len)), h);
  }
}

inline std::uint64_t family_digest(const Scenario& sc) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  hash_doubles(h, sc.sys.A.data(), sc.sys.A.size());
  hash_doubles(h, sc.sys.B.data(), sc.sys.B.size());
  std::string topo = std::to_string(sc.graph.node_count()) + ";";
  for (int l : sc.graph.leaders()) topo += std::to_string(l) + ",";
  h = fnv1a(topo, h);
  for (const Edge& e : sc.graph.edges()) {
    h = fnv1a(std::to_string(e.source) + ">" + std::to_string(e.target) + ":", h);
    hash_doubles(h, &e.weight, 1);
  }
  hash_doubles(h, sc.x0.data(), sc.x0.size());
  return h;
}

inline std::uint64_t scenario_digest(const Scenario& sc) {
  std::uint64_t h = family_digest(sc);
  h = fnv1a(sc.protocol.kind == ProtocolKind::Static ? "static" : "adaptive", h);
  if (sc.protocol.kind == ProtocolKind::Static) {
    hash_doubles(h, &sc.protocol.c, 1);
  } else {
    hash_doubles(h, sc.protocol.c_init.data(), sc.protocol.c_init.size());
  }
  h = fnv1a(std::to_string(sc.protocol.rho_exponent), h);
  h = fnv1a(sc.integrator.method == IntegratorSettings::Method::rk4 ? "rk4" : "rkf45", h);
  const double nums[] = {sc.t_end, sc.integrator.step, sc.integrator.rel_tol,
                         sc.integrator.abs_tol, sc.sample_interval};
  hash_doubles(h, nums, 5);
  h = fnv1a(std::to_string(sc.seed), h);
  return h;
}

}  // namespace detail

/// Builds the post-run report: convergence times, weight convergence, and the
/// Lyapunov monitor summary.
inline RunReport summarize(const Trajectory& traj, const Scenario& scenario) {
  RunReport report;
  report.digest = detail::scenario_digest(scenario);
  report.family_digest = detail::family_digest(scenario);
  report.protocol_kind = scenario.adaptive() ? "adaptive" : "static";
  if (!scenario.adaptive()) report.static_c = scenario.protocol.c;
  report.care_residual = scenario.protocol.gains.residual;
  if (scenario.protocol.gains.K.size() > 0)
    report.hurwitz_margin =
        -spectral_abscissa(scenario.sys.A + scenario.sys.B * scenario.protocol.gains.K);
  report.t_end = scenario.t_end;
  report.terminated_early = traj.terminated_early;
  report.termination_reason = traj.termination_reason;
  report.warnings = traj.warnings;

  const AssumptionReport assumption = check_assumption(scenario.graph);
  report.assumption_ok = assumption.satisfied;
  if (assumption.satisfied && scenario.graph.follower_count() > 0) {
    const MMatrixAnalysis analysis = analyze_m_matrix(build_laplacian(scenario.graph));
    report.lemma3_threshold = 1.0 / analysis.min_re_lambda;
  }

  report.final_error = traj.error_norm.empty() ? 0.0 : traj.error_norm.back();
  report.convergence_achieved = report.final_error <= 1e-3;

  // First sample below the threshold that stays below for the remainder.
  for (int exp10 = 1; exp10 <= 6; ++exp10) {
    const double threshold = std::pow(10.0, -exp10);
    double when = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index k = static_cast<Eigen::Index>(traj.error_norm.size()); k-- > 0;) {
      if (traj.error_norm[static_cast<size_t>(k)] < threshold)
        when = traj.times[static_cast<size_t>(k)];
      else
        break;
    }
    report.time_to_threshold.emplace_back(threshold, when);
  }

  if (scenario.adaptive() && !traj.weights.empty()) {
    // c at the 90%-horizon sample anchors the convergence criterion.
    size_t k90 = 0;
    for (size_t k = 0; k < traj.times.size(); ++k)
      if (traj.times[k] <= 0.9 * scenario.t_end) k90 = k;
    report.weights_converged = true;
    const Eigen::VectorXd& c_last = traj.weights.back();
    const Eigen::VectorXd& c_90 = traj.weights[k90];
    for (int i = 0; i < scenario.graph.follower_count(); ++i) {
      WeightSummary w;
      w.follower_id = scenario.graph.followers()[static_cast<size_t>(i)];
      w.c_start = traj.weights.front()(i);
      w.c_end = c_last(i);
      w.converged = std::abs(c_last(i) - c_90(i)) <= 1e-3;
      report.weights_converged = report.weights_converged && w.converged;
      report.weights.push_back(w);
    }
  }

  for (size_t k = 1; k < traj.lyapunov.size(); ++k)
    report.lyapunov_max_increment =
        std::max(report.lyapunov_max_increment, traj.lyapunov[k] - traj.lyapunov[k - 1]);
  return report;
}

struct ComparisonRow {
  std::string kind;
  double coupling = std::numeric_limits<double>::quiet_NaN();  ///< c or max final c_i
  double lemma3_threshold = std::numeric_limits<double>::quiet_NaN();
  double time_to_1e3 = std::numeric_limits<double>::quiet_NaN();
  double final_error = 0.0;
  bool converged = false;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;

  std::string to_text() const {
    std::ostringstream os;
    os << "protocol   coupling     lemma3_c     t(err<1e-3)  final_error  converged\n";
    for (const ComparisonRow& r : rows) {
      char line[160];
      std::snprintf(line, sizeof(line), "%-10s %-12.6g %-12.6g %-12.6g %-12.6g %s\n",
                    r.kind.c_str(), r.coupling, r.lemma3_threshold, r.time_to_1e3, r.final_error,
                    r.converged ? "yes" : "no");
      os << line;
    }
    return os.str();
  }
};

/// Tabulates runs of one scenario family (same dynamics, graph and initial
/// states) against the Lemma-3 coupling threshold.
inline ComparisonTable compare_static_adaptive(const std::vector<RunReport>& reports) {
  if (reports.size() < 2)
    throw IncompatibleScenarios("compare_static_adaptive: need at least two reports");
  for (const RunReport& r : reports)
    if (r.family_digest != reports.front().family_digest)
      throw IncompatibleScenarios("compare_static_adaptive: reports from different scenarios");

  ComparisonTable table;
  for (const RunReport& r : reports) {
    ComparisonRow row;
    row.kind = r.protocol_kind;
    row.lemma3_threshold = r.lemma3_threshold;
    row.final_error = r.final_error;
    row.converged = r.convergence_achieved;
    if (r.protocol_kind == "static") {
      row.coupling = r.static_c;
    } else {
      double cmax = std::numeric_limits<double>::quiet_NaN();
      for (const WeightSummary& w : r.weights)
        cmax = std::isnan(cmax) ? w.c_end : std::max(cmax, w.c_end);
      row.coupling = cmax;
    }
    for (const auto& [threshold, when] : r.time_to_threshold)
      if (threshold == 1e-3) row.time_to_1e3 = when;
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace conlab
