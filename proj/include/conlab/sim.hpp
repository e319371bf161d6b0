#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "conlab/errors.hpp"
#include "conlab/graph.hpp"
#include "conlab/protocols.hpp"
#include "conlab/spectra.hpp"

namespace conlab {

struct IntegratorSettings {
  enum class Method { rk4, rkf45 };
  Method method = Method::rk4;
  double step = 1e-3;  ///< rk4 fixed step
  // rkf45 embedded-pair controls
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double min_step = 1e-12;
  double max_step = 1.0;
};

/// Complete simulation description. State vectors are stacked in internal
/// ordering: [leader states..., follower states..., adaptive weights...].
struct Scenario {
  SystemDynamics sys;
  DirectedGraph graph;
  ProtocolConfig protocol;
  Eigen::VectorXd x0;  ///< stacked initial agent states (no weights)
  double t_end = 10.0;
  IntegratorSettings integrator;
  double sample_interval = 0.01;
  std::uint64_t seed = 0;
  double convergence_threshold = 1e-10;  ///< early-termination error level; 0 disables

  void validate() const {
    protocol.validate(graph.follower_count());
    if (x0.size() != static_cast<Eigen::Index>(graph.node_count()) * sys.n())
      throw DimensionMismatch("Scenario: x0 must stack one n-state per agent");
    if (!(t_end >= 0.0)) throw Error("Scenario: t_end must be nonnegative");
    if (!(sample_interval > 0.0)) throw Error("Scenario: sample_interval must be positive");
    if (integrator.method == IntegratorSettings::Method::rk4 && !(integrator.step > 0.0))
      throw Error("Scenario: rk4 step must be positive");
  }

  bool adaptive() const { return protocol.kind == ProtocolKind::Adaptive; }
};

/// Time-indexed simulation record.
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;   ///< stacked agent states, internal order
  std::vector<Eigen::VectorXd> weights;  ///< adaptive coupling weights per sample
  std::vector<double> error_norm;        ///< ||xi|| (or ||zeta||), 2-norm
  std::vector<double> lyapunov;          ///< V1 per sample (adaptive, exponent 3)
  bool terminated_early = false;
  std::string termination_reason;
  std::vector<std::string> warnings;

  int n = 0;
  int leader_count = 0;
  int follower_count = 0;
};

/// Constants of the Theorem-1 Lyapunov function, derived from the M-matrix
/// analysis: alpha_hat is the smallest value with sqrt(alpha_hat) *
/// lambda0_hat / q_i >= 6 for all i, and alpha adds the max 2 q_i^3 /
/// lambda0_hat^3 margin.
struct LyapunovConstants {
  Eigen::VectorXd q;
  Eigen::MatrixXd G;
  double lambda0_hat = 0.0;
  double alpha_hat = 0.0;
  double alpha = 0.0;

  static LyapunovConstants from_analysis(const MMatrixAnalysis& analysis) {
    LyapunovConstants c;
    c.q = analysis.q;
    c.G = analysis.G;
    c.lambda0_hat = analysis.lambda0_hat;
    if (analysis.q.size() == 0) return c;
    const double qmax = analysis.q.maxCoeff();
    c.alpha_hat = std::pow(6.0 * qmax / c.lambda0_hat, 2);
    c.alpha = c.alpha_hat + 2.0 * std::pow(qmax, 3) / std::pow(c.lambda0_hat, 3);
    return c;
  }
};

/// V1 = sum_i (c_i q_i / 2) * F(xi_i^T Q xi_i) + (lambda0_hat / 24) *
/// sum_i (c_i - alpha)^2, with F(x) = ((1+x)^4 - 1) / 4 the closed-form
/// integral of rho for exponent 3.
inline double lyapunov_value(const LyapunovConstants& constants, const GainDesign& gains,
                             const ConsensusError& err, const Eigen::VectorXd& c,
                             int rho_exponent = 3) {
  if (rho_exponent != 3)
    throw WrongExponent("lyapunov_value: closed form requires rho exponent 3");
  if (c.size() != err.followers || constants.q.size() != err.followers)
    throw DimensionMismatch("lyapunov_value: follower counts disagree");

  const QuadraticForm quad(gains.Q);
  double v = 0.0;
  for (int i = 0; i < err.followers; ++i) {
    const double s = quad(err.segment(i));
    const double integral = (std::pow(1.0 + s, 4) - 1.0) / 4.0;
    v += 0.5 * c(i) * constants.q(i) * integral;
    v += constants.lambda0_hat / 24.0 * (c(i) - constants.alpha) * (c(i) - constants.alpha);
  }
  return v;
}

namespace detail {

/// Precomputed per-run evaluation state for the packed ODE right-hand side.
struct SimContext {
  const Scenario& sc;
  int n, nl, nf, p;
  bool adaptive;
  std::optional<QuadraticForm> quad;

  explicit SimContext(const Scenario& scenario)
      : sc(scenario),
        n(scenario.sys.n()),
        nl(scenario.graph.leader_count()),
        nf(scenario.graph.follower_count()),
        p(scenario.sys.p()),
        adaptive(scenario.adaptive()) {
    if (adaptive && nf > 0) quad.emplace(scenario.protocol.gains.Q);
  }

  Eigen::Index packed_size() const {
    return static_cast<Eigen::Index>(nl + nf) * n + (adaptive ? nf : 0);
  }

  void deriv(double /*t*/, const Eigen::VectorXd& y, Eigen::VectorXd& dy) const {
    const auto x = y.head(static_cast<Eigen::Index>(nl + nf) * n);
    dy.resize(y.size());

    // Leaders run open loop (zero input); followers add B u_i.
    for (int a = 0; a < nl + nf; ++a)
      dy.segment(static_cast<Eigen::Index>(a) * n, n) =
          sc.sys.A * x.segment(static_cast<Eigen::Index>(a) * n, n);

    if (nf == 0) return;
    const ConsensusError err = consensus_error(sc.graph, x);
    if (adaptive) {
      const auto c = y.tail(nf);
      const AdaptiveControl ctl = control_adaptive(sc.protocol, err, c, *quad);
      for (int i = 0; i < nf; ++i)
        dy.segment(static_cast<Eigen::Index>(nl + i) * n, n) +=
            sc.sys.B * ctl.u.segment(static_cast<Eigen::Index>(i) * p, p);
      dy.tail(nf) = ctl.c_dot;
    } else {
      const Eigen::VectorXd u = control_static(sc.protocol, err);
      for (int i = 0; i < nf; ++i)
        dy.segment(static_cast<Eigen::Index>(nl + i) * n, n) +=
            sc.sys.B * u.segment(static_cast<Eigen::Index>(i) * p, p);
    }
  }
};

class RungeKutta4 {
 public:
  template <typename System>
  void do_step(const System& system, Eigen::VectorXd& y, double t, double h) {
    system(t, y, k1_);
    tmp_ = y + 0.5 * h * k1_;
    system(t + 0.5 * h, tmp_, k2_);
    tmp_ = y + 0.5 * h * k2_;
    system(t + 0.5 * h, tmp_, k3_);
    tmp_ = y + h * k3_;
    system(t + h, tmp_, k4_);
    y += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
  }

 private:
  Eigen::VectorXd k1_, k2_, k3_, k4_, tmp_;
};

/// Runge-Kutta-Fehlberg 4(5) embedded pair; advances with the 5th-order
/// solution and controls the step from the 4th/5th difference.
class RungeKuttaFehlberg45 {
 public:
  explicit RungeKuttaFehlberg45(const IntegratorSettings& settings) : s_(settings) {}

  /// Integrates from t_begin to t_end, calling on_step(t, y) after every
  /// accepted step.
  template <typename System, typename StepCallback>
  void integrate_to(const System& system, Eigen::VectorXd& y, double t_begin, double t_end,
                    StepCallback&& on_step) {
    double t = t_begin;
    if (h_ <= 0.0) h_ = std::min(s_.max_step, t_end - t_begin);
    while (t < t_end) {
      const double h = std::min(h_, t_end - t);
      if (h < s_.min_step)
        throw StepUnderflow("rkf45: step size " + std::to_string(h) + " below min_step at t = " +
                            std::to_string(t));

      attempt(system, y, t, h);
      const double err = error_ratio(y);
      if (err <= 1.0) {
        y = y5_;
        t += h;
        on_step(t, y);
        h_ = h * std::clamp(0.9 * std::pow(std::max(err, 1e-16), -0.2), 0.5, 5.0);
        h_ = std::min(h_, s_.max_step);
      } else {
        h_ = h * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
      }
    }
  }

 private:
  template <typename System>
  void attempt(const System& system, const Eigen::VectorXd& y, double t, double h) {
    system(t, y, k1_);
    tmp_ = y + h * (0.25 * k1_);
    system(t + 0.25 * h, tmp_, k2_);
    tmp_ = y + h * ((3.0 / 32.0) * k1_ + (9.0 / 32.0) * k2_);
    system(t + 0.375 * h, tmp_, k3_);
    tmp_ = y + h * ((1932.0 / 2197.0) * k1_ - (7200.0 / 2197.0) * k2_ + (7296.0 / 2197.0) * k3_);
    system(t + (12.0 / 13.0) * h, tmp_, k4_);
    tmp_ = y + h * ((439.0 / 216.0) * k1_ - 8.0 * k2_ + (3680.0 / 513.0) * k3_ -
                    (845.0 / 4104.0) * k4_);
    system(t + h, tmp_, k5_);
    tmp_ = y + h * (-(8.0 / 27.0) * k1_ + 2.0 * k2_ - (3544.0 / 2565.0) * k3_ +
                    (1859.0 / 4104.0) * k4_ - (11.0 / 40.0) * k5_);
    system(t + 0.5 * h, tmp_, k6_);

    y4_ = y + h * ((25.0 / 216.0) * k1_ + (1408.0 / 2565.0) * k3_ + (2197.0 / 4104.0) * k4_ -
                   0.2 * k5_);
    y5_ = y + h * ((16.0 / 135.0) * k1_ + (6656.0 / 12825.0) * k3_ + (28561.0 / 56430.0) * k4_ -
                   (9.0 / 50.0) * k5_ + (2.0 / 55.0) * k6_);
  }

  double error_ratio(const Eigen::VectorXd& y_old) const {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < y_old.size(); ++i) {
      const double scale =
          s_.abs_tol + s_.rel_tol * std::max(std::abs(y_old(i)), std::abs(y5_(i)));
      worst = std::max(worst, std::abs(y5_(i) - y4_(i)) / scale);
    }
    return worst;
  }

  IntegratorSettings s_;
  double h_ = 0.0;  ///< adapted step, persisted across sample intervals
  Eigen::VectorXd k1_, k2_, k3_, k4_, k5_, k6_, tmp_, y4_, y5_;
};

inline void enforce_weight_floor(Eigen::VectorXd& y, int nf) {
  // cdot >= 0 keeps the weights above 1 in exact arithmetic; the projection
  // only corrects roundoff.
  auto c = y.tail(nf);
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = std::max(c(i), 1.0);
}

inline void check_finite(const Eigen::VectorXd& y, double t) {
  if (!y.allFinite())
    throw NonFiniteState("integration produced NaN/Inf at t = " + std::to_string(t));
}

}  // namespace detail

/// Packed right-hand side of the coupled agent/weight dynamics. The state
/// packs [leader states..., follower states..., adaptive weights...].
inline Eigen::VectorXd rhs(const Scenario& scenario, double t, const Eigen::VectorXd& state) {
  detail::SimContext ctx(scenario);
  if (state.size() != ctx.packed_size())
    throw DimensionMismatch("rhs: packed state has wrong size");
  detail::check_finite(state, t);
  Eigen::VectorXd dy;
  ctx.deriv(t, state, dy);
  return dy;
}

/// Integrates a scenario and records samples every sample_interval. Stops
/// early (flagged) when the error norm stays below convergence_threshold for
/// 100 consecutive samples. For adaptive runs with exponent 3 the Theorem-1
/// Lyapunov value is recorded and monitored for monotonicity.
inline Trajectory integrate(const Scenario& scenario) {
  scenario.validate();
  const AssumptionReport assumption = check_assumption(scenario.graph);
  if (!assumption.satisfied) {
    std::string who;
    for (int id : assumption.unreachable) who += " " + std::to_string(id);
    throw AssumptionViolated("integrate: no leader reaches follower(s):" + who);
  }

  detail::SimContext ctx(scenario);
  Trajectory traj;
  traj.n = ctx.n;
  traj.leader_count = ctx.nl;
  traj.follower_count = ctx.nf;

  // Lyapunov monitoring needs the M-matrix constants and the cubic rho.
  bool monitor_v1 = ctx.adaptive && ctx.nf > 0 && scenario.protocol.rho_exponent == 3;
  LyapunovConstants constants;
  if (ctx.adaptive && ctx.nf > 0) {
    if (scenario.protocol.rho_exponent != 3)
      traj.warnings.push_back("lyapunov monitor disabled: rho exponent is not 3");
    else
      constants = LyapunovConstants::from_analysis(
          analyze_m_matrix(build_laplacian(scenario.graph)));
  }

  Eigen::VectorXd y(ctx.packed_size());
  y.head(scenario.x0.size()) = scenario.x0;
  if (ctx.adaptive && ctx.nf > 0) y.tail(ctx.nf) = scenario.protocol.c_init;

  const auto system = [&ctx](double t, const Eigen::VectorXd& state, Eigen::VectorXd& dy) {
    ctx.deriv(t, state, dy);
  };

  double v1_prev = 0.0;
  double v1_tol_scale = 1.0;
  int quiet_samples = 0;

  const auto record = [&](double t) {
    traj.times.push_back(t);
    traj.states.push_back(y.head(static_cast<Eigen::Index>(ctx.nl + ctx.nf) * ctx.n));
    const ConsensusError err = consensus_error(scenario.graph, traj.states.back());
    traj.error_norm.push_back(err.xi.norm());
    if (ctx.adaptive && ctx.nf > 0) {
      traj.weights.push_back(y.tail(ctx.nf));
      if (monitor_v1) {
        const double v1 = lyapunov_value(constants, scenario.protocol.gains, err,
                                         traj.weights.back(), scenario.protocol.rho_exponent);
        if (traj.lyapunov.empty()) {
          v1_tol_scale = std::max(1.0, v1);
        } else {
          const double dt = t - traj.times[traj.times.size() - 2];
          const double tol_int = 1e-7 * dt * v1_tol_scale;
          if (v1 > v1_prev + tol_int)
            traj.warnings.push_back("V1 increased by " + std::to_string(v1 - v1_prev) +
                                    " at t = " + std::to_string(t));
        }
        traj.lyapunov.push_back(v1);
        v1_prev = v1;
      }
    }
  };

  record(0.0);
  if (scenario.t_end == 0.0) {
    traj.terminated_early = true;
    traj.termination_reason = "zero horizon";
    return traj;
  }

  detail::RungeKutta4 rk4;
  detail::RungeKuttaFehlberg45 rkf45(scenario.integrator);

  double t = 0.0;
  while (t < scenario.t_end) {
    const double t_next = std::min(t + scenario.sample_interval, scenario.t_end);
    if (scenario.integrator.method == IntegratorSettings::Method::rk4) {
      const int steps =
          std::max<int>(1, static_cast<int>(std::llround((t_next - t) / scenario.integrator.step)));
      const double h = (t_next - t) / steps;
      for (int k = 0; k < steps; ++k) {
        rk4.do_step(system, y, t + k * h, h);
        if (ctx.adaptive && ctx.nf > 0) detail::enforce_weight_floor(y, ctx.nf);
        detail::check_finite(y, t + (k + 1) * h);
      }
    } else {
      rkf45.integrate_to(system, y, t, t_next, [&](double tk, Eigen::VectorXd& yk) {
        if (ctx.adaptive && ctx.nf > 0) detail::enforce_weight_floor(yk, ctx.nf);
        detail::check_finite(yk, tk);
      });
    }
    t = t_next;
    record(t);

    if (traj.error_norm.back() < scenario.convergence_threshold) {
      if (++quiet_samples >= 100) {
        traj.terminated_early = true;
        traj.termination_reason = "error norm below convergence threshold for 100 samples";
        break;
      }
    } else {
      quiet_samples = 0;
    }
  }
  return traj;
}

}  // namespace conlab
