#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "conlab/design.hpp"
#include "conlab/errors.hpp"
#include "conlab/graph.hpp"

namespace conlab {

enum class ProtocolKind { Static, Adaptive };

/// Protocol parameters. Static: u_i = c K xi_i with one common coupling
/// weight c > 0. Adaptive: u_i = c_i rho(xi_i^T Q xi_i) K xi_i with
/// per-follower weights c_i(0) >= 1 driven by cdot_i = xi_i^T Gamma xi_i.
struct ProtocolConfig {
  ProtocolKind kind = ProtocolKind::Adaptive;
  double c = 1.0;          ///< static coupling weight
  Eigen::VectorXd c_init;  ///< adaptive initial weights, one per follower
  GainDesign gains;
  int rho_exponent = 3;

  void validate(int follower_count) const {
    if (rho_exponent < 1) throw Error("ProtocolConfig: rho_exponent must be a positive integer");
    if (kind == ProtocolKind::Static) {
      if (!(c > 0.0)) throw Error("ProtocolConfig: static coupling weight c must be > 0");
    } else {
      if (c_init.size() != follower_count)
        throw DimensionMismatch("ProtocolConfig: c_init needs one entry per follower");
      for (Eigen::Index i = 0; i < c_init.size(); ++i)
        if (!(c_init(i) >= 1.0))
          throw Error("ProtocolConfig: adaptive initial weights must satisfy c_i(0) >= 1");
    }
  }
};

/// Stacked consensus error: xi_i = sum_j a_ij (x_i - x_j) per follower, n
/// entries each. For multi-leader graphs the same vector is the containment
/// error zeta.
struct ConsensusError {
  Eigen::VectorXd xi;
  int n = 0;
  int followers = 0;

  auto segment(int i) const { return xi.segment(static_cast<Eigen::Index>(i) * n, n); }
};

/// Neighborhood-sum evaluation of the consensus error from a stacked state
/// vector in internal (leaders-first) ordering.
inline ConsensusError consensus_error(const DirectedGraph& g, const Eigen::VectorXd& x) {
  if (x.size() % g.node_count() != 0)
    throw DimensionMismatch("consensus_error: state size is not a multiple of node count");
  const int n = static_cast<int>(x.size()) / g.node_count();
  const int nl = g.leader_count();

  ConsensusError err;
  err.n = n;
  err.followers = g.follower_count();
  err.xi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(err.followers) * n);
  for (const Edge& e : g.edges()) {
    const int i = g.internal_index(e.target);  // always a follower
    const int j = g.internal_index(e.source);
    err.xi.segment(static_cast<Eigen::Index>(i - nl) * n, n) +=
        e.weight * (x.segment(static_cast<Eigen::Index>(i) * n, n) -
                    x.segment(static_cast<Eigen::Index>(j) * n, n));
  }
  return err;
}

/// Gain amplifier rho(s) = (1 + s)^exponent; smooth, increasing, rho(0) = 1.
inline double rho(double s, int exponent) {
  if (s < 0.0) throw NegativeArgument("rho: argument must be nonnegative, got " + std::to_string(s));
  if (exponent < 1) throw Error("rho: exponent must be a positive integer");
  return std::pow(1.0 + s, exponent);
}

/// Quadratic form v^T Q v evaluated as ||U v||^2 through the Cholesky factor
/// Q = U^T U, so the result stays nonnegative under roundoff.
class QuadraticForm {
 public:
  explicit QuadraticForm(const Eigen::MatrixXd& Q) {
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (Q + Q.transpose()));
    if (llt.info() != Eigen::Success)
      throw NumericalFailure("QuadraticForm: matrix is not positive definite");
    factor_ = llt.matrixU();
  }

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& v) const {
    return (factor_ * v).squaredNorm();
  }

 private:
  Eigen::MatrixXd factor_;
};

/// Static protocol inputs, stacked p entries per follower.
inline Eigen::VectorXd control_static(const ProtocolConfig& cfg, const ConsensusError& err) {
  if (cfg.kind != ProtocolKind::Static)
    throw WrongKind("control_static: protocol kind is not static");
  const int p = static_cast<int>(cfg.gains.K.rows());
  Eigen::VectorXd u(static_cast<Eigen::Index>(err.followers) * p);
  for (int i = 0; i < err.followers; ++i)
    u.segment(static_cast<Eigen::Index>(i) * p, p) = cfg.c * (cfg.gains.K * err.segment(i));
  return u;
}

struct AdaptiveControl {
  Eigen::VectorXd u;      ///< stacked inputs, p per follower
  Eigen::VectorXd c_dot;  ///< weight rates, xi_i^T Gamma xi_i = ||K xi_i||^2 >= 0
};

inline AdaptiveControl control_adaptive(const ProtocolConfig& cfg, const ConsensusError& err,
                                        const Eigen::VectorXd& c, const QuadraticForm& quad) {
  if (cfg.kind != ProtocolKind::Adaptive)
    throw WrongKind("control_adaptive: protocol kind is not adaptive");
  if (c.size() != err.followers)
    throw DimensionMismatch("control_adaptive: one coupling weight per follower required");
  const int p = static_cast<int>(cfg.gains.K.rows());

  AdaptiveControl out;
  out.u.resize(static_cast<Eigen::Index>(err.followers) * p);
  out.c_dot.resize(err.followers);
  for (int i = 0; i < err.followers; ++i) {
    if (!(c(i) >= 1.0 - 1e-9))
      throw WeightBelowOne("control_adaptive: coupling weight " + std::to_string(c(i)) +
                           " below 1 at follower " + std::to_string(i));
    const Eigen::VectorXd k_xi = cfg.gains.K * err.segment(i);
    out.u.segment(static_cast<Eigen::Index>(i) * p, p) =
        c(i) * rho(quad(err.segment(i)), cfg.rho_exponent) * k_xi;
    out.c_dot(i) = k_xi.squaredNorm();
  }
  return out;
}

inline AdaptiveControl control_adaptive(const ProtocolConfig& cfg, const ConsensusError& err,
                                        const Eigen::VectorXd& c) {
  return control_adaptive(cfg, err, c, QuadraticForm(cfg.gains.Q));
}

/// Per-follower quadratic forms xi_i^T Q xi_i (the rho arguments).
inline Eigen::VectorXd per_follower_quadratic(const GainDesign& gains, const ConsensusError& err) {
  const QuadraticForm quad(gains.Q);
  Eigen::VectorXd s(err.followers);
  for (int i = 0; i < err.followers; ++i) s(i) = quad(err.segment(i));
  return s;
}

}  // namespace conlab
