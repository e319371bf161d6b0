#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "conlab/errors.hpp"
#include "conlab/linalg.hpp"
#include "conlab/spectra.hpp"

namespace conlab {

/// Linear agent dynamics xdot = A x + B u.
struct SystemDynamics {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;

  SystemDynamics() = default;
  SystemDynamics(Eigen::MatrixXd a, Eigen::MatrixXd b) : A(std::move(a)), B(std::move(b)) {
    if (A.rows() != A.cols()) throw DimensionMismatch("SystemDynamics: A must be square");
    if (B.rows() != A.rows()) throw DimensionMismatch("SystemDynamics: B must have A.rows() rows");
    if (B.cols() < 1) throw DimensionMismatch("SystemDynamics: B must have at least one column");
  }

  int n() const { return static_cast<int>(A.rows()); }
  int p() const { return static_cast<int>(B.cols()); }
};

/// Synthesized protocol gains. Q is the Riccati solution (the inverse of the
/// certificate matrix P), K = -B^T Q the feedback gain and Gamma = K^T K the
/// adaptive gain. residual is the Frobenius norm of A^T Q + Q A + I - Q B B^T Q.
struct GainDesign {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd K;
  Eigen::MatrixXd Gamma;
  double residual = 0.0;
  std::vector<double> newton_residuals;  ///< per-iterate history (empty for gains_from_P)
};

/// Result of checking a candidate P against A P + P A^T - 2 B B^T < 0, P > 0.
struct CertificateReport {
  double lambda_min_P = 0.0;
  double lambda_max_lmi = 0.0;  ///< lambda_max(A P + P A^T - 2 B B^T)
  bool holds = false;
};

inline double riccati_residual(const SystemDynamics& sys, const Eigen::MatrixXd& Q) {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(sys.n(), sys.n());
  return (sys.A.transpose() * Q + Q * sys.A + id - Q * sys.B * sys.B.transpose() * Q).norm();
}

/// PBH test: (A, B) is stabilizable iff rank [A - lambda I, B] = n for every
/// eigenvalue lambda of A with nonnegative real part.
inline bool check_stabilizable(const SystemDynamics& sys) {
  const int n = sys.n();
  Eigen::EigenSolver<Eigen::MatrixXd> es(sys.A, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw NumericalFailure("check_stabilizable: eigensolver did not converge");
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::complex<double> lambda = es.eigenvalues()(k);
    if (lambda.real() < -1e-9) continue;
    Eigen::MatrixXcd pencil(n, n + sys.p());
    pencil.leftCols(n) = sys.A.cast<std::complex<double>>();
    pencil.leftCols(n).diagonal().array() -= lambda;
    pencil.rightCols(sys.p()) = sys.B.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pencil);
    const Eigen::VectorXd sv = svd.singularValues();
    const double threshold = 1e-9 * sv(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > threshold) ++rank;
    if (rank < n) return false;
  }
  return true;
}

namespace detail {

/// Stabilizing gain from the shifted-Gramian construction: W solves
/// (A + sigma I) W + W (A + sigma I)^T = 2 B B^T and K0 = -B^T W^{-1} places
/// the closed-loop spectrum left of -sigma.
inline bool bass_gain(const SystemDynamics& sys, double sigma, Eigen::MatrixXd& K0) {
  const Eigen::MatrixXd M = sys.A + sigma * Eigen::MatrixXd::Identity(sys.n(), sys.n());
  Eigen::MatrixXd W;
  try {
    W = solve_lyapunov(M.transpose(), -2.0 * sys.B * sys.B.transpose());
  } catch (const NumericalFailure&) {
    return false;
  }
  W = 0.5 * (W + W.transpose()).eval();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(W);
  if (!lu.isInvertible()) return false;
  K0 = -(lu.solve(sys.B)).transpose();
  return hurwitz(sys.A + sys.B * K0, 0.0);
}

/// Stabilizing solution seed from the stable invariant subspace of the
/// Hamiltonian [[A, -BB^T], [-I, -A^T]].
inline bool hamiltonian_gain(const SystemDynamics& sys, Eigen::MatrixXd& K0) {
  const int n = sys.n();
  Eigen::MatrixXd H(2 * n, 2 * n);
  H.topLeftCorner(n, n) = sys.A;
  H.topRightCorner(n, n) = -sys.B * sys.B.transpose();
  H.bottomLeftCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
  H.bottomRightCorner(n, n) = -sys.A.transpose();

  Eigen::EigenSolver<Eigen::MatrixXd> es(H);
  if (es.info() != Eigen::Success) return false;

  Eigen::MatrixXcd basis(2 * n, n);
  int count = 0;
  for (Eigen::Index k = 0; k < 2 * n && count < n; ++k) {
    if (es.eigenvalues()(k).real() < 0.0) basis.col(count++) = es.eigenvectors().col(k);
  }
  if (count != n) return false;

  // Q0 = Y X^{-1} from the subspace basis [X; Y].
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(basis.topRows(n).transpose());
  if (!lu.isInvertible()) return false;
  Eigen::MatrixXd Q0 = lu.solve(basis.bottomRows(n).transpose()).transpose().real();
  Q0 = 0.5 * (Q0 + Q0.transpose()).eval();
  K0 = -sys.B.transpose() * Q0;
  return hurwitz(sys.A + sys.B * K0, 0.0);
}

inline Eigen::MatrixXd initial_stabilizing_gain(const SystemDynamics& sys) {
  if (hurwitz(sys.A, 0.0)) return Eigen::MatrixXd::Zero(sys.p(), sys.n());

  Eigen::MatrixXd K0;
  const double max_re = spectral_abscissa(sys.A);
  // Documented default shift; escalated to a norm bound when the Gramian
  // route fails (strongly stable modes can defeat the small shift).
  const double sigmas[] = {std::max(0.0, max_re) + 1.0, sys.A.norm() + 1.0};
  for (double sigma : sigmas)
    if (bass_gain(sys, sigma, K0)) return K0;
  if (hamiltonian_gain(sys, K0)) return K0;
  throw NumericalFailure("solve_care: failed to construct an initial stabilizing gain");
}

}  // namespace detail

/// Solves A^T Q + Q A + I - Q B B^T Q = 0 for the stabilizing Q > 0 by
/// Newton-Kleinman iteration: each step solves the Lyapunov equation
/// (A + B K_k)^T Q + Q (A + B K_k) + I + K_k^T K_k = 0 and updates
/// K_{k+1} = -B^T Q. Convergence is monotone from a stabilizing start.
inline GainDesign solve_care(const SystemDynamics& sys, double tol = 1e-10, int max_iter = 100) {
  if (!check_stabilizable(sys)) throw NotStabilizable("solve_care: (A, B) is not stabilizable");

  const int n = sys.n();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);

  GainDesign design;
  Eigen::MatrixXd K = detail::initial_stabilizing_gain(sys);
  Eigen::MatrixXd best_Q, best_K;
  double best_res = std::numeric_limits<double>::infinity();
  double prev_res = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::MatrixXd closed = sys.A + sys.B * K;
    Eigen::MatrixXd Q = solve_lyapunov(closed, id + K.transpose() * K);
    Q = 0.5 * (Q + Q.transpose()).eval();
    const Eigen::MatrixXd K_next = -sys.B.transpose() * Q;
    const double residual = riccati_residual(sys, Q);
    // A non-improving iterate after reaching the requirement marks the
    // roundoff floor; keep the best iterate and stop.
    if (residual >= prev_res && prev_res <= 1e-8) break;
    design.newton_residuals.push_back(residual);
    K = K_next;
    prev_res = residual;
    if (residual < best_res) {
      best_res = residual;
      best_Q = Q;
      best_K = K_next;
    }
    if (residual <= tol) break;
  }
  if (!(best_res <= 1e-8)) {
    std::string history;
    for (double r : design.newton_residuals) history += " " + std::to_string(r);
    throw NewtonDivergence("solve_care: residual stagnated at " + std::to_string(best_res) +
                           "; iterate history:" + history);
  }

  design.Q = best_Q;
  design.K = best_K;
  design.Gamma = best_K.transpose() * best_K;  // equals Q B B^T Q exactly
  design.residual = best_res;
  return design;
}

/// Evaluates the certificate A P + P A^T - 2 B B^T < 0, P > 0 for a candidate
/// P. `lambda_max_threshold` is the strictness bound on the LMI eigenvalue
/// (default -1e-6; relax toward 0 for matrices published with few decimals).
inline CertificateReport verify_lmi_certificate(const SystemDynamics& sys,
                                                const Eigen::MatrixXd& P,
                                                double lambda_max_threshold = -1e-6) {
  const int n = sys.n();
  if (P.rows() != n || P.cols() != n)
    throw DimensionMismatch("verify_lmi_certificate: P must be n x n");
  const Eigen::MatrixXd Ps = 0.5 * (P + P.transpose());

  CertificateReport report;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(Ps);
  report.lambda_min_P = ep.eigenvalues().minCoeff();

  Eigen::MatrixXd lmi = sys.A * Ps + Ps * sys.A.transpose() - 2.0 * sys.B * sys.B.transpose();
  lmi = 0.5 * (lmi + lmi.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> el(lmi);
  report.lambda_max_lmi = el.eigenvalues().maxCoeff();

  report.holds = report.lambda_min_P > 0.0 && report.lambda_max_lmi < lambda_max_threshold;
  return report;
}

/// Gains from a user-supplied P > 0 (e.g. an external LMI solution):
/// K = -B^T P^{-1}, Gamma = K^T K, Q = P^{-1}. The residual field reports how
/// far Q is from the Riccati solution; it is informational for LMI-only P.
inline GainDesign gains_from_P(const SystemDynamics& sys, const Eigen::MatrixXd& P) {
  const int n = sys.n();
  if (P.rows() != n || P.cols() != n) throw DimensionMismatch("gains_from_P: P must be n x n");
  const Eigen::MatrixXd Ps = 0.5 * (P + P.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(Ps);
  if (llt.info() != Eigen::Success)
    throw SingularP("gains_from_P: P is not positive definite");

  GainDesign design;
  Eigen::MatrixXd Pinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  Pinv = 0.5 * (Pinv + Pinv.transpose()).eval();
  design.Q = Pinv;
  design.K = -sys.B.transpose() * Pinv;
  design.Gamma = design.K.transpose() * design.K;
  design.residual = riccati_residual(sys, design.Q);
  return design;
}

}  // namespace conlab
