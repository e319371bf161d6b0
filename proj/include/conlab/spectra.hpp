#pragma once

#include <Eigen/Dense>

#include <limits>

#include "conlab/errors.hpp"
#include "conlab/graph.hpp"

namespace conlab {

/// Spectral / M-matrix analysis products of the follower Laplacian block L1.
///
/// q solves L1^T q = 1 and G = diag(q); when the reachability assumption
/// holds, q > 0 and G*L1 + L1^T*G is positive definite with smallest
/// eigenvalue lambda0_hat.
struct MMatrixAnalysis {
  Eigen::VectorXcd eigenvalues_L1;
  double min_re_lambda = std::numeric_limits<double>::infinity();
  Eigen::VectorXd q;
  Eigen::MatrixXd G;
  double lambda0_hat = std::numeric_limits<double>::infinity();
};

inline MMatrixAnalysis analyze_m_matrix(const LaplacianPartition& lp) {
  const Eigen::Index n = lp.L1.rows();
  if (lp.L1.cols() != n) throw DimensionMismatch("analyze_m_matrix: L1 must be square");

  MMatrixAnalysis out;
  if (n == 0) return out;  // leader-only graph, nothing to analyze

  Eigen::FullPivLU<Eigen::MatrixXd> lu(lp.L1.transpose());
  if (!lu.isInvertible())
    throw SingularL1("analyze_m_matrix: L1 is singular (assumption violated)");
  out.q = lu.solve(Eigen::VectorXd::Ones(n));
  out.G = out.q.asDiagonal();

  Eigen::EigenSolver<Eigen::MatrixXd> es(lp.L1, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw NumericalFailure("analyze_m_matrix: eigensolver did not converge on L1");
  out.eigenvalues_L1 = es.eigenvalues();
  out.min_re_lambda = out.eigenvalues_L1.real().minCoeff();

  // Symmetrize explicitly before the symmetric solve to scrub roundoff.
  Eigen::MatrixXd s = out.G * lp.L1 + lp.L1.transpose() * out.G;
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sa(s);
  if (sa.info() != Eigen::Success)
    throw NumericalFailure("analyze_m_matrix: symmetric eigensolver failed");
  out.lambda0_hat = sa.eigenvalues().minCoeff();
  return out;
}

/// True iff every eigenvalue of m has real part < -tol.
inline bool hurwitz(const Eigen::MatrixXd& m, double tol = 1e-9) {
  if (m.rows() != m.cols()) throw DimensionMismatch("hurwitz: matrix must be square");
  if (m.rows() == 0) return true;
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw NumericalFailure("hurwitz: eigensolver did not converge");
  return es.eigenvalues().real().maxCoeff() < -tol;
}

}  // namespace conlab
