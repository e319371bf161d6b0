#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <string_view>

#include "conlab/errors.hpp"

namespace conlab {

/// Kronecker product A (x) B.
inline Eigen::MatrixXd kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::MatrixXd out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

/// Solves the continuous Lyapunov equation  F^T X + X F + C = 0  by the
/// Kronecker-vectorized dense route: (I (x) F^T + F^T (x) I) vec(X) = -vec(C).
/// Intended for the desk-scale sizes this toolkit works at (n <= ~10).
inline Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& F, const Eigen::MatrixXd& C) {
  const Eigen::Index n = F.rows();
  if (F.cols() != n || C.rows() != n || C.cols() != n)
    throw DimensionMismatch("solve_lyapunov: F and C must be square and same size");

  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd ft = F.transpose();
  Eigen::MatrixXd op = kron(id, ft) + kron(ft, id);

  Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(C.data(), n * n);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(op);
  if (!lu.isInvertible())
    throw NumericalFailure("solve_lyapunov: Lyapunov operator is singular");
  Eigen::VectorXd x = lu.solve(rhs);
  return Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
}

/// Largest real part over the eigenvalues of a real square matrix.
inline double spectral_abscissa(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("spectral_abscissa: matrix must be square");
  if (m.rows() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw NumericalFailure("spectral_abscissa: eigensolver did not converge");
  return es.eigenvalues().real().maxCoeff();
}

/// FNV-1a 64-bit hash; used for stable scenario digests.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace conlab
