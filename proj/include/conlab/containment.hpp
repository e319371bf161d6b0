#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "conlab/errors.hpp"
#include "conlab/graph.hpp"
#include "conlab/sim.hpp"

namespace conlab {

/// Multi-leader hull weights W = -L1~^{-1} L2~ (followers x leaders).
/// Under the reachability assumption W is entrywise nonnegative with unit row
/// sums, so (W (x) I_n) x_leaders is the asymptotic in-hull target.
struct ContainmentAnalysis {
  Eigen::MatrixXd W;
};

inline ContainmentAnalysis containment_weights(const LaplacianPartition& lp) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(lp.L1);
  if (!lu.isInvertible())
    throw SingularL1("containment_weights: L1 is singular (assumption violated)");

  ContainmentAnalysis out;
  out.W = -lu.solve(lp.L2);

  for (Eigen::Index i = 0; i < out.W.rows(); ++i) {
    const double row_sum = out.W.row(i).sum();
    if (std::abs(row_sum - 1.0) > 1e-10)
      throw RowStochasticViolation("containment_weights: row " + std::to_string(i) +
                                   " sums to " + std::to_string(row_sum));
    if (out.W.row(i).minCoeff() < -1e-12)
      throw RowStochasticViolation("containment_weights: negative entry in row " +
                                   std::to_string(i));
  }
  return out;
}

/// Stacked follower target (W (x) I_n) x_leaders.
inline Eigen::VectorXd hull_target(const ContainmentAnalysis& analysis,
                                   const Eigen::VectorXd& x_leaders, int n) {
  const Eigen::Index leaders = analysis.W.cols();
  if (x_leaders.size() != leaders * n)
    throw DimensionMismatch("hull_target: leader state size mismatch");
  Eigen::VectorXd target = Eigen::VectorXd::Zero(analysis.W.rows() * n);
  for (Eigen::Index i = 0; i < analysis.W.rows(); ++i)
    for (Eigen::Index l = 0; l < leaders; ++l)
      target.segment(i * n, n) += analysis.W(i, l) * x_leaders.segment(l * n, n);
  return target;
}

struct ContainmentReport {
  double final_distance = 0.0;
  bool achieved = false;
  std::vector<double> per_sample_distance;
  double threshold = 1e-3;
};

/// Distance of the followers from the hull target at every sample,
/// inf-norm; containment is achieved when the final distance is within the
/// threshold.
inline ContainmentReport verify_containment(const ContainmentAnalysis& analysis,
                                            const Trajectory& traj, double threshold = 1e-3) {
  const int n = traj.n;
  const Eigen::Index nl = traj.leader_count;
  const Eigen::Index nf = traj.follower_count;
  if (analysis.W.rows() != nf || analysis.W.cols() != nl)
    throw DimensionMismatch("verify_containment: W does not match trajectory layout");

  ContainmentReport report;
  report.threshold = threshold;
  report.per_sample_distance.reserve(traj.states.size());
  for (const Eigen::VectorXd& x : traj.states) {
    const Eigen::VectorXd target = hull_target(analysis, x.head(nl * n), n);
    const double dist = nf == 0 ? 0.0 : (x.tail(nf * n) - target).lpNorm<Eigen::Infinity>();
    report.per_sample_distance.push_back(dist);
  }
  report.final_distance = report.per_sample_distance.empty() ? 0.0
                                                             : report.per_sample_distance.back();
  report.achieved = report.final_distance <= threshold;
  return report;
}

}  // namespace conlab
