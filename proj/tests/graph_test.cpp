#include "conlab/graph.hpp"

#include <gtest/gtest.h>

#include <random>

#include "conlab/spectra.hpp"
#include "test_support.hpp"

using namespace conlab;

TEST(DirectedGraph, RejectsInvalidInput) {
  EXPECT_THROW(DirectedGraph(0, {0}, {}), InvalidGraph);
  EXPECT_THROW(DirectedGraph(2, {}, {}), InvalidGraph);
  EXPECT_THROW(DirectedGraph(2, {0, 0}, {}), InvalidGraph);
  EXPECT_THROW(DirectedGraph(2, {0}, {{1, 1, 1.0}}), InvalidGraph);      // self-loop
  EXPECT_THROW(DirectedGraph(2, {0}, {{1, 0, 1.0}}), InvalidGraph);      // edge into leader
  EXPECT_THROW(DirectedGraph(2, {0}, {{0, 1, 0.0}}), InvalidGraph);      // zero weight
  EXPECT_THROW(DirectedGraph(2, {0}, {{0, 1, -2.0}}), InvalidGraph);     // negative weight
  EXPECT_THROW(DirectedGraph(2, {0}, {{0, 2, 1.0}}), InvalidGraph);      // out of range
  EXPECT_THROW(DirectedGraph(3, {0}, {{0, 1, 1.0}, {0, 1, 2.0}}), InvalidGraph);  // duplicate
}

TEST(DirectedGraph, InternalOrderingPutsLeadersFirst) {
  // leaders 3 and 5 in a 6-node graph; followers keep ascending order after
  DirectedGraph g(6, {3, 5}, {{3, 0, 1.0}, {5, 4, 1.0}, {0, 1, 1.0}, {1, 2, 1.0}, {2, 4, 1.0}});
  EXPECT_EQ(g.internal_index(3), 0);
  EXPECT_EQ(g.internal_index(5), 1);
  EXPECT_EQ(g.internal_index(0), 2);
  EXPECT_EQ(g.internal_index(1), 3);
  EXPECT_EQ(g.internal_index(2), 4);
  EXPECT_EQ(g.internal_index(4), 5);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(g.internal_index(g.user_id(i)), i);
  EXPECT_EQ(g.follower_count(), 4);
}

TEST(BuildLaplacian, ChainExample) {
  DirectedGraph g(3, {0}, {{0, 1, 1.0}, {1, 2, 1.0}});
  const LaplacianPartition lp = build_laplacian(g);

  Eigen::MatrixXd expected(3, 3);
  expected << 0, 0, 0, -1, 1, 0, 0, -1, 1;
  EXPECT_EQ(lp.L, expected);

  Eigen::MatrixXd l1(2, 2);
  l1 << 1, 0, -1, 1;
  EXPECT_EQ(lp.L1, l1);
  Eigen::MatrixXd l2(2, 1);
  l2 << -1, 0;
  EXPECT_EQ(lp.L2, l2);
}

TEST(BuildLaplacian, EmptyEdgeSetGivesZeroMatrix) {
  DirectedGraph g(2, {0}, {});
  const LaplacianPartition lp = build_laplacian(g);
  EXPECT_EQ(lp.L, Eigen::MatrixXd::Zero(2, 2));
}

TEST(BuildLaplacian, LeaderAccessibleOnlyToFirstFollower) {
  // Leader 0 feeds only follower 1; couplings to the leader appear solely in
  // row 1's column of L2.
  std::mt19937_64 rng(7);
  std::vector<Edge> edges{{0, 1, testutil::uniform(rng, 0.01, 3.0)}};
  for (int f = 1; f < 6; ++f) edges.push_back({f, f + 1, testutil::uniform(rng, 0.01, 3.0)});
  edges.push_back({6, 2, testutil::uniform(rng, 0.01, 3.0)});
  DirectedGraph g(7, {0}, edges);
  const LaplacianPartition lp = build_laplacian(g);

  for (int i = 0; i < 6; ++i) {
    if (i == 0)
      EXPECT_LT(lp.L2(i, 0), 0.0);
    else
      EXPECT_EQ(lp.L2(i, 0), 0.0);
  }
}

TEST(BuildLaplacian, RowSumsVanish) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int followers = 3 + static_cast<int>(rng() % 8);
    DirectedGraph g = testutil::random_assumption_graph(rng, followers);
    const LaplacianPartition lp = build_laplacian(g);
    const Eigen::VectorXd row_sums = lp.L * Eigen::VectorXd::Ones(g.node_count());
    EXPECT_LE(row_sums.lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(BuildLaplacian, L1SignPattern) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    DirectedGraph g = testutil::random_assumption_graph(rng, 5);
    const LaplacianPartition lp = build_laplacian(g);
    for (Eigen::Index i = 0; i < lp.L1.rows(); ++i)
      for (Eigen::Index j = 0; j < lp.L1.cols(); ++j) {
        if (i == j)
          EXPECT_GE(lp.L1(i, j), 0.0);
        else
          EXPECT_LE(lp.L1(i, j), 0.0);
      }
  }
}

TEST(CheckAssumption, ChainSatisfied) {
  DirectedGraph g(3, {0}, {{0, 1, 1.0}, {1, 2, 1.0}});
  const AssumptionReport report = check_assumption(g);
  EXPECT_TRUE(report.satisfied);
  EXPECT_TRUE(report.unreachable.empty());
}

TEST(CheckAssumption, IsolatedFollowerViolates) {
  DirectedGraph g(2, {0}, {});
  const AssumptionReport report = check_assumption(g);
  EXPECT_FALSE(report.satisfied);
  ASSERT_EQ(report.unreachable.size(), 1u);
  EXPECT_EQ(report.unreachable[0], 1);
}

TEST(CheckAssumption, TwoLeadersCoverDistinctFollowers) {
  // BFS oracle over the 4-node graph: leader 0 -> 2, leader 1 -> 3, 2 -> 3.
  DirectedGraph g(4, {0, 1}, {{0, 2, 1.0}, {1, 3, 1.0}, {2, 3, 1.0}});
  const AssumptionReport report = check_assumption(g);
  EXPECT_TRUE(report.satisfied);
}

TEST(CheckAssumption, MatchesSpectralCondition) {
  // BFS verdict == "all eigenvalues of L1 in the open right half-plane",
  // cross-validated on randomized graphs of both kinds.
  std::mt19937_64 rng(17);
  int satisfied_seen = 0, violated_seen = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const int followers = 2 + static_cast<int>(rng() % 8);  // graph sizes 3..10
    const bool violate = trial % 3 == 0 && followers >= 2;
    DirectedGraph g = violate ? testutil::random_violating_graph(rng, followers)
                              : testutil::random_assumption_graph(rng, followers);
    const AssumptionReport report = check_assumption(g);
    const LaplacianPartition lp = build_laplacian(g);
    Eigen::EigenSolver<Eigen::MatrixXd> es(lp.L1, false);
    const double min_re = es.eigenvalues().real().minCoeff();
    EXPECT_EQ(report.satisfied, min_re > 1e-9) << "trial " << trial;
    (report.satisfied ? satisfied_seen : violated_seen)++;
  }
  EXPECT_GT(satisfied_seen, 0);
  EXPECT_GT(violated_seen, 0);
}

TEST(CheckAssumption, FollowerRelabelingPermutesL1Symmetrically) {
  std::mt19937_64 rng(23);
  DirectedGraph g = testutil::random_assumption_graph(rng, 5);
  const LaplacianPartition lp = build_laplacian(g);
  const bool verdict = check_assumption(g).satisfied;

  // swap follower user-ids 1 <-> 3 (internal follower indices 0 and 2)
  const auto relabel = [](int v) { return v == 1 ? 3 : v == 3 ? 1 : v; };
  std::vector<Edge> edges;
  for (const Edge& e : g.edges()) edges.push_back({relabel(e.source), relabel(e.target), e.weight});
  DirectedGraph permuted(g.node_count(), g.leaders(), edges);
  const LaplacianPartition lp2 = build_laplacian(permuted);

  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(5, 5);
  P.row(0).swap(P.row(2));
  EXPECT_LE((lp2.L1 - P * lp.L1 * P.transpose()).lpNorm<Eigen::Infinity>(), 1e-15);
  EXPECT_EQ(check_assumption(permuted).satisfied, verdict);
}
