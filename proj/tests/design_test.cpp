#include "conlab/design.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"

using namespace conlab;

namespace {

SystemDynamics triple_integrator() {
  Eigen::MatrixXd a(3, 3);
  a << 0, 1, 0, 0, 0, 1, 0, 0, 0;
  Eigen::MatrixXd b(3, 1);
  b << 0, 0, 1;
  return SystemDynamics(a, b);
}

// 4-decimal P published for the triple-integrator example.
Eigen::MatrixXd published_P() {
  Eigen::MatrixXd p(3, 3);
  p << 3.0861, -0.6245, -0.5186, -0.6245, 1.1602, -0.5573, -0.5186, -0.5573, 0.9850;
  return p;
}

Eigen::RowVector3d published_K() { return {-0.6285, -1.3525, -2.1113}; }

Eigen::MatrixXd published_Gamma() {
  Eigen::MatrixXd g(3, 3);
  g << 0.3950, 0.8500, 1.3269, 0.8500, 1.8292, 2.8554, 1.3269, 2.8554, 4.4574;
  return g;
}

}  // namespace

TEST(CheckStabilizable, DoubleIntegratorControllable) {
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, 0, 0;
  Eigen::MatrixXd b(2, 1);
  b << 0, 1;
  EXPECT_TRUE(check_stabilizable(SystemDynamics(a, b)));
}

TEST(CheckStabilizable, UnreachableUnstableMode) {
  Eigen::MatrixXd a(2, 2);
  a << 1, 0, 0, -1;
  Eigen::MatrixXd b(2, 1);
  b << 0, 1;
  EXPECT_FALSE(check_stabilizable(SystemDynamics(a, b)));
}

TEST(CheckStabilizable, StableUnreachableModeIsFine) {
  Eigen::MatrixXd a(2, 2);
  a << -1, 0, 0, 1;
  Eigen::MatrixXd b(2, 1);
  b << 0, 1;
  EXPECT_TRUE(check_stabilizable(SystemDynamics(a, b)));
}

TEST(CheckStabilizable, TripleIntegrator) {
  EXPECT_TRUE(check_stabilizable(triple_integrator()));
}

TEST(SolveLyapunov, ReproducesKnownSolution) {
  // F = -I: F^T X + X F + C = 0 -> X = C / 2.
  Eigen::MatrixXd c(2, 2);
  c << 2, 1, 1, 4;
  Eigen::MatrixXd x = solve_lyapunov(-Eigen::MatrixXd::Identity(2, 2), c);
  EXPECT_LE((x - 0.5 * c).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(SolveCare, ScalarIntegrator) {
  // A = 0, B = 1: 1 - Q^2 = 0 -> Q = 1, K = -1, Gamma = 1.
  const GainDesign d = solve_care(SystemDynamics(Eigen::MatrixXd::Zero(1, 1),
                                                 Eigen::MatrixXd::Ones(1, 1)));
  EXPECT_NEAR(d.Q(0, 0), 1.0, 1e-10);
  EXPECT_NEAR(d.K(0, 0), -1.0, 1e-10);
  EXPECT_NEAR(d.Gamma(0, 0), 1.0, 1e-10);
}

TEST(SolveCare, ScalarUnstableMatchesQuadraticFormula) {
  // 2aQ + 1 - Q^2 = 0 -> Q = a + sqrt(a^2 + 1).
  for (double a : {0.5, 1.0, 3.0}) {
    const GainDesign d = solve_care(SystemDynamics(Eigen::MatrixXd::Constant(1, 1, a),
                                                   Eigen::MatrixXd::Ones(1, 1)));
    EXPECT_NEAR(d.Q(0, 0), a + std::sqrt(a * a + 1.0), 1e-9) << "a = " << a;
  }
}

TEST(SolveCare, TripleIntegrator) {
  const SystemDynamics sys = triple_integrator();
  const GainDesign d = solve_care(sys);
  EXPECT_LE(d.residual, 1e-8);
  EXPECT_TRUE(hurwitz(sys.A + sys.B * d.K, 1e-9));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.Q);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  // closed form for this system has entries 1 and 1 + sqrt(2)
  const double s = 1.0 + std::sqrt(2.0);
  Eigen::MatrixXd expected(3, 3);
  expected << s, s, 1, s, 2 * s, s, 1, s, s;
  EXPECT_LE((d.Q - expected).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(SolveCare, NotStabilizableThrows) {
  Eigen::MatrixXd a(2, 2);
  a << 1, 0, 0, -1;
  Eigen::MatrixXd b(2, 1);
  b << 0, 1;
  EXPECT_THROW(solve_care(SystemDynamics(a, b)), NotStabilizable);
}

TEST(SolveCare, RandomPairsSatisfyResidualAndStability) {
  std::mt19937_64 rng(211);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const SystemDynamics sys = testutil::random_stabilizable(rng, n);
    const GainDesign d = solve_care(sys);
    EXPECT_LE(d.residual, 1e-8) << "trial " << trial;
    EXPECT_TRUE(hurwitz(sys.A + sys.B * d.K, 1e-9)) << "trial " << trial;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.Q);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0) << "trial " << trial;
    EXPECT_LE((d.Gamma - d.K.transpose() * d.K).lpNorm<Eigen::Infinity>(), 1e-10);
  }
}

TEST(SolveCare, NewtonResidualsDecreaseMonotonically) {
  std::mt19937_64 rng(223);
  for (int trial = 0; trial < 10; ++trial) {
    const SystemDynamics sys = testutil::random_stabilizable(rng, 4);
    const GainDesign d = solve_care(sys);
    for (size_t k = 2; k < d.newton_residuals.size(); ++k)
      EXPECT_LE(d.newton_residuals[k], d.newton_residuals[k - 1] + 1e-12)
          << "trial " << trial << " iterate " << k;
  }
}

TEST(VerifyLmiCertificate, PublishedPHolds) {
  const CertificateReport report =
      verify_lmi_certificate(triple_integrator(), published_P(), 1e-2);
  EXPECT_GT(report.lambda_min_P, 0.0);
  EXPECT_LT(report.lambda_max_lmi, 1e-2);
  EXPECT_TRUE(report.holds);
}

TEST(VerifyLmiCertificate, IdentityFailsForDoubleIntegrator) {
  // A P + P A^T - 2 B B^T = [[0,1],[1,-2]] has eigenvalue sqrt(2) - 1 > 0.
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, 0, 0;
  Eigen::MatrixXd b(2, 1);
  b << 0, 1;
  const CertificateReport report =
      verify_lmi_certificate(SystemDynamics(a, b), Eigen::MatrixXd::Identity(2, 2));
  EXPECT_FALSE(report.holds);
  EXPECT_NEAR(report.lambda_max_lmi, std::sqrt(2.0) - 1.0, 1e-12);
}

TEST(VerifyLmiCertificate, RiccatiInverseHoldsStrictly) {
  // Congruence of the Riccati identity: A P + P A^T - 2 B B^T = -P^2 - B B^T.
  std::mt19937_64 rng(227);
  for (int trial = 0; trial < 10; ++trial) {
    const SystemDynamics sys = testutil::random_stabilizable(rng, 3);
    const GainDesign d = solve_care(sys);
    const Eigen::MatrixXd P = d.Q.llt().solve(Eigen::MatrixXd::Identity(3, 3));
    const CertificateReport report = verify_lmi_certificate(sys, P);
    EXPECT_TRUE(report.holds) << "trial " << trial;
    const Eigen::MatrixXd lhs = sys.A * P + P * sys.A.transpose() -
                                2.0 * sys.B * sys.B.transpose();
    const Eigen::MatrixXd rhs = -P * P - sys.B * sys.B.transpose();
    EXPECT_LE((lhs - rhs).lpNorm<Eigen::Infinity>(), 1e-6) << "trial " << trial;
  }
}

TEST(GainsFromP, ReproducesPublishedGains) {
  const SystemDynamics sys = triple_integrator();
  const GainDesign d = gains_from_P(sys, published_P());
  EXPECT_LE((d.K - published_K()).lpNorm<Eigen::Infinity>(), 5e-3);
  EXPECT_LE((d.Gamma - published_Gamma()).lpNorm<Eigen::Infinity>(), 5e-3);
  EXPECT_LE((d.Gamma - d.K.transpose() * d.K).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(GainsFromP, IdentityCase) {
  const SystemDynamics sys(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2));
  const GainDesign d = gains_from_P(sys, Eigen::MatrixXd::Identity(2, 2));
  EXPECT_LE((d.K + Eigen::MatrixXd::Identity(2, 2)).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_LE((d.Gamma - Eigen::MatrixXd::Identity(2, 2)).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(GainsFromP, SingularPThrows) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(3, 3);
  EXPECT_THROW(gains_from_P(triple_integrator(), p), SingularP);
  p = -Eigen::MatrixXd::Identity(3, 3);
  EXPECT_THROW(gains_from_P(triple_integrator(), p), SingularP);
}

TEST(Design, ClosedLoopCertificateOfSynthesizedGains) {
  // Q A + A^T Q - 2 Q B B^T Q < 0 for the synthesized Q (the quantity the
  // Lyapunov derivative bound reduces to).
  std::mt19937_64 rng(229);
  for (int trial = 0; trial < 10; ++trial) {
    const SystemDynamics sys = testutil::random_stabilizable(rng, 3);
    const GainDesign d = solve_care(sys);
    Eigen::MatrixXd m = d.Q * sys.A + sys.A.transpose() * d.Q -
                        2.0 * d.Q * sys.B * sys.B.transpose() * d.Q;
    m = 0.5 * (m + m.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    EXPECT_LT(es.eigenvalues().maxCoeff(), 0.0) << "trial " << trial;
  }
}
