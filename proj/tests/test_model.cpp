#include "ssmkit/model.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <complex>
#include <random>

#include "ssmkit/errors.hpp"

using namespace ssmkit;

namespace {

MechanicalSystem random_spd_system(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int n = 2;
  Eigen::MatrixXd B(n, n), D(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      B(i, j) = u(rng);
      D(i, j) = u(rng);
    }
  MechanicalSystem sys;
  sys.n = n;
  sys.M = B * B.transpose() + 2.0 * Eigen::MatrixXd::Identity(n, n);
  sys.K = D * D.transpose() + 2.0 * Eigen::MatrixXd::Identity(n, n);
  sys.C = 0.05 * sys.M + 0.01 * sys.K;
  ForceTerm t1;
  t1.target_dof = 0;
  t1.coefficient = 0.3;
  t1.exponents = {2, 0, 0, 0};
  ForceTerm t2;
  t2.target_dof = 1;
  t2.coefficient = -0.7;
  t2.exponents = {1, 1, 1, 0};
  sys.nonlinearity = {t1, t2};
  return sys;
}

Eigen::VectorXd nonlinear_force(const MechanicalSystem& sys, const Eigen::VectorXd& x) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(sys.n);
  for (const ForceTerm& t : sys.nonlinearity) {
    double mono = t.coefficient;
    for (int v = 0; v < 2 * sys.n; ++v)
      for (int e = 0; e < t.exponents[static_cast<std::size_t>(v)]; ++e) mono *= x[v];
    f[t.target_dof] += mono;
  }
  return f;
}

}  // namespace

TEST(Model, TwoMassFirstOrderMatrixExact) {
  ShawPierreParams p;
  p.c = 0.03;
  p.kappa = 0.5;
  MechanicalSystem sys = make_shaw_pierre(ShawPierreVariant::inner, p);
  FirstOrderSystem fos = build_first_order(sys);
  double k = 1.0, c = 0.03;
  Eigen::MatrixXd expected(4, 4);
  expected << 0, 0, 1, 0,
              0, 0, 0, 1,
              -2 * k, k, -2 * c, c,
              k, -2 * k, c, -2 * c;
  EXPECT_LT((fos.A - expected).norm(), 1e-14);

  // single cubic term -kappa*x1^3 lands in the x1'' row
  ASSERT_TRUE(fos.F.blocks.count(3) == 1);
  const PolyBlock& b3 = *fos.F.block(3);
  int idx = b3.find({3, 0, 0, 0});
  ASSERT_GE(idx, 0);
  EXPECT_NEAR(b3.coeffs(2, idx).real(), -0.5, 1e-15);
  EXPECT_NEAR(b3.coeffs(2, idx).imag(), 0.0, 1e-300);
  EXPECT_LT(b3.coeffs.row(3).norm(), 1e-300);
  EXPECT_LT(b3.coeffs.row(0).norm(), 1e-300);
}

TEST(Model, FirstOrderAccelerationOracle) {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int rep = 0; rep < 5; ++rep) {
    MechanicalSystem sys = random_spd_system(rng);
    FirstOrderSystem fos = build_first_order(sys);
    Eigen::LLT<Eigen::MatrixXd> llt(sys.M);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd x(4);
      for (int i = 0; i < 4; ++i) x[i] = u(rng);
      Eigen::VectorXd q = x.head(2), v = x.tail(2);
      // forces sit on the left of M ydd + C yd + K y + f = 0
      Eigen::VectorXd acc = llt.solve(-sys.K * q - sys.C * v - nonlinear_force(sys, x));
      Eigen::VectorXcd xc = x.cast<std::complex<double>>();
      Eigen::VectorXcd rhs = fos.A.cast<std::complex<double>>() * xc + fos.F.eval(xc);
      EXPECT_LT((rhs.head(2) - v.cast<std::complex<double>>()).norm(), 1e-12);
      EXPECT_LT((rhs.tail(2) - acc.cast<std::complex<double>>()).norm(), 1e-12);
    }
  }
}

TEST(Model, ValidationRejectsAsymmetricAndNonSpd) {
  std::mt19937 rng(7);
  MechanicalSystem sys = random_spd_system(rng);
  sys.M(0, 1) += 1e-6;
  EXPECT_THROW(sys.validate(), AsymmetryError);

  sys = random_spd_system(rng);
  sys.M = -sys.M;
  EXPECT_THROW(sys.validate(), SingularMass);

  sys = random_spd_system(rng);
  sys.nonlinearity[0].exponents = {1, 0, 0, 0};
  EXPECT_THROW(sys.validate(), ConfigError);

  sys = random_spd_system(rng);
  EXPECT_NO_THROW(sys.validate());
}

TEST(Model, ShawPierreEigenvalueFormulas) {
  ShawPierreParams p;
  MechanicalSystem sys = make_shaw_pierre(ShawPierreVariant::inner, p);
  FirstOrderSystem fos = build_first_order(sys);
  Eigen::EigenSolver<Eigen::MatrixXd> es(fos.A);
  // modal stiffness 1 and 3, modal damping c and 3c with c = 0.03
  std::complex<double> slow(-0.015, std::sqrt(1.0 - 0.015 * 0.015));
  std::complex<double> fast(-0.045, std::sqrt(3.0 - 0.045 * 0.045));
  double best_slow = 1e9, best_fast = 1e9;
  for (int i = 0; i < 4; ++i) {
    best_slow = std::min(best_slow, std::abs(es.eigenvalues()[i] - slow));
    best_fast = std::min(best_fast, std::abs(es.eigenvalues()[i] - fast));
  }
  EXPECT_LT(best_slow, 1e-12);
  EXPECT_LT(best_fast, 1e-12);
}

TEST(Model, DegreePreservationRoundTrip) {
  std::mt19937 rng(3);
  MechanicalSystem sys = random_spd_system(rng);
  FirstOrderSystem fos = build_first_order(sys);
  EXPECT_EQ(fos.dim, 4);
  EXPECT_EQ(fos.F.max_order(), 3);
  for (const auto& [ord, blk] : fos.F.blocks) {
    for (const Key& k : blk.keys) EXPECT_EQ(key_degree(k), ord);
    EXPECT_EQ(blk.coeffs.rows(), 4);
  }
  // velocity rows of F vanish identically
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXcd x(4);
    for (int i = 0; i < 4; ++i) x[i] = u(rng);
    Eigen::VectorXcd fx = fos.F.eval(x);
    EXPECT_EQ(fx[0], std::complex<double>(0, 0));
    EXPECT_EQ(fx[1], std::complex<double>(0, 0));
  }
}

TEST(Model, OuterVariantSpectrum) {
  // k1 = k3 = 1, k2 = 4.005, c = 0.4 gives modal pairs
  // -0.2 + 0.9798i and -0.6 + 2.9411i
  ShawPierreParams p;
  p.k1 = 1.0;
  p.k2 = 4.005;
  p.k3 = 1.0;
  p.c = 0.4;
  MechanicalSystem sys = make_shaw_pierre(ShawPierreVariant::outer, p);
  Eigen::MatrixXd Kexp(2, 2);
  Kexp << 5.005, -4.005, -4.005, 5.005;
  EXPECT_LT((sys.K - Kexp).norm(), 1e-14);
  ASSERT_EQ(sys.nonlinearity.size(), 1u);
  EXPECT_EQ(sys.nonlinearity[0].target_dof, 0);

  FirstOrderSystem fos = build_first_order(sys);
  Eigen::EigenSolver<Eigen::MatrixXd> es(fos.A);
  std::complex<double> slow(-0.2, std::sqrt(1.0 - 0.04));
  std::complex<double> fast(-0.6, std::sqrt(1.0 + 2.0 * 4.005 - 0.36));
  EXPECT_NEAR(slow.imag(), 0.9798, 5e-5);
  EXPECT_NEAR(fast.imag(), 2.9411, 5e-5);
  double best_slow = 1e9, best_fast = 1e9;
  for (int i = 0; i < 4; ++i) {
    best_slow = std::min(best_slow, std::abs(es.eigenvalues()[i] - slow));
    best_fast = std::min(best_fast, std::abs(es.eigenvalues()[i] - fast));
  }
  EXPECT_LT(best_slow, 1e-12);
  EXPECT_LT(best_fast, 1e-12);
}
