#include "ssmkit/model.hpp"

#include <Eigen/Eigenvalues>

#include "ssmkit/errors.hpp"

namespace ssmkit {

void MechanicalSystem::validate() const {
  if (n < 1) throw ConfigError("MechanicalSystem: n must be >= 1");
  if (M.rows() != n || M.cols() != n || C.rows() != n || C.cols() != n || K.rows() != n ||
      K.cols() != n)
    throw DimensionMismatch("MechanicalSystem: matrix sizes != n x n");
  auto check_sym = [&](const Eigen::MatrixXd& X, const char* name) {
    double scale = X.norm();
    if ((X - X.transpose()).norm() > 1e-12 * (scale > 0 ? scale : 1.0))
      throw AsymmetryError(std::string("MechanicalSystem: ") + name + " not symmetric");
  };
  check_sym(M, "M");
  check_sym(C, "C");
  check_sym(K, "K");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
  double lo = es.eigenvalues().minCoeff();
  double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 1e-12 * hi)) throw SingularMass("MechanicalSystem: M not positive definite");

  for (const ForceTerm& t : nonlinearity) {
    if (t.target_dof < 0 || t.target_dof >= n)
      throw ConfigError("MechanicalSystem: force term target_dof out of range");
    if (static_cast<int>(t.exponents.size()) != 2 * n)
      throw ConfigError("MechanicalSystem: force term exponents must cover all 2n variables");
    if (key_degree(t.exponents) < 2)
      throw ConfigError("MechanicalSystem: nonlinear terms need total degree >= 2");
  }
}

FirstOrderSystem build_first_order(const MechanicalSystem& sys) {
  sys.validate();
  const int n = sys.n;

  Eigen::MatrixXd Minv = sys.M.fullPivLu().inverse();

  FirstOrderSystem fos;
  fos.dim = 2 * n;
  fos.A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  fos.A.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  fos.A.bottomLeftCorner(n, n) = -Minv * sys.K;
  fos.A.bottomRightCorner(n, n) = -Minv * sys.C;

  PolyBuilder b(2 * n, 2 * n);
  for (const ForceTerm& t : sys.nonlinearity) {
    // the term enters the acceleration rows as -M^{-1} e_dof * coefficient
    for (int r = 0; r < n; ++r) {
      double v = -Minv(r, t.target_dof) * t.coefficient;
      if (v != 0.0) b.add(n + r, t.exponents, cd(v, 0.0));
    }
  }
  fos.F = b.build();
  fos.F.prune();
  return fos;
}

MechanicalSystem make_shaw_pierre(ShawPierreVariant variant, const ShawPierreParams& p) {
  double k1 = p.k1, k2 = p.k2, k3 = p.k3;
  if (variant == ShawPierreVariant::inner) k2 = k3 = k1;
  if (!(k1 > 0 && k2 > 0 && k3 > 0 && p.c > 0 && p.kappa > 0 && p.mass > 0))
    throw ConfigError("make_shaw_pierre: parameters must be positive");

  MechanicalSystem sys;
  sys.n = 2;
  sys.M = p.mass * Eigen::MatrixXd::Identity(2, 2);
  sys.C.resize(2, 2);
  sys.C << 2 * p.c, -p.c, -p.c, 2 * p.c;
  sys.K.resize(2, 2);
  sys.K << k1 + k2, -k2, -k2, k2 + k3;

  ForceTerm cubic;
  cubic.target_dof = 0;
  cubic.coefficient = p.kappa;
  cubic.exponents = Key{3, 0, 0, 0};
  sys.nonlinearity.push_back(cubic);
  return sys;
}

}  // namespace ssmkit
