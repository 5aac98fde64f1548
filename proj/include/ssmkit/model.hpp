#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ssmkit/poly.hpp"

namespace ssmkit {

// One polynomial force term: coefficient * product of state variables given by
// exponents over (y_1..y_n, ydot_1..ydot_n), applied to equation target_dof.
struct ForceTerm {
  int target_dof = 0;  // 0-based row in the second-order equations
  double coefficient = 0.0;
  Key exponents;  // size 2n, total degree >= 2
};

// Second-order mechanical model M yddot + C ydot + K y + f(y, ydot) = 0.
struct MechanicalSystem {
  int n = 0;
  Eigen::MatrixXd M;
  Eigen::MatrixXd C;
  Eigen::MatrixXd K;
  std::vector<ForceTerm> nonlinearity;

  void validate() const;  // throws SingularMass / AsymmetryError / ConfigError
};

// First-order phase-space form xdot = A x + F(x), x = (y, ydot).
struct FirstOrderSystem {
  int dim = 0;  // 2n
  Eigen::MatrixXd A;
  PolyMap F;  // real coefficients stored complex, orders >= 2
};

FirstOrderSystem build_first_order(const MechanicalSystem& sys);

enum class ShawPierreVariant { inner, outer };

struct ShawPierreParams {
  double k1 = 1.0;
  double k2 = 1.0;
  double k3 = 1.0;
  double c = 0.03;
  double kappa = 0.5;
  double mass = 1.0;
};

// Two-mass oscillator chain with one cubic spring on the first mass.
// inner: k1 = k2 = k3; outer: distinct spring constants (near-resonant setup).
MechanicalSystem make_shaw_pierre(ShawPierreVariant variant, const ShawPierreParams& p);

}  // namespace ssmkit
