#pragma once

#include <vector>

#include "ssmkit/model.hpp"

namespace ssmkit {

// Geometrically nonlinear viscoelastic Timoshenko cantilever, clamped at
// x = 0 and free at x = L. Units are kg, mm, s (moduli in MPa, rate moduli
// in MPa s, density in kg/mm^3).
struct BeamParams {
  double L = 1000.0;             // length
  double h = 100.0;              // cross-section height
  double b = 100.0;              // cross-section width
  double rho_density = 7850e-9;  // mass density
  double E = 90000.0;            // Young's modulus
  double G_shear = 34600.0;      // shear modulus
  double eta = 33.6;             // axial / bending rate modulus
  double mu = 20.9;              // shear rate modulus
  double lambda_ext = 0.0;       // external mass-proportional damping
  int m_elems = 3;               // element count; n = 5 m + 1
};

// Assembled model plus the bookkeeping needed to address physical degrees of
// freedom after the clamped ones are removed. Section constants: I0 = b h,
// I2 = b h^3 / 12, m0 = rho I0, m2 = rho I2.
struct BeamAssembly {
  MechanicalSystem sys;  // n = 5 m + 1
  double I0 = 0.0;
  double I2 = 0.0;
  double m0 = 0.0;
  double m2 = 0.0;
  // global index per field slot, -1 where clamped away:
  std::vector<int> axial;       // u value / derivative pairs at the m+1 end nodes
  std::vector<int> transverse;  // w values at the 2m+1 nodes (midside included)
  std::vector<int> rotation;    // phi values at the m+1 end nodes
};

// Cubic Hermite axial displacement, quadratic transverse displacement and
// linear rotation per element, 4-point Gauss quadrature on every term.
BeamAssembly assemble_beam(const BeamParams& p);

// Re lambda(second-slowest pair) / Re lambda(slowest pair) of the linearized
// first-order system.
double spectral_ratio_report(const BeamAssembly& assembly);

}  // namespace ssmkit
