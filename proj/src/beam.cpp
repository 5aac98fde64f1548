#include "ssmkit/beam.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "ssmkit/errors.hpp"

namespace ssmkit {

namespace {

struct QuadPoint {
  double xi;
  double weight;
};

// 4-point Gauss-Legendre rule mapped to [0, 1]
std::array<QuadPoint, 4> gauss4() {
  const double xa = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
  const double xb = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
  const double wa = (18.0 + std::sqrt(30.0)) / 72.0;
  const double wb = (18.0 - std::sqrt(30.0)) / 72.0;
  return {{{(1.0 - xb) / 2.0, wb},
           {(1.0 - xa) / 2.0, wa},
           {(1.0 + xa) / 2.0, wa},
           {(1.0 + xb) / 2.0, wb}}};
}

using Form = Eigen::Matrix<double, 9, 1>;

// Interpolation at local coordinate xi over the element dof vector
// [u_e, u'_e, u_{e+1}, u'_{e+1}, w_{2e}, w_{2e+1}, w_{2e+2}, phi_e, phi_{e+1}]:
// V* sample the field value, B* its x-derivative. Hermite slope dofs carry the
// element length so all dofs stay in displacement units.
struct ShapeSet {
  Form Vu = Form::Zero();
  Form Bu = Form::Zero();
  Form Vw = Form::Zero();
  Form Bw = Form::Zero();
  Form Vp = Form::Zero();
  Form Bp = Form::Zero();
};

ShapeSet shapes(double xi, double ell) {
  const double x2 = xi * xi;
  const double x3 = x2 * xi;
  ShapeSet s;
  s.Vu[0] = 1 - 3 * x2 + 2 * x3;
  s.Vu[1] = ell * (xi - 2 * x2 + x3);
  s.Vu[2] = 3 * x2 - 2 * x3;
  s.Vu[3] = ell * (-x2 + x3);
  s.Bu[0] = (-6 * xi + 6 * x2) / ell;
  s.Bu[1] = 1 - 4 * xi + 3 * x2;
  s.Bu[2] = (6 * xi - 6 * x2) / ell;
  s.Bu[3] = -2 * xi + 3 * x2;
  s.Vw[4] = 2 * (xi - 0.5) * (xi - 1);
  s.Vw[5] = -4 * xi * (xi - 1);
  s.Vw[6] = 2 * xi * (xi - 0.5);
  s.Bw[4] = (4 * xi - 3) / ell;
  s.Bw[5] = (-8 * xi + 4) / ell;
  s.Bw[6] = (4 * xi - 1) / ell;
  s.Vp[7] = 1 - xi;
  s.Vp[8] = xi;
  s.Bp[7] = -1.0 / ell;
  s.Bp[8] = 1.0 / ell;
  return s;
}

enum FormId { kBu = 0, kBw = 1, kVp = 2, kBp = 3 };

struct SpecFactor {
  FormId form;
  int dot;  // 0 = displacement, 1 = velocity
};

// One weak-form integrand: coeff * test' * prod(factors), where the quadratic
// and cubic products come from the von Karman strain and the shear coupling.
struct TermSpec {
  FormId test;
  int nf;
  std::array<SpecFactor, 3> f;
  double coeff;
};

std::vector<TermSpec> nonlinear_specs(double E, double Gs, double eta, double mu, double I0,
                                      double I2) {
  std::vector<TermSpec> sp;
  auto add2 = [&](FormId t, SpecFactor a, SpecFactor b, double c) {
    sp.push_back({t, 2, {a, b, SpecFactor{kBu, 0}}, c});
  };
  auto add3 = [&](FormId t, SpecFactor a, SpecFactor b, SpecFactor c3, double c) {
    sp.push_back({t, 3, {a, b, c3}, c});
  };
  // membrane / shear group (area moment I0)
  add2(kBu, {kBw, 0}, {kBw, 0}, E / 2 * I0);
  add2(kBu, {kBw, 0}, {kBw, 1}, eta * I0);
  add2(kBu, {kVp, 0}, {kVp, 0}, Gs * I0);
  add2(kBu, {kVp, 0}, {kBw, 0}, Gs * I0);
  add2(kBu, {kVp, 0}, {kVp, 1}, mu * I0);
  add2(kBu, {kVp, 0}, {kBw, 1}, mu * I0);
  add3(kBu, {kVp, 0}, {kVp, 0}, {kBu, 0}, Gs * I0);
  add3(kBu, {kVp, 0}, {kBu, 0}, {kVp, 1}, mu * I0);
  add3(kBu, {kVp, 0}, {kVp, 0}, {kBu, 1}, mu * I0);
  add2(kBw, {kVp, 0}, {kBu, 0}, Gs * I0);
  add2(kBw, {kBu, 0}, {kVp, 1}, mu * I0);
  add2(kBw, {kVp, 0}, {kBu, 1}, mu * I0);
  add2(kBw, {kBw, 0}, {kBu, 0}, E * I0);
  add2(kBw, {kBw, 0}, {kBu, 1}, eta * I0);
  add3(kBw, {kBw, 0}, {kBw, 0}, {kBw, 0}, E / 2 * I0);
  add3(kBw, {kBw, 0}, {kBw, 0}, {kBw, 1}, eta * I0);
  add2(kVp, {kVp, 0}, {kBu, 0}, Gs * I0);
  add2(kVp, {kBu, 0}, {kVp, 1}, mu * I0);
  add2(kVp, {kVp, 0}, {kBu, 1}, mu * I0);
  // the axial stretch enters the shear resultant twice, so the same product
  // appears again in the rotation equation
  add2(kVp, {kVp, 0}, {kBu, 0}, Gs * I0);
  add2(kVp, {kBw, 0}, {kBu, 0}, Gs * I0);
  add2(kVp, {kBu, 0}, {kVp, 1}, mu * I0);
  add2(kVp, {kBu, 0}, {kBw, 1}, mu * I0);
  add3(kVp, {kVp, 0}, {kBu, 0}, {kBu, 0}, Gs * I0);
  add3(kVp, {kBu, 0}, {kBu, 0}, {kVp, 1}, mu * I0);
  add3(kVp, {kVp, 0}, {kBu, 0}, {kBu, 1}, mu * I0);
  // rotation-gradient group (second moment I2)
  add3(kBp, {kVp, 0}, {kVp, 0}, {kBp, 0}, Gs * I2);
  add3(kBp, {kVp, 0}, {kBp, 0}, {kVp, 1}, mu * I2);
  add3(kBp, {kVp, 0}, {kVp, 0}, {kBp, 1}, mu * I2);
  add3(kVp, {kVp, 0}, {kBp, 0}, {kBp, 0}, Gs * I2);
  add3(kVp, {kBp, 0}, {kBp, 0}, {kVp, 1}, mu * I2);
  add3(kVp, {kVp, 0}, {kBp, 0}, {kBp, 1}, mu * I2);
  return sp;
}

// monomial in full dof numbering: sorted (dof, dot) factors
using MonoKey = std::vector<std::pair<int, int>>;

}  // namespace

BeamAssembly assemble_beam(const BeamParams& p) {
  if (p.m_elems < 1) throw ConfigError("assemble_beam: m_elems must be >= 1");
  if (!(p.L > 0 && p.h > 0 && p.b > 0 && p.rho_density > 0 && p.E > 0 && p.G_shear > 0))
    throw ConfigError("assemble_beam: geometry and elastic moduli must be positive");
  if (!(p.eta >= 0 && p.mu >= 0 && p.lambda_ext >= 0))
    throw ConfigError("assemble_beam: damping moduli must be >= 0");

  const int m = p.m_elems;
  const double I0 = p.b * p.h;
  const double I2 = p.b * p.h * p.h * p.h / 12.0;
  const double m0 = p.rho_density * I0;
  const double m2 = p.rho_density * I2;
  const double ell = p.L / m;

  const int nfull = 5 * m + 4;
  const int offw = 2 * m + 2;
  const int offp = offw + 2 * m + 1;

  Eigen::MatrixXd Mf = Eigen::MatrixXd::Zero(nfull, nfull);
  Eigen::MatrixXd Cf = Eigen::MatrixXd::Zero(nfull, nfull);
  Eigen::MatrixXd Kf = Eigen::MatrixXd::Zero(nfull, nfull);
  std::map<std::pair<int, MonoKey>, double> fterms;

  const std::vector<TermSpec> specs =
      nonlinear_specs(p.E, p.G_shear, p.eta, p.mu, I0, I2);
  const auto quad = gauss4();

  for (int e = 0; e < m; ++e) {
    const std::array<int, 9> loc = {2 * e,        2 * e + 1,    2 * e + 2,
                                    2 * e + 3,    offw + 2 * e, offw + 2 * e + 1,
                                    offw + 2 * e + 2, offp + e, offp + e + 1};
    for (const QuadPoint& q : quad) {
      const double c = q.weight * ell;
      const ShapeSet s = shapes(q.xi, ell);
      const Form Sv = s.Vp + s.Bw;  // shear strain phi + w'

      auto scatter = [&](Eigen::MatrixXd& X, double w, const Form& a, const Form& b) {
        for (int i = 0; i < 9; ++i) {
          if (a[i] == 0.0) continue;
          for (int j = 0; j < 9; ++j)
            if (b[j] != 0.0) X(loc[i], loc[j]) += w * a[i] * b[j];
        }
      };
      scatter(Mf, c * m0, s.Vu, s.Vu);
      scatter(Mf, c * m0, s.Vw, s.Vw);
      scatter(Mf, c * m2, s.Vp, s.Vp);
      scatter(Kf, c * p.E * I2, s.Bp, s.Bp);
      scatter(Kf, c * p.E * I0, s.Bu, s.Bu);
      scatter(Kf, c * p.G_shear * I0, Sv, Sv);
      scatter(Cf, c * p.eta * I2, s.Bp, s.Bp);
      scatter(Cf, c * p.eta * I0, s.Bu, s.Bu);
      scatter(Cf, c * p.mu * I0, Sv, Sv);
      if (p.lambda_ext != 0.0) {
        scatter(Cf, c * p.lambda_ext, s.Vu, s.Vu);
        scatter(Cf, c * p.lambda_ext, s.Vw, s.Vw);
        scatter(Cf, c * p.lambda_ext * (I2 / I0), s.Vp, s.Vp);
      }

      const Form* F[4] = {&s.Bu, &s.Bw, &s.Vp, &s.Bp};
      for (const TermSpec& ts : specs) {
        const Form& test = *F[ts.test];
        const Form& f0 = *F[ts.f[0].form];
        const Form& f1 = *F[ts.f[1].form];
        for (int r = 0; r < 9; ++r) {
          if (test[r] == 0.0) continue;
          const double base = ts.coeff * c * test[r];
          for (int j = 0; j < 9; ++j) {
            if (f0[j] == 0.0) continue;
            for (int k = 0; k < 9; ++k) {
              if (f1[k] == 0.0) continue;
              const double v2 = base * f0[j] * f1[k];
              if (ts.nf == 2) {
                MonoKey key = {{loc[j], ts.f[0].dot}, {loc[k], ts.f[1].dot}};
                std::sort(key.begin(), key.end());
                fterms[{loc[r], std::move(key)}] += v2;
              } else {
                const Form& f2 = *F[ts.f[2].form];
                for (int l = 0; l < 9; ++l) {
                  if (f2[l] == 0.0) continue;
                  MonoKey key = {{loc[j], ts.f[0].dot},
                                 {loc[k], ts.f[1].dot},
                                 {loc[l], ts.f[2].dot}};
                  std::sort(key.begin(), key.end());
                  fterms[{loc[r], std::move(key)}] += v2 * f2[l];
                }
              }
            }
          }
        }
      }
    }
  }

  // clamp u(0), w(0), phi(0) and renumber the kept dofs
  std::vector<int> gidx(nfull, -1);
  int n = 0;
  for (int i = 0; i < nfull; ++i) {
    if (i == 0 || i == offw || i == offp) continue;
    gidx[i] = n++;
  }

  BeamAssembly out;
  out.I0 = I0;
  out.I2 = I2;
  out.m0 = m0;
  out.m2 = m2;
  out.axial.resize(offw);
  for (int i = 0; i < offw; ++i) out.axial[i] = gidx[i];
  out.transverse.resize(2 * m + 1);
  for (int i = 0; i < 2 * m + 1; ++i) out.transverse[i] = gidx[offw + i];
  out.rotation.resize(m + 1);
  for (int i = 0; i <= m; ++i) out.rotation[i] = gidx[offp + i];

  out.sys.n = n;
  out.sys.M.resize(n, n);
  out.sys.C.resize(n, n);
  out.sys.K.resize(n, n);
  for (int i = 0; i < nfull; ++i) {
    if (gidx[i] < 0) continue;
    for (int j = 0; j < nfull; ++j) {
      if (gidx[j] < 0) continue;
      out.sys.M(gidx[i], gidx[j]) = Mf(i, j);
      out.sys.C(gidx[i], gidx[j]) = Cf(i, j);
      out.sys.K(gidx[i], gidx[j]) = Kf(i, j);
    }
  }

  for (const auto& [rk, v] : fterms) {
    if (std::abs(v) <= 1e-300) continue;
    const auto& [row, key] = rk;
    if (gidx[row] < 0) continue;
    bool kept = true;
    for (const auto& [d, dot] : key)
      if (gidx[d] < 0) kept = false;
    if (!kept) continue;
    ForceTerm t;
    t.target_dof = gidx[row];
    t.coefficient = v;
    t.exponents.assign(2 * n, 0);
    for (const auto& [d, dot] : key) t.exponents[gidx[d] + dot * n] += 1;
    out.sys.nonlinearity.push_back(t);
  }

  out.sys.validate();
  return out;
}

double spectral_ratio_report(const BeamAssembly& assembly) {
  FirstOrderSystem fos = build_first_order(assembly.sys);
  if (fos.dim < 4)
    throw ConfigError("spectral_ratio_report: need at least two eigenpairs");
  Eigen::EigenSolver<Eigen::MatrixXd> es(fos.A);
  if (es.info() != Eigen::Success)
    throw DefectiveMatrix("spectral_ratio_report: eigendecomposition failed");
  std::vector<cd> lam(es.eigenvalues().data(), es.eigenvalues().data() + fos.dim);
  std::sort(lam.begin(), lam.end(), [](cd a, cd b) { return a.real() > b.real(); });
  return lam[2].real() / lam[0].real();
}

}  // namespace ssmkit
