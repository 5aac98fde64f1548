#include "ssmkit/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ssmkit/errors.hpp"

namespace ssmkit {

namespace {

struct EigenPair {
  cd lambda;
  Eigen::VectorXcd v;
};

// Normalize so the largest-modulus position component (first n entries)
// equals exactly 1; ties within 1e-9 relative break to the lowest index.
void normalize_position(Eigen::VectorXcd& v, int n) {
  double best = 0.0;
  for (int i = 0; i < n; ++i) best = std::max(best, std::abs(v[i]));
  if (best == 0.0) throw DefectiveMatrix("eigenvector has zero position part");
  int pick = -1;
  for (int i = 0; i < n; ++i) {
    if (std::abs(v[i]) >= best * (1.0 - 1e-9)) {
      pick = i;
      break;
    }
  }
  v /= v[pick];
}

}  // namespace

ModalSystem decompose(const FirstOrderSystem& fos, const MasterSelector& master) {
  const int dim = fos.dim;
  const int n = dim / 2;

  Eigen::EigenSolver<Eigen::MatrixXd> es(fos.A);
  if (es.info() != Eigen::Success) throw DefectiveMatrix("eigendecomposition failed");

  double anorm = fos.A.norm();
  for (int i = 0; i < dim; ++i)
    if (!(es.eigenvalues()[i].real() < -1e-12 * anorm))
      throw UnstableSpectrum("eigenvalue with nonnegative real part: " +
                             std::to_string(es.eigenvalues()[i].real()));

  // group into conjugate pairs / real singletons, sorted by decreasing Re
  const double imag_tol = 1e-12 * anorm;
  std::vector<int> order(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    cd la = es.eigenvalues()[a], lb = es.eigenvalues()[b];
    if (la.real() != lb.real()) return la.real() > lb.real();
    return la.imag() > lb.imag();
  });

  std::vector<bool> used(static_cast<std::size_t>(dim), false);
  std::vector<std::vector<EigenPair>> groups;  // pair = {upper, conj} or {real}
  for (int oi = 0; oi < dim; ++oi) {
    int i = order[static_cast<std::size_t>(oi)];
    if (used[static_cast<std::size_t>(i)]) continue;
    used[static_cast<std::size_t>(i)] = true;
    cd li = es.eigenvalues()[i];
    Eigen::VectorXcd vi = es.eigenvectors().col(i);
    if (std::abs(li.imag()) <= imag_tol) {
      normalize_position(vi, n);
      groups.push_back({{cd(li.real(), 0.0), vi}});
      continue;
    }
    // find the unused conjugate partner closest to conj(li)
    int match = -1;
    double bestd = std::numeric_limits<double>::infinity();
    for (int j = 0; j < dim; ++j) {
      if (used[static_cast<std::size_t>(j)] || j == i) continue;
      double dist = std::abs(es.eigenvalues()[j] - std::conj(li));
      if (dist < bestd) {
        bestd = dist;
        match = j;
      }
    }
    if (match < 0 || bestd > 1e-6 * std::abs(li))
      throw DefectiveMatrix("complex eigenvalue without conjugate partner");
    used[static_cast<std::size_t>(match)] = true;
    if (li.imag() < 0) {  // keep the Im > 0 member first
      li = std::conj(li);
      vi = vi.conjugate();
    }
    normalize_position(vi, n);
    groups.push_back({{li, vi}, {std::conj(li), vi.conjugate()}});
  }

  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
    if (a[0].lambda.real() != b[0].lambda.real())
      return a[0].lambda.real() > b[0].lambda.real();
    return a[0].lambda.imag() > b[0].lambda.imag();
  });

  int master_group = 0;
  if (master.pair_index) {
    int idx = *master.pair_index;
    if (idx < 1 || idx > static_cast<int>(groups.size()))
      throw ConfigError("master pair index out of range");
    master_group = idx - 1;
  }

  ModalSystem ms;
  ms.dim = dim;
  ms.lambdas.resize(dim);
  ms.T.resize(dim, dim);
  int col = 0;
  auto emit = [&](const EigenPair& p) {
    ms.lambdas[col] = p.lambda;
    ms.T.col(col) = p.v;
    ++col;
  };
  for (const EigenPair& p : groups[static_cast<std::size_t>(master_group)]) emit(p);
  if (col < 2)
    throw RealMasterPairUnsupported(
        "master mode is a real eigenvalue, not a two-dimensional pair");
  for (int g = 0; g < static_cast<int>(groups.size()); ++g) {
    if (g == master_group) continue;
    for (const EigenPair& p : groups[static_cast<std::size_t>(g)]) emit(p);
  }
  ms.master_conjugate = std::abs(ms.lambdas[1] - std::conj(ms.lambdas[0])) <=
                        1e-10 * std::abs(ms.lambdas[0]);

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(ms.T);
  double cond = svd.singularValues()(0) / svd.singularValues()(dim - 1);
  if (!(cond < 1e10))
    throw DefectiveMatrix("modal matrix condition number " + std::to_string(cond) +
                          " exceeds semisimplicity threshold");
  ms.T_inv = ms.T.fullPivLu().inverse();

  if (!fos.F.empty()) {
    Eigen::MatrixXcd Tc = ms.T;
    ms.G = transform_linear(fos.F, Tc);
  } else {
    ms.G.in_dim = dim;
    ms.G.out_dim = dim;
  }
  return ms;
}

namespace {

int integer_part(double x) { return static_cast<int>(std::floor(x + 1e-9)); }

}  // namespace

SpectralQuotients spectral_quotients(const ModalSystem& ms) {
  double maxE = std::max(ms.lambda1().real(), ms.lambda2().real());
  double minE = std::min(ms.lambda1().real(), ms.lambda2().real());
  Eigen::VectorXcd lc = ms.lambda_C();
  double minC = 0.0;
  for (int i = 0; i < lc.size(); ++i) minC = std::min(minC, lc[i].real());
  SpectralQuotients q;
  q.sigma_out = integer_part(minC / maxE);
  q.sigma_in = integer_part(minE / maxE);
  return q;
}

double resonance_measure(int a, int b, cd l1, cd l2, cd lambda_l) {
  double num = std::abs(static_cast<double>(a) * l1 + static_cast<double>(b) * l2 - lambda_l);
  double cn = std::sqrt(static_cast<double>(a) * a + static_cast<double>(b) * b + 1.0);
  double vn = std::sqrt(std::norm(l1) + std::norm(l2) + std::norm(lambda_l));
  return num / (cn * vn);
}

bool ResonanceReport::flagged_inner(int row, int a, int b) const {
  for (const ResonanceEntry& e : entries)
    if (e.inner && e.lambda_index == row && e.a == a && e.b == b) return true;
  return false;
}

ResonanceReport resonance_scan(const ModalSystem& ms, double delta, int max_order) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("resonance_scan: delta must be in (0,1)");
  ResonanceReport rep;
  rep.delta = delta;
  for (int ord = 2; ord <= max_order; ++ord) {
    for (int a = ord; a >= 0; --a) {
      int b = ord - a;
      for (int l = 0; l < ms.dim; ++l) {
        double I = resonance_measure(a, b, ms.lambda1(), ms.lambda2(), ms.lambdas[l]);
        if (I < delta) {
          ResonanceEntry e;
          e.a = a;
          e.b = b;
          e.lambda_l = ms.lambdas[l];
          e.lambda_index = l;
          e.inner = (l < 2);
          e.I = I;
          e.order = ord;
          rep.entries.push_back(e);
        }
      }
    }
  }
  return rep;
}

}  // namespace ssmkit
