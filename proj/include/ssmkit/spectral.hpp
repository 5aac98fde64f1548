#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "ssmkit/model.hpp"
#include "ssmkit/poly.hpp"

namespace ssmkit {

// Which eigenpair spans the master subspace: the slowest-decaying pair by
// default, or an explicit 1-based pair index in decreasing-Re order.
struct MasterSelector {
  std::optional<int> pair_index;  // empty = slowest
  static MasterSelector slowest() { return {}; }
  static MasterSelector pair(int index_1based) { return {index_1based}; }
};

// Diagonalized first-order system with the master pair in columns 1,2.
struct ModalSystem {
  int dim = 0;                // 2n
  Eigen::VectorXcd lambdas;   // ordered: master pair first, then decreasing Re
  Eigen::MatrixXcd T;         // eigenvectors as columns, same order
  Eigen::MatrixXcd T_inv;
  PolyMap G;                  // T^{-1} F(T q)
  bool master_conjugate = false;  // true when the master pair is a complex pair

  cd lambda1() const { return lambdas[0]; }
  cd lambda2() const { return lambdas[1]; }
  // eigenvalues outside the master subspace
  Eigen::VectorXcd lambda_C() const { return lambdas.tail(dim - 2); }
};

ModalSystem decompose(const FirstOrderSystem& fos, const MasterSelector& master);

struct SpectralQuotients {
  int sigma_out = 0;
  int sigma_in = 0;
};

SpectralQuotients spectral_quotients(const ModalSystem& ms);

struct ResonanceEntry {
  int a = 0;
  int b = 0;
  cd lambda_l;
  int lambda_index = 0;  // position in ms.lambdas
  bool inner = false;
  double I = 0.0;
  int order = 0;  // a + b
};

struct ResonanceReport {
  double delta = 0.0;
  std::vector<ResonanceEntry> entries;

  bool flagged_inner(int row, int a, int b) const;  // row 0 or 1 of the master pair
};

// Closeness of a*l1 + b*l2 to lambda_l, scale-invariant in [0, 1].
double resonance_measure(int a, int b, cd l1, cd l2, cd lambda_l);

// Scan all keys 2 <= a+b <= max_order against every eigenvalue; entries with
// I < delta are reported (inner for the master pair, outer otherwise).
ResonanceReport resonance_scan(const ModalSystem& ms, double delta, int max_order);

}  // namespace ssmkit
