#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <utility>
#include <vector>

#include "ssmkit/multiset.hpp"

namespace ssmkit {

using cd = std::complex<double>;

// One homogeneous-degree coefficient block: keys are distinct monomials,
// coeffs column j holds the out_dim coefficient vector of keys[j].
struct PolyBlock {
  int order = 0;
  std::vector<Key> keys;    // descending lexicographic
  Eigen::MatrixXcd coeffs;  // out_dim x keys.size()

  int find(const Key& k) const;  // column index, -1 if absent
};

// Polynomial map C^in_dim -> C^out_dim stored per order in compressed
// multiset-monomial form.
struct PolyMap {
  int in_dim = 0;
  int out_dim = 0;
  std::map<int, PolyBlock> blocks;

  bool empty() const { return blocks.empty(); }
  int max_order() const { return blocks.empty() ? 0 : blocks.rbegin()->first; }
  const PolyBlock* block(int order) const;

  Eigen::VectorXcd eval(const Eigen::VectorXcd& v) const;
  // Exact polynomial Jacobian at v, out_dim x in_dim.
  Eigen::MatrixXcd jacobian(const Eigen::VectorXcd& v) const;

  // Drop coefficients with modulus below tol and empty blocks.
  void prune(double tol = 1e-300);
};

// Incremental construction helper keeping keys deduplicated and ordered.
struct PolyBuilder {
  int in_dim = 0;
  int out_dim = 0;
  std::map<int, std::map<Key, Eigen::VectorXcd, bool (*)(const Key&, const Key&)>> staged;

  PolyBuilder(int in_dim_, int out_dim_) : in_dim(in_dim_), out_dim(out_dim_) {}
  void add(int row, const Key& k, cd c);
  PolyMap build() const;
};

// Block over all multiset_count(d, order) keys with zero coefficients.
PolyBlock make_full_block(int d, int out_dim, int order);

// G(q) = T^{-1} F(T q), collapsed onto multiset keys order by order.
// Throws SingularTransform if cond(T) > 1e12.
PolyMap transform_linear(const PolyMap& F, const Eigen::MatrixXcd& T);

// Diagonal of the compressed order-i linear action of the master pair:
// (key (a,b), a*l1 + b*l2) over all degree-i keys in two variables.
std::vector<std::pair<Key, cd>> lambda_tilde_diag(cd l1, cd l2, int i);

// Literal Kronecker composition: the compressed order-total block whose dense
// form is (W_{r1} z^(x r1)) (x) ... (x) (W_{rm} z^(x rm)). Output row count is
// the product of factor output dims; meant for small blocks (tests, oracles).
PolyBlock kron_compose(const std::vector<const PolyBlock*>& factors, int total_order);

// Dense truncated polynomial in two variables; monomial (a,b) lives at flat
// index a + b*stride. stride = 2*cap+1 keeps one convolution alias-free
// before the degree-cap truncation is applied.
class ZPoly {
 public:
  explicit ZPoly(int cap);
  int cap() const { return cap_; }
  int stride() const { return stride_; }
  cd get(int a, int b) const { return c_[a + b * stride_]; }
  void add(int a, int b, cd v) { c_[a + b * stride_] += v; }
  const Eigen::VectorXcd& flat() const { return c_; }
  Eigen::VectorXcd& flat() { return c_; }
  bool is_zero() const;

 private:
  int cap_;
  int stride_;
  Eigen::VectorXcd c_;
};

// Product truncated to total degree <= cap.
ZPoly zp_mul(const ZPoly& x, const ZPoly& y);

// Scalar component polynomials of W (in_dim 2) up to block order upto_order.
std::vector<ZPoly> to_zpolys(const PolyMap& W, int cap, int upto_order);

// Composition G(W(z)) truncated at total degree cap; W in_dim must be 2 and
// W orders above upto_w are ignored (pass W.max_order() for the full map).
PolyMap compose(const PolyMap& G, const PolyMap& W, int cap, int upto_w);

// The directional-derivative polynomial (d W / d z) * R(z) truncated at cap;
// W, R share in_dim 2 and R.out_dim must be 2.
PolyMap jac_times(const PolyMap& W, const PolyMap& R, int cap);

}  // namespace ssmkit
