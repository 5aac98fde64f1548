#pragma once

#include <set>
#include <string>
#include <vector>

#include "ssmkit/poly.hpp"
#include "ssmkit/spectral.hpp"

namespace ssmkit {

// An E-row slot whose coefficient was transferred from W into R.
struct ResonantSlot {
  int order = 0;
  int row = 0;  // 0 or 1
  int a = 0;
  int b = 0;
};

// Taylor expansion of the manifold map W: C^2 -> C^{2n} (modal coordinates)
// and the reduced dynamics R: C^2 -> C^2, both to order n_w.
struct SSMExpansion {
  int order = 0;  // highest solved order
  PolyMap W;
  PolyMap R;
  std::vector<ResonantSlot> resonant;
  ModalSystem modal;
  std::vector<std::string> warnings;

  std::vector<ResonantSlot> resonant_at(int ord) const;
};

// Right-hand side of the order-i equations: coupling of lower-order W with
// lower-order R minus the degree-i part of G composed with the partial W.
// Full block over all degree-i keys in 2 variables.
PolyBlock assemble_B(int i, const SSMExpansion& partial, const PolyMap& G);

struct OrderSolution {
  PolyBlock W;  // 2n rows
  PolyBlock R;  // 2 rows
  std::vector<ResonantSlot> resonant;
};

// Entry-wise solve of the diagonal order-i equations d * W = R + B with
// d(l,a,b) = lambda_l - (a lambda_1 + b lambda_2). Flagged or exactly
// resonant E-row slots move -B into R and zero the W entry.
OrderSolution solve_order(int i, const PolyBlock& B, const ModalSystem& ms,
                          const ResonanceReport& report);

// Solve orders 2..n_w sequentially on top of W_1 = [I;0], R_1 = diag(Lambda_E).
SSMExpansion compute_ssm(const ModalSystem& ms, int n_w, double delta);

struct MemoryEstimate {
  int n = 0;
  int order = 0;
  std::vector<double> bytes_per_order;  // 8 * summand for m = 2..i-1
  double total_bytes = 0.0;
};

// Memory the dense Kronecker assembly of order i would need, with the
// G-dependent terms restricted to the polynomial orders actually present.
MemoryEstimate memory_estimate(int n, int i, const std::set<int>& present_G_orders);

}  // namespace ssmkit
