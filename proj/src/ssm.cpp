#include "ssmkit/ssm.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "ssmkit/errors.hpp"
#include "ssmkit/multiset.hpp"

namespace ssmkit {

std::vector<ResonantSlot> SSMExpansion::resonant_at(int ord) const {
  std::vector<ResonantSlot> out;
  for (const ResonantSlot& s : resonant)
    if (s.order == ord) out.push_back(s);
  return out;
}

PolyBlock assemble_B(int i, const SSMExpansion& partial, const PolyMap& G) {
  if (i < 2) throw ConfigError("assemble_B: order must be >= 2");
  if (partial.order < i - 1)
    throw MissingLowerOrder("assemble_B: expansion solved to order " +
                            std::to_string(partial.order) + ", order " + std::to_string(i) +
                            " needs all lower orders");
  const int dim = partial.modal.dim > 0 ? partial.modal.dim : partial.W.out_dim;

  PolyBlock B = make_full_block(2, dim, i);

  // lower-order W against lower-order R: degree-i part of the Jacobian product
  PolyMap coupling = jac_times(partial.W, partial.R, i);
  if (const PolyBlock* cb = coupling.block(i)) {
    for (int c = 0; c < static_cast<int>(cb->keys.size()); ++c) {
      int col = B.find(cb->keys[static_cast<std::size_t>(c)]);
      B.coeffs.col(col) += cb->coeffs.col(c);
    }
  }

  // degree-i part of G composed with W truncated below order i
  PolyMap gw = compose(G, partial.W, i, i - 1);
  if (const PolyBlock* gb = gw.block(i)) {
    for (int c = 0; c < static_cast<int>(gb->keys.size()); ++c) {
      int col = B.find(gb->keys[static_cast<std::size_t>(c)]);
      B.coeffs.col(col) -= gb->coeffs.col(c);
    }
  }
  return B;
}

OrderSolution solve_order(int i, const PolyBlock& B, const ModalSystem& ms,
                          const ResonanceReport& report) {
  const int dim = ms.dim;
  OrderSolution sol;
  sol.W = make_full_block(2, dim, i);
  sol.R = make_full_block(2, 2, i);

  const cd l1 = ms.lambda1();
  const cd l2 = ms.lambda2();
  for (int c = 0; c < static_cast<int>(sol.W.keys.size()); ++c) {
    const Key& key = sol.W.keys[static_cast<std::size_t>(c)];
    const int a = key[0], b = key[1];
    const cd combo = static_cast<double>(a) * l1 + static_cast<double>(b) * l2;
    for (int l = 0; l < dim; ++l) {
      const cd lam = ms.lambdas[l];
      const cd d = lam - combo;
      const cd Bv = B.coeffs(l, c);
      const bool exact = std::abs(d) < 1e-10 * std::abs(lam);
      if (l < 2) {
        if (report.flagged_inner(l, a, b) || exact) {
          sol.R.coeffs(l, c) = -Bv;
          sol.resonant.push_back({i, l, a, b});
          continue;
        }
        sol.W.coeffs(l, c) = Bv / d;
      } else {
        if (exact) {
          if (std::abs(Bv) > 1e-300)
            throw OuterResonanceBreakdown(
                i, a, b, lam,
                "outer resonance at order " + std::to_string(i) + ", key (" +
                    std::to_string(a) + "," + std::to_string(b) + "): " +
                    std::to_string(a) + "*lambda_1 + " + std::to_string(b) +
                    "*lambda_2 coincides with an outer eigenvalue");
          continue;  // zero forcing in a singular direction: keep W entry 0
        }
        sol.W.coeffs(l, c) = Bv / d;
      }
    }
  }
  return sol;
}

namespace {

// rough footprint of the collapsed coefficient storage
double collapsed_bytes(int dim, int n_w) {
  double total = 0.0;
  for (int i = 1; i <= n_w; ++i) total += 16.0 * (dim + 2) * (i + 1);
  // composition workspace: one cached polynomial per component pair
  total += 16.0 * dim * dim * (2.0 * n_w + 1) * (n_w + 1);
  return total;
}

}  // namespace

SSMExpansion compute_ssm(const ModalSystem& ms, int n_w, double delta) {
  if (n_w < 2) throw ConfigError("compute_ssm: expansion order must be >= 2");
  if (n_w > 25) throw ConfigError("compute_ssm: expansion order capped at 25");
  if (collapsed_bytes(ms.dim, n_w) > 16.0 * 1024 * 1024 * 1024)
    throw ConfigError("compute_ssm: coefficient storage would exceed 16 GB");

  ResonanceReport report = resonance_scan(ms, delta, n_w);

  SSMExpansion exp;
  exp.modal = ms;
  exp.W.in_dim = 2;
  exp.W.out_dim = ms.dim;
  exp.R.in_dim = 2;
  exp.R.out_dim = 2;

  if (delta >= 0.1)
    exp.warnings.push_back("delta = " + std::to_string(delta) +
                           " is large; the resonance measure tops out at 1");
  SpectralQuotients q = spectral_quotients(ms);
  if (n_w < q.sigma_out + 1)
    exp.warnings.push_back("expansion order " + std::to_string(n_w) +
                           " is below sigma_out + 1 = " + std::to_string(q.sigma_out + 1) +
                           "; the computed manifold is not the unique smoothest one");

  PolyBlock W1 = make_full_block(2, ms.dim, 1);
  W1.coeffs(0, 0) = 1.0;  // key (1,0) -> first master coordinate
  W1.coeffs(1, 1) = 1.0;  // key (0,1) -> second
  exp.W.blocks.emplace(1, std::move(W1));

  PolyBlock R1 = make_full_block(2, 2, 1);
  R1.coeffs(0, 0) = ms.lambda1();
  R1.coeffs(1, 1) = ms.lambda2();
  exp.R.blocks.emplace(1, std::move(R1));
  exp.order = 1;

  for (int i = 2; i <= n_w; ++i) {
    PolyBlock B = assemble_B(i, exp, ms.G);
    OrderSolution sol = solve_order(i, B, ms, report);
    exp.W.blocks.emplace(i, std::move(sol.W));
    exp.R.blocks.emplace(i, std::move(sol.R));
    for (const ResonantSlot& s : sol.resonant) exp.resonant.push_back(s);
    exp.order = i;
  }
  exp.W.prune();
  exp.R.prune();
  return exp;
}

MemoryEstimate memory_estimate(int n, int i, const std::set<int>& present_G_orders) {
  if (i < 3) throw ConfigError("memory_estimate: order must be >= 3");
  MemoryEstimate est;
  est.n = n;
  est.order = i;
  const double dim = 2.0 * n;
  for (int m = 2; m <= i - 1; ++m) {
    double term = dim * std::ldexp(1.0, m) + m * std::ldexp(1.0, m + i);
    if (present_G_orders.count(m)) {
      term += std::pow(dim, m + 1);
      term += std::pow(dim, m) * std::ldexp(1.0, i) *
              static_cast<double>(binomial(i - 1, m - 1));
    }
    est.bytes_per_order.push_back(8.0 * term);
    est.total_bytes += 8.0 * term;
  }
  return est;
}

}  // namespace ssmkit
