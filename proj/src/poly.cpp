#include "ssmkit/poly.hpp"

#include <algorithm>
#include <unordered_map>

#include "ssmkit/errors.hpp"

namespace ssmkit {

namespace {

struct KeyHash {
  std::size_t operator()(const Key& k) const {
    std::size_t h = 1469598103934665603ull;
    for (int e : k) {
      h ^= static_cast<std::size_t>(e) + 0x9e3779b97f4a7c15ull;
      h *= 1099511628211ull;
    }
    return h;
  }
};

using KeyIndex = std::unordered_map<Key, int, KeyHash>;

KeyIndex index_of(const std::vector<Key>& keys) {
  KeyIndex m;
  m.reserve(keys.size() * 2);
  for (std::size_t j = 0; j < keys.size(); ++j) m.emplace(keys[j], static_cast<int>(j));
  return m;
}

}  // namespace

int PolyBlock::find(const Key& k) const {
  auto it = std::lower_bound(keys.begin(), keys.end(), k, key_before);
  if (it == keys.end() || *it != k) return -1;
  return static_cast<int>(it - keys.begin());
}

const PolyBlock* PolyMap::block(int order) const {
  auto it = blocks.find(order);
  return it == blocks.end() ? nullptr : &it->second;
}

Eigen::VectorXcd PolyMap::eval(const Eigen::VectorXcd& v) const {
  if (v.size() != in_dim) throw DimensionMismatch("eval: vector size != in_dim");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(out_dim);
  for (const auto& [order, blk] : blocks) {
    for (std::size_t j = 0; j < blk.keys.size(); ++j) {
      cd mono(1.0, 0.0);
      const Key& k = blk.keys[j];
      for (int var = 0; var < in_dim; ++var)
        for (int p = 0; p < k[var]; ++p) mono *= v[var];
      out += mono * blk.coeffs.col(static_cast<Eigen::Index>(j));
    }
  }
  return out;
}

Eigen::MatrixXcd PolyMap::jacobian(const Eigen::VectorXcd& v) const {
  if (v.size() != in_dim) throw DimensionMismatch("jacobian: vector size != in_dim");
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(out_dim, in_dim);
  for (const auto& [order, blk] : blocks) {
    for (std::size_t j = 0; j < blk.keys.size(); ++j) {
      const Key& k = blk.keys[j];
      for (int var = 0; var < in_dim; ++var) {
        if (k[var] == 0) continue;
        cd mono(static_cast<double>(k[var]), 0.0);
        for (int w = 0; w < in_dim; ++w) {
          int e = (w == var) ? k[w] - 1 : k[w];
          for (int p = 0; p < e; ++p) mono *= v[w];
        }
        out.col(var) += mono * blk.coeffs.col(static_cast<Eigen::Index>(j));
      }
    }
  }
  return out;
}

void PolyMap::prune(double tol) {
  for (auto it = blocks.begin(); it != blocks.end();) {
    PolyBlock& blk = it->second;
    std::vector<int> keep;
    for (std::size_t j = 0; j < blk.keys.size(); ++j)
      if (blk.coeffs.col(static_cast<Eigen::Index>(j)).cwiseAbs().maxCoeff() >= tol)
        keep.push_back(static_cast<int>(j));
    if (keep.empty()) {
      it = blocks.erase(it);
      continue;
    }
    if (keep.size() != blk.keys.size()) {
      std::vector<Key> nk;
      Eigen::MatrixXcd nc(blk.coeffs.rows(), static_cast<Eigen::Index>(keep.size()));
      for (std::size_t j = 0; j < keep.size(); ++j) {
        nk.push_back(blk.keys[static_cast<std::size_t>(keep[j])]);
        nc.col(static_cast<Eigen::Index>(j)) = blk.coeffs.col(keep[j]);
      }
      blk.keys = std::move(nk);
      blk.coeffs = std::move(nc);
    }
    ++it;
  }
}

void PolyBuilder::add(int row, const Key& k, cd c) {
  if (static_cast<int>(k.size()) != in_dim)
    throw DimensionMismatch("PolyBuilder::add: key size != in_dim");
  if (row < 0 || row >= out_dim) throw DimensionMismatch("PolyBuilder::add: row out of range");
  int deg = key_degree(k);
  auto [it, inserted] = staged.try_emplace(deg, key_before);
  auto [kit, kinserted] = it->second.try_emplace(k, Eigen::VectorXcd());
  if (kinserted) kit->second = Eigen::VectorXcd::Zero(out_dim);
  kit->second[row] += c;
}

PolyMap PolyBuilder::build() const {
  PolyMap p;
  p.in_dim = in_dim;
  p.out_dim = out_dim;
  for (const auto& [deg, keymap] : staged) {
    PolyBlock blk;
    blk.order = deg;
    blk.coeffs.resize(out_dim, static_cast<Eigen::Index>(keymap.size()));
    Eigen::Index j = 0;
    for (const auto& [k, col] : keymap) {
      blk.keys.push_back(k);
      blk.coeffs.col(j++) = col;
    }
    p.blocks.emplace(deg, std::move(blk));
  }
  return p;
}

PolyBlock make_full_block(int d, int out_dim, int order) {
  PolyBlock blk;
  blk.order = order;
  blk.keys = multiset_keys(d, order);
  blk.coeffs = Eigen::MatrixXcd::Zero(out_dim, static_cast<Eigen::Index>(blk.keys.size()));
  return blk;
}

PolyMap transform_linear(const PolyMap& F, const Eigen::MatrixXcd& T) {
  if (T.rows() != T.cols()) throw DimensionMismatch("transform_linear: T not square");
  if (F.in_dim != T.rows() || F.out_dim != T.rows())
    throw DimensionMismatch("transform_linear: T size != F dims");
  const int d = F.in_dim;

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(T);
  double cond = svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
  if (!(cond < 1e12))
    throw SingularTransform("transform_linear: condition number " + std::to_string(cond));
  Eigen::MatrixXcd Tinv = T.fullPivLu().inverse();

  PolyMap G;
  G.in_dim = d;
  G.out_dim = F.out_dim;

  for (const auto& [m, Fblk] : F.blocks) {
    // left side: rotate output coefficients once
    Eigen::MatrixXcd cols = Tinv * Fblk.coeffs;

    // key lists and incremental-degree transition tables for the substitution
    std::vector<std::vector<Key>> keys_by_deg(static_cast<std::size_t>(m) + 1);
    std::vector<KeyIndex> idx_by_deg(static_cast<std::size_t>(m) + 1);
    for (int g = 1; g <= m; ++g) {
      keys_by_deg[static_cast<std::size_t>(g)] = multiset_keys(d, g);
      idx_by_deg[static_cast<std::size_t>(g)] = index_of(keys_by_deg[static_cast<std::size_t>(g)]);
    }
    // bump[g][j*d + v] = index at degree g+1 of keys_by_deg[g][j] with var v incremented
    std::vector<std::vector<int>> bump(static_cast<std::size_t>(m));
    for (int g = 1; g < m; ++g) {
      const auto& keys = keys_by_deg[static_cast<std::size_t>(g)];
      auto& tbl = bump[static_cast<std::size_t>(g)];
      tbl.resize(keys.size() * static_cast<std::size_t>(d));
      for (std::size_t j = 0; j < keys.size(); ++j) {
        Key k = keys[j];
        for (int v = 0; v < d; ++v) {
          ++k[static_cast<std::size_t>(v)];
          tbl[j * static_cast<std::size_t>(d) + static_cast<std::size_t>(v)] =
              idx_by_deg[static_cast<std::size_t>(g) + 1].at(k);
          --k[static_cast<std::size_t>(v)];
        }
      }
    }

    PolyBlock out = make_full_block(d, F.out_dim, m);
    Eigen::VectorXcd work, next;
    for (std::size_t kcol = 0; kcol < Fblk.keys.size(); ++kcol) {
      const Key& e = Fblk.keys[kcol];
      // expand prod_j (T.row(j) q)^(e_j) one linear factor at a time
      int g = 0;
      for (int j = 0; j < d; ++j) {
        for (int rep = 0; rep < e[static_cast<std::size_t>(j)]; ++rep) {
          if (g == 0) {
            work = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(keys_by_deg[1].size()));
            // degree-1 keys are (1 at var v); descending lex puts var 0 first
            for (int v = 0; v < d; ++v) work[v] = T(j, v);
          } else {
            const auto& tbl = bump[static_cast<std::size_t>(g)];
            next = Eigen::VectorXcd::Zero(
                static_cast<Eigen::Index>(keys_by_deg[static_cast<std::size_t>(g) + 1].size()));
            for (Eigen::Index idx = 0; idx < work.size(); ++idx) {
              if (work[idx] == cd(0.0, 0.0)) continue;
              for (int v = 0; v < d; ++v)
                next[tbl[static_cast<std::size_t>(idx) * static_cast<std::size_t>(d) +
                         static_cast<std::size_t>(v)]] += work[idx] * T(j, v);
            }
            work.swap(next);
          }
          ++g;
        }
      }
      for (Eigen::Index t = 0; t < work.size(); ++t)
        if (work[t] != cd(0.0, 0.0))
          out.coeffs.col(t) += work[t] * cols.col(static_cast<Eigen::Index>(kcol));
    }
    G.blocks.emplace(m, std::move(out));
  }
  G.prune();
  return G;
}

std::vector<std::pair<Key, cd>> lambda_tilde_diag(cd l1, cd l2, int i) {
  std::vector<std::pair<Key, cd>> out;
  for (const Key& k : multiset_keys(2, i))
    out.emplace_back(k, static_cast<double>(k[0]) * l1 + static_cast<double>(k[1]) * l2);
  return out;
}

PolyBlock kron_compose(const std::vector<const PolyBlock*>& factors, int total_order) {
  if (factors.empty()) throw DimensionMismatch("kron_compose: no factors");
  int sum = 0;
  Eigen::Index rows = 1;
  for (const PolyBlock* f : factors) {
    sum += f->order;
    rows *= f->coeffs.rows();
  }
  if (sum != total_order) throw DimensionMismatch("kron_compose: factor orders do not sum");
  const int d = static_cast<int>(factors[0]->keys.empty() ? 0 : factors[0]->keys[0].size());

  PolyBlock out = make_full_block(d, static_cast<int>(rows), total_order);
  KeyIndex idx = index_of(out.keys);

  // recursive walk over one key choice per factor
  auto walk = [&](auto&& self, std::size_t fi, const Key& ksum,
                  const Eigen::VectorXcd& kron) -> void {
    if (fi == factors.size()) {
      out.coeffs.col(idx.at(ksum)) += kron;
      return;
    }
    const PolyBlock* f = factors[fi];
    for (std::size_t j = 0; j < f->keys.size(); ++j) {
      Key ks = ksum;
      for (int v = 0; v < d; ++v) ks[static_cast<std::size_t>(v)] += f->keys[j][static_cast<std::size_t>(v)];
      const auto col = f->coeffs.col(static_cast<Eigen::Index>(j));
      Eigen::VectorXcd next(kron.size() * col.size());
      for (Eigen::Index a = 0; a < kron.size(); ++a)
        next.segment(a * col.size(), col.size()) = kron[a] * col;
      self(self, fi + 1, ks, next);
    }
  };
  Eigen::VectorXcd one(1);
  one[0] = cd(1.0, 0.0);
  walk(walk, 0, Key(static_cast<std::size_t>(d), 0), one);
  return out;
}

ZPoly::ZPoly(int cap) : cap_(cap), stride_(2 * cap + 1) {
  c_ = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(stride_) * (cap_ + 1));
}

bool ZPoly::is_zero() const {
  for (Eigen::Index i = 0; i < c_.size(); ++i)
    if (c_[i] != cd(0.0, 0.0)) return false;
  return true;
}

ZPoly zp_mul(const ZPoly& x, const ZPoly& y) {
  if (x.cap() != y.cap()) throw DimensionMismatch("zp_mul: cap mismatch");
  ZPoly out(x.cap());
  const Eigen::Index len = out.flat().size();
  const auto& xf = x.flat();
  const auto& yf = y.flat();
  for (Eigen::Index i = 0; i < len; ++i) {
    if (xf[i] == cd(0.0, 0.0)) continue;
    const Eigen::Index jmax = len - i;
    out.flat().segment(i, jmax) += xf[i] * yf.head(jmax);
  }
  // truncate total degree > cap
  const int stride = out.stride();
  for (int b = 0; b <= out.cap(); ++b)
    for (int a = 0; a < stride; ++a)
      if (a + b > out.cap()) out.flat()[a + b * stride] = cd(0.0, 0.0);
  return out;
}

std::vector<ZPoly> to_zpolys(const PolyMap& W, int cap, int upto_order) {
  if (W.in_dim != 2) throw DimensionMismatch("to_zpolys: in_dim must be 2");
  std::vector<ZPoly> out(static_cast<std::size_t>(W.out_dim), ZPoly(cap));
  for (const auto& [order, blk] : W.blocks) {
    if (order > upto_order || order > cap) continue;
    for (std::size_t j = 0; j < blk.keys.size(); ++j) {
      int a = blk.keys[j][0], b = blk.keys[j][1];
      for (int row = 0; row < W.out_dim; ++row)
        out[static_cast<std::size_t>(row)].add(a, b,
                                               blk.coeffs(row, static_cast<Eigen::Index>(j)));
    }
  }
  return out;
}

PolyMap compose(const PolyMap& G, const PolyMap& W, int cap, int upto_w) {
  if (W.in_dim != 2) throw DimensionMismatch("compose: W.in_dim must be 2");
  if (G.in_dim != W.out_dim) throw DimensionMismatch("compose: G.in_dim != W.out_dim");
  std::vector<ZPoly> u = to_zpolys(W, cap, upto_w);

  PolyMap out;
  out.in_dim = 2;
  out.out_dim = G.out_dim;
  std::map<int, PolyBlock> acc;

  std::unordered_map<long long, ZPoly> pair_cache;
  auto pair_of = [&](int i, int j) -> const ZPoly& {
    if (i > j) std::swap(i, j);
    long long ckey = static_cast<long long>(i) * G.in_dim + j;
    auto it = pair_cache.find(ckey);
    if (it == pair_cache.end())
      it = pair_cache.emplace(ckey, zp_mul(u[static_cast<std::size_t>(i)],
                                           u[static_cast<std::size_t>(j)])).first;
    return it->second;
  };

  for (const auto& [m, blk] : G.blocks) {
    for (std::size_t kcol = 0; kcol < blk.keys.size(); ++kcol) {
      const Key& e = blk.keys[kcol];
      std::vector<int> vars;
      for (int v = 0; v < G.in_dim; ++v)
        for (int r = 0; r < e[static_cast<std::size_t>(v)]; ++r) vars.push_back(v);
      ZPoly P(cap);
      if (vars.size() == 1) {
        P = u[static_cast<std::size_t>(vars[0])];
      } else {
        P = pair_of(vars[0], vars[1]);
        for (std::size_t t = 2; t < vars.size(); ++t)
          P = zp_mul(P, u[static_cast<std::size_t>(vars[t])]);
      }
      const int stride = P.stride();
      for (int deg = static_cast<int>(vars.size()); deg <= cap; ++deg) {
        for (int b = 0; b <= deg; ++b) {
          int a = deg - b;
          cd val = P.flat()[a + b * stride];
          if (val == cd(0.0, 0.0)) continue;
          auto it = acc.find(deg);
          if (it == acc.end())
            it = acc.emplace(deg, make_full_block(2, G.out_dim, deg)).first;
          // full degree-deg key list is (deg,0), (deg-1,1), ..., so (a,b) sits at column b
          it->second.coeffs.col(b) += val * blk.coeffs.col(static_cast<Eigen::Index>(kcol));
        }
      }
    }
  }
  out.blocks = std::move(acc);
  out.prune();
  return out;
}

PolyMap jac_times(const PolyMap& W, const PolyMap& R, int cap) {
  if (W.in_dim != 2 || R.in_dim != 2) throw DimensionMismatch("jac_times: in_dim must be 2");
  if (R.out_dim != 2) throw DimensionMismatch("jac_times: R.out_dim must be 2");
  std::map<int, PolyBlock> acc;
  auto add = [&](int a, int b, const Eigen::VectorXcd& col) {
    int deg = a + b;
    if (deg > cap || deg < 0) return;
    auto it = acc.find(deg);
    if (it == acc.end()) it = acc.emplace(deg, make_full_block(2, W.out_dim, deg)).first;
    it->second.coeffs.col(b) += col;  // column b is key (deg-b, b)
  };
  for (const auto& [m, wblk] : W.blocks) {
    for (std::size_t wj = 0; wj < wblk.keys.size(); ++wj) {
      const int alpha = wblk.keys[wj][0], beta = wblk.keys[wj][1];
      const auto wcol = wblk.coeffs.col(static_cast<Eigen::Index>(wj));
      for (const auto& [r, rblk] : R.blocks) {
        for (std::size_t rj = 0; rj < rblk.keys.size(); ++rj) {
          const int a2 = rblk.keys[rj][0], b2 = rblk.keys[rj][1];
          cd r1 = rblk.coeffs(0, static_cast<Eigen::Index>(rj));
          cd r2 = rblk.coeffs(1, static_cast<Eigen::Index>(rj));
          if (alpha > 0 && r1 != cd(0.0, 0.0))
            add(alpha - 1 + a2, beta + b2, (static_cast<double>(alpha) * r1) * wcol);
          if (beta > 0 && r2 != cd(0.0, 0.0))
            add(alpha + a2, beta - 1 + b2, (static_cast<double>(beta) * r2) * wcol);
        }
      }
    }
  }
  PolyMap out;
  out.in_dim = 2;
  out.out_dim = W.out_dim;
  out.blocks = std::move(acc);
  out.prune();
  return out;
}

}  // namespace ssmkit
