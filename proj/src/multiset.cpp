#include "ssmkit/multiset.hpp"

#include <algorithm>
#include <limits>

#include "ssmkit/errors.hpp"

namespace ssmkit {

int key_degree(const Key& k) {
  int s = 0;
  for (int e : k) s += e;
  return s;
}

bool key_before(const Key& a, const Key& b) {
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

std::int64_t binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 res = 1;
  for (std::int64_t j = 1; j <= k; ++j) {
    res = res * static_cast<unsigned __int128>(n - k + j);
    res /= static_cast<unsigned __int128>(j);
    if (res > static_cast<unsigned __int128>(std::numeric_limits<std::int64_t>::max()))
      throw OverflowError("binomial(" + std::to_string(n) + "," + std::to_string(k) +
                          ") exceeds 64-bit range");
  }
  return static_cast<std::int64_t>(res);
}

std::int64_t multiset_count(int d, int i) {
  if (d < 1 || i < 1) throw ConfigError("multiset_count requires d >= 1, i >= 1");
  return binomial(static_cast<std::int64_t>(i) + d - 1, i);
}

namespace {

void gen_keys(int d, int remaining, Key& partial, std::vector<Key>& out) {
  if (d == 1) {
    partial.push_back(remaining);
    out.push_back(partial);
    partial.pop_back();
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    partial.push_back(e);
    gen_keys(d - 1, remaining - e, partial, out);
    partial.pop_back();
  }
}

}  // namespace

std::vector<Key> multiset_keys(int d, int i) {
  if (d < 1 || i < 0) throw ConfigError("multiset_keys requires d >= 1, i >= 0");
  std::vector<Key> out;
  Key partial;
  partial.reserve(d);
  gen_keys(d, i, partial, out);
  return out;
}

std::int64_t composition_count(int m, int i) {
  if (m < 1 || i < 1) throw ConfigError("composition_count requires m >= 1, i >= 1");
  return binomial(static_cast<std::int64_t>(i) - 1, static_cast<std::int64_t>(m) - 1);
}

}  // namespace ssmkit
