#pragma once

#include <cstdint>
#include <vector>

namespace ssmkit {

// Exponent tuple of a monomial over d variables; degree = sum of entries.
using Key = std::vector<int>;

int key_degree(const Key& k);

// true if a precedes b in the deterministic block ordering
// (descending lexicographic on exponent tuples).
bool key_before(const Key& a, const Key& b);

// Number of monomials of total degree i in d variables: binomial(i+d-1, i).
// Throws OverflowError if the count exceeds the signed 64-bit range.
std::int64_t multiset_count(int d, int i);

// All degree-i exponent tuples over d variables in descending lexicographic
// order, e.g. d=2, i=2 -> (2,0), (1,1), (0,2).
std::vector<Key> multiset_keys(int d, int i);

// Number of ways to write i as an ordered sum of m positive integers:
// binomial(i-1, m-1).
std::int64_t composition_count(int m, int i);

// binomial(n, k) with overflow detection.
std::int64_t binomial(std::int64_t n, std::int64_t k);

}  // namespace ssmkit
