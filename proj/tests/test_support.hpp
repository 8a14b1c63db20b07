#pragma once

// Test-only oracles, kept deliberately independent of the library's
// production code paths.

#include <cstdint>
#include <vector>

#include "detlab/bigint.hpp"
#include "detlab/ensemble.hpp"

namespace detlab::test {

/// O(n!) cofactor-expansion determinant; the brute-force reference engine.
inline BigInt naive_det(const std::vector<std::vector<BigInt>>& a) {
  const std::size_t n = a.size();
  if (n == 1) return a[0][0];
  BigInt acc = 0;
  for (std::size_t col = 0; col < n; ++col) {
    if (a[0][col] == 0) continue;
    std::vector<std::vector<BigInt>> sub(n - 1, std::vector<BigInt>(n - 1));
    for (std::size_t i = 1; i < n; ++i) {
      std::size_t jj = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == col) continue;
        sub[i - 1][jj++] = a[i][j];
      }
    }
    const BigInt term = a[0][col] * naive_det(sub);
    acc += (col % 2 == 0) ? term : -term;
  }
  return acc;
}

inline BigInt naive_det(const SignedTernaryMatrix& m) {
  const std::size_t n = m.dim();
  std::vector<std::vector<BigInt>> a(n, std::vector<BigInt>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i][j] = m(i, j);
  return naive_det(a);
}

}  // namespace detlab::test
