#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "detlab/arith.hpp"
#include "detlab/bigint.hpp"
#include "detlab/ensemble.hpp"
#include "detlab/errors.hpp"

namespace detlab {

// ---------------------------------------------------------------------------
// Exact determinant over Z: fraction-free elimination
// ---------------------------------------------------------------------------

/// Bareiss fraction-free elimination.  Every division is exact, so the whole
/// computation stays in integers; row swaps only flip the sign.
inline BigInt det_bareiss(const SignedTernaryMatrix& m) {
  const std::size_t n = m.dim();
  std::vector<BigInt> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] = m(i, j);
  int sign = 1;
  BigInt prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    std::size_t pivot = k;
    while (pivot < n && a[pivot * n + k] == 0) ++pivot;
    if (pivot == n) return 0;
    if (pivot != k) {
      for (std::size_t j = k; j < n; ++j) std::swap(a[pivot * n + j], a[k * n + j]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        a[i * n + j] = (a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j]) / prev;
      }
      a[i * n + k] = 0;
    }
    prev = a[k * n + k];
  }
  return sign * a[n * n - 1];
}

// ---------------------------------------------------------------------------
// Determinant mod p
// ---------------------------------------------------------------------------

namespace internal {

/// Montgomery arithmetic with R = 2^64 for an odd modulus below 2^63.
struct Montgomery64 {
  std::uint64_t n = 0;
  std::uint64_t neg_inv = 0;  // -n^{-1} mod 2^64
  std::uint64_t r2 = 0;       // R^2 mod n
  std::uint64_t one = 0;      // R mod n

  explicit Montgomery64(std::uint64_t modulus) : n(modulus) {
    std::uint64_t inv = n;
    for (int i = 0; i < 5; ++i) inv *= 2 - n * inv;  // Newton: n*inv == 1 mod 2^64
    neg_inv = ~inv + 1;
    const std::uint64_t r = (~std::uint64_t{0} % n) + 1;  // 2^64 mod n
    r2 = mulmod_u64(r, r, n);
    one = r % n;
  }

  std::uint64_t redc(unsigned __int128 t) const {
    const std::uint64_t m = static_cast<std::uint64_t>(t) * neg_inv;
    const std::uint64_t u =
        static_cast<std::uint64_t>((t + static_cast<unsigned __int128>(m) * n) >> 64);
    return u >= n ? u - n : u;
  }
  std::uint64_t mul(std::uint64_t a, std::uint64_t b) const {
    return redc(static_cast<unsigned __int128>(a) * b);
  }
  std::uint64_t to(std::uint64_t a) const { return mul(a % n, r2); }
  std::uint64_t from(std::uint64_t a) const { return redc(a); }
  std::uint64_t sub(std::uint64_t a, std::uint64_t b) const { return a >= b ? a - b : a + n - b; }
  std::uint64_t pow(std::uint64_t base, std::uint64_t exp) const {
    std::uint64_t r = one;
    while (exp != 0) {
      if (exp & 1u) r = mul(r, base);
      base = mul(base, base);
      exp >>= 1;
    }
    return r;
  }
};

/// Determinant of a ternary matrix mod an odd prime, elimination in
/// Montgomery form.  About n^3/3 Montgomery multiplies.
inline std::uint64_t det_mod_odd_prime(const SignedTernaryMatrix& m, const Montgomery64& f) {
  const std::size_t n = m.dim();
  const std::uint64_t minus_one = f.sub(0, f.one);
  std::vector<std::uint64_t> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const int v = m(i, j);
      a[i * n + j] = v == 0 ? 0 : (v == 1 ? f.one : minus_one);
    }
  std::uint64_t det = f.one;
  bool negate = false;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    while (pivot < n && a[pivot * n + k] == 0) ++pivot;
    if (pivot == n) return 0;
    if (pivot != k) {
      for (std::size_t j = k; j < n; ++j) std::swap(a[pivot * n + j], a[k * n + j]);
      negate = !negate;
    }
    const std::uint64_t piv = a[k * n + k];
    det = f.mul(det, piv);
    const std::uint64_t inv = f.pow(piv, f.n - 2);
    for (std::size_t i = k + 1; i < n; ++i) {
      const std::uint64_t factor = f.mul(a[i * n + k], inv);
      if (factor == 0) continue;
      for (std::size_t j = k + 1; j < n; ++j)
        a[i * n + j] = f.sub(a[i * n + j], f.mul(factor, a[k * n + j]));
      a[i * n + k] = 0;
    }
  }
  std::uint64_t out = f.from(det);
  if (negate && out != 0) out = f.n - out;
  return out;
}

}  // namespace internal

/// det M mod p by Gaussian elimination over F_p; accepts any prime < 2^63.
inline std::uint64_t det_mod_p(const SignedTernaryMatrix& m, std::uint64_t p) {
  if (!is_prime_u64(p)) throw NotPrimeError("det_mod_p: p must be prime");
  if (p != 2) return internal::det_mod_odd_prime(m, internal::Montgomery64(p));
  // F_2: entries -1 and 1 coincide
  const std::size_t n = m.dim();
  std::vector<std::uint8_t> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] = m(i, j) != 0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    while (pivot < n && a[pivot * n + k] == 0) ++pivot;
    if (pivot == n) return 0;
    if (pivot != k)
      for (std::size_t j = k; j < n; ++j) std::swap(a[pivot * n + j], a[k * n + j]);
    for (std::size_t i = k + 1; i < n; ++i) {
      if (a[i * n + k] == 0) continue;
      for (std::size_t j = k; j < n; ++j) a[i * n + j] ^= a[k * n + j];
    }
  }
  return 1;
}

// ---------------------------------------------------------------------------
// CRT determinant
// ---------------------------------------------------------------------------

namespace internal {

/// Consecutive primes descending from just below 2^62.  Sized so that their
/// product covers determinants of ternary matrices up to n = 1000 and a bit
/// beyond.
inline const std::vector<std::uint64_t>& crt_prime_pool() {
  static const std::vector<std::uint64_t> pool = [] {
    std::vector<std::uint64_t> primes;
    std::uint64_t candidate = (std::uint64_t{1} << 62) - 1;
    while (primes.size() < 96) {
      if (is_prime_u64(candidate)) primes.push_back(candidate);
      candidate -= 2;
    }
    return primes;
  }();
  return pool;
}

}  // namespace internal

/// Upper bound on |det M| for an n-by-n ternary matrix: the smaller of n!
/// and the Hadamard bound n^(n/2).
inline BigInt det_magnitude_bound(std::size_t n) {
  const BigInt fact = factorial(static_cast<unsigned>(n));
  const BigInt hadamard = isqrt(ipow(BigInt(n), static_cast<unsigned>(n))) + 1;
  return min(fact, hadamard);
}

/// Exact determinant reconstructed from residues modulo enough 62-bit
/// primes that their product exceeds twice the magnitude bound; the balanced
/// residue is then the determinant itself.
inline BigInt det_crt(const SignedTernaryMatrix& m) {
  const std::size_t n = m.dim();
  const BigInt bound = 2 * det_magnitude_bound(n);
  const auto& pool = internal::crt_prime_pool();
  std::vector<std::uint64_t> residues;
  BigInt product = 1;
  std::size_t used = 0;
  while (product <= bound) {
    if (used == pool.size())
      throw std::length_error("det_crt: dimension beyond the prime pool");
    const std::uint64_t p = pool[used++];
    residues.push_back(internal::det_mod_odd_prime(m, internal::Montgomery64(p)));
    product *= p;
  }
  // Garner's mixed-radix reconstruction.
  BigInt x = residues[0];
  BigInt partial = pool[0];
  for (std::size_t i = 1; i < used; ++i) {
    const std::uint64_t p = pool[i];
    const std::uint64_t xi = ((x % p) + p).convert_to<std::uint64_t>() % p;
    const std::uint64_t pi = (partial % p).convert_to<std::uint64_t>() % p;
    std::uint64_t t = residues[i] >= xi ? residues[i] - xi : residues[i] + p - xi;
    t = mulmod_u64(t, powmod_u64(pi, p - 2, p), p);
    x += partial * t;
    partial *= p;
  }
  if (2 * x > partial) x -= partial;
  return x;
}

/// Default engine: fraction-free below the crossover, CRT above.
inline BigInt determinant(const SignedTernaryMatrix& m) {
  return m.dim() <= 16 ? det_bareiss(m) : det_crt(m);
}

// ---------------------------------------------------------------------------
// Minors
// ---------------------------------------------------------------------------

/// Submatrix keeping the given (0-based, ascending) rows and columns.
inline SignedTernaryMatrix submatrix(const SignedTernaryMatrix& m,
                                     const std::vector<std::size_t>& rows,
                                     const std::vector<std::size_t>& cols) {
  if (rows.size() != cols.size() || rows.empty())
    throw std::invalid_argument("submatrix: need a nonempty square selection");
  SignedTernaryMatrix out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out.at(i, j) = m(rows[i], cols[j]);
  return out;
}

/// d[i] (0-based) is the determinant of M with row 1 and column i+1 removed
/// (1-based labels).  Expanding along the first row:
///   det M = sum_i (-1)^i m(0, i) d[i]        (0-based sign convention)
struct MinorVector {
  std::vector<BigInt> d;
};

/// The single minor with row 1 and column col+1 removed (0-based col).
inline BigInt first_row_minor(const SignedTernaryMatrix& m, std::size_t col) {
  const std::size_t n = m.dim();
  if (n < 2) throw std::invalid_argument("first_row_minor: n must be >= 2");
  std::vector<std::size_t> rows(n - 1);
  for (std::size_t i = 0; i < n - 1; ++i) rows[i] = i + 1;
  std::vector<std::size_t> cols;
  cols.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j)
    if (j != col) cols.push_back(j);
  return determinant(submatrix(m, rows, cols));
}

inline MinorVector first_row_minors(const SignedTernaryMatrix& m) {
  const std::size_t n = m.dim();
  if (n < 2) throw std::invalid_argument("first_row_minors: n must be >= 2");
  MinorVector mv;
  mv.d.resize(n);
  for (std::size_t col = 0; col < n; ++col) mv.d[col] = first_row_minor(m, col);
  return mv;
}

/// Signed cofactor recombination of the first-row minors; equals det M.
inline BigInt det_from_first_row(const SignedTernaryMatrix& m, const MinorVector& mv) {
  BigInt acc = 0;
  for (std::size_t i = 0; i < m.dim(); ++i) {
    if (m(0, i) == 0) continue;
    const BigInt term = BigInt(m(0, i)) * mv.d[i];
    acc += (i % 2 == 0) ? term : -term;
  }
  return acc;
}

/// w[idx] (0-based) is the determinant of M with rows {1, idx+2} and columns
/// {1, 2} removed (1-based labels), so idx runs over j = 2..n.
struct SecondMinorVector {
  std::vector<BigInt> w;
};

inline SecondMinorVector second_order_minors(const SignedTernaryMatrix& m) {
  const std::size_t n = m.dim();
  if (n < 3) throw std::invalid_argument("second_order_minors: n must be >= 3");
  std::vector<std::size_t> cols(n - 2);
  for (std::size_t j = 0; j < n - 2; ++j) cols[j] = j + 2;
  SecondMinorVector sv;
  sv.w.resize(n - 1);
  for (std::size_t idx = 0; idx < n - 1; ++idx) {
    const std::size_t removed_row = idx + 1;  // 0-based row of the 1-based label j = idx+2
    std::vector<std::size_t> rows;
    rows.reserve(n - 2);
    for (std::size_t r = 1; r < n; ++r)
      if (r != removed_row) rows.push_back(r);
    sv.w[idx] = determinant(submatrix(m, rows, cols));
  }
  return sv;
}

/// The frozen signed relation between the first two first-row minors and the
/// second-order minors (1-based labels, i in {1,2}):
///
///   d_i = sum_{j=2}^{n} (-1)^j  m(j, 3-i)  w_j
///
/// The sum runs over the entries of the *other* one of the first two
/// columns, with the sign alternating in the row index j.  This is the
/// cofactor expansion of the minor's matrix along its first column.
inline BigInt first_minor_via_second_order(const SignedTernaryMatrix& m,
                                           const SecondMinorVector& sv, int which) {
  if (which != 1 && which != 2)
    throw std::invalid_argument("first_minor_via_second_order: which must be 1 or 2");
  const std::size_t n = m.dim();
  const std::size_t col = which == 1 ? 1 : 0;  // 0-based column 3-i
  BigInt acc = 0;
  for (std::size_t idx = 0; idx < n - 1; ++idx) {
    const std::size_t row = idx + 1;  // 1-based label j = row + 1
    const int entry = m(row, col);
    if (entry == 0) continue;
    const BigInt term = BigInt(entry) * sv.w[idx];
    acc += ((row + 1) % 2 == 0) ? term : -term;  // sign (-1)^j
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Rank of the trailing columns over F_p
// ---------------------------------------------------------------------------

struct FpRankReport {
  std::uint64_t p = 2;
  std::size_t num_vectors = 0;
  std::size_t rank = 0;
  std::size_t deficiency = 0;  // num_vectors - rank
};

/// Rank over F_p of columns k+1..n restricted to rows 2..n (1-based labels),
/// i.e. n-k vectors in an (n-1)-dimensional space.  `deficiency` counts how
/// far they fall short of full rank relative to their own number.
inline FpRankReport trailing_column_deficiency(const SignedTernaryMatrix& m,
                                               std::uint64_t p, std::size_t k = 3) {
  if (!is_prime_u64(p)) throw NotPrimeError("trailing_column_deficiency: p must be prime");
  const std::size_t n = m.dim();
  if (n < k + 1)
    throw std::invalid_argument("trailing_column_deficiency: need n >= k + 1");
  const std::size_t rows = n - 1;  // rows 2..n
  const std::size_t cols = n - k;  // columns k+1..n
  std::vector<std::uint64_t> a(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const int v = m(i + 1, j + k);
      a[i * cols + j] = v == 0 ? 0 : (v == 1 ? 1 : p - 1);
    }
  std::size_t rank = 0;
  for (std::size_t col = 0; col < cols && rank < rows; ++col) {
    std::size_t pivot = rank;
    while (pivot < rows && a[pivot * cols + col] == 0) ++pivot;
    if (pivot == rows) continue;
    if (pivot != rank)
      for (std::size_t j = col; j < cols; ++j) std::swap(a[pivot * cols + j], a[rank * cols + j]);
    const std::uint64_t inv = powmod_u64(a[rank * cols + col], p - 2, p);
    for (std::size_t i = rank + 1; i < rows; ++i) {
      const std::uint64_t factor = mulmod_u64(a[i * cols + col], inv, p);
      if (factor == 0) continue;
      for (std::size_t j = col; j < cols; ++j) {
        const std::uint64_t sub = mulmod_u64(factor, a[rank * cols + j], p);
        a[i * cols + j] = (a[i * cols + j] + p - sub) % p;
      }
    }
    ++rank;
  }
  FpRankReport report;
  report.p = p;
  report.num_vectors = cols;
  report.rank = rank;
  report.deficiency = cols - rank;
  return report;
}

}  // namespace detlab
