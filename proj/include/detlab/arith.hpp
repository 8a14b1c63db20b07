#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "detlab/bigint.hpp"
#include "detlab/errors.hpp"
#include "detlab/rng.hpp"

namespace detlab {

// ---------------------------------------------------------------------------
// Prime sieves
// ---------------------------------------------------------------------------

/// Ascending primes <= n (Eratosthenes).
inline std::vector<std::uint64_t> primes_up_to(std::uint64_t n) {
  std::vector<std::uint64_t> primes;
  if (n < 2) return primes;
  std::vector<std::uint8_t> composite(n + 1, 0);
  for (std::uint64_t i = 2; i <= n; ++i) {
    if (!composite[i]) {
      primes.push_back(i);
      for (std::uint64_t j = i * i; j <= n; j += i) composite[j] = 1;
    }
  }
  return primes;
}

/// Primes up to 10^6, computed once; the trial-division base for factorize().
inline const std::vector<std::uint64_t>& small_primes() {
  static const std::vector<std::uint64_t> primes = primes_up_to(1'000'000);
  return primes;
}

// ---------------------------------------------------------------------------
// Primality
// ---------------------------------------------------------------------------

inline std::uint64_t mulmod_u64(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}

inline std::uint64_t powmod_u64(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  std::uint64_t r = 1 % m;
  base %= m;
  while (exp != 0) {
    if (exp & 1u) r = mulmod_u64(r, base, m);
    base = mulmod_u64(base, base, m);
    exp >>= 1;
  }
  return r;
}

/// Deterministic Miller-Rabin; the witness set is complete below 2^64.
inline bool is_prime_u64(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull,
                          29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1u) == 0) {
    d >>= 1;
    ++s;
  }
  for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull,
                          29ull, 31ull, 37ull}) {
    std::uint64_t x = powmod_u64(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool witness = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod_u64(x, x, n);
      if (x == n - 1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

inline BigInt isqrt(const BigInt& m);  // fwd

namespace internal {

inline int jacobi(BigInt a, BigInt n) {
  // n odd positive
  a %= n;
  if (a < 0) a += n;
  int result = 1;
  while (a != 0) {
    while ((a & 1) == 0) {
      a >>= 1;
      const unsigned r = static_cast<unsigned>(n & 7);
      if (r == 3 || r == 5) result = -result;
    }
    std::swap(a, n);
    if ((a & 3) == 3 && (n & 3) == 3) result = -result;
    a %= n;
  }
  return n == 1 ? result : 0;
}

inline bool miller_rabin_base(const BigInt& n, const BigInt& a) {
  BigInt d = n - 1;
  unsigned s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  BigInt x = powm(a % n, d, n);
  if (x == 1 || x == n - 1) return true;
  for (unsigned r = 1; r < s; ++r) {
    x = (x * x) % n;
    if (x == n - 1) return true;
  }
  return false;
}

/// Strong Lucas probable-prime test with Selfridge's parameter choice.
inline bool strong_lucas(const BigInt& n) {
  // Find D in 5, -7, 9, -11, ... with Jacobi(D|n) == -1.
  BigInt d_param = 5;
  for (int tries = 0;; ++tries) {
    const int j = jacobi(d_param, n);
    if (j == -1) break;
    if (j == 0 && abs(d_param) < n) return false;  // shares a factor with n
    if (tries == 16) {
      const BigInt r = isqrt(n);
      if (r * r == n) return false;  // squares admit no valid D
    }
    d_param = d_param > 0 ? BigInt(-(d_param + 2)) : BigInt(-(d_param - 2));
  }
  // P = 1, Q = (1 - D) / 4
  const BigInt q_param = (1 - d_param) / 4;

  BigInt d = n + 1;
  unsigned s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // Compute U_d, V_d (mod n) by the binary chain, tracking Q^k.
  BigInt u = 1, v = 1, qk = q_param % n;
  const unsigned top = static_cast<unsigned>(msb(d));
  for (int bit = static_cast<int>(top) - 1; bit >= 0; --bit) {
    // double: U_{2k} = U_k V_k ; V_{2k} = V_k^2 - 2 Q^k
    u = (u * v) % n;
    v = (v * v - 2 * qk) % n;
    qk = (qk * qk) % n;
    if (bit_test(d, static_cast<unsigned>(bit))) {
      // increment: U_{k+1} = (P U_k + V_k)/2 ; V_{k+1} = (D U_k + P V_k)/2
      BigInt u2 = u + v;
      BigInt v2 = d_param * u + v;
      if ((u2 & 1) != 0) u2 += n;
      if ((v2 & 1) != 0) v2 += n;
      u = (u2 >> 1) % n;
      v = (v2 >> 1) % n;
      qk = (qk * q_param) % n;
    }
  }
  u %= n;
  if (u < 0) u += n;
  v %= n;
  if (v < 0) v += n;
  if (u == 0 || v == 0) return true;
  for (unsigned r = 1; r < s; ++r) {
    v = (v * v - 2 * qk) % n;
    if (v < 0) v += n;
    if (v == 0) return true;
    qk = (qk * qk) % n;
  }
  return false;
}

}  // namespace internal

/// Primality for arbitrary-precision integers: deterministic Miller-Rabin
/// below 2^64, Baillie-PSW (strong base-2 Miller-Rabin plus strong Lucas)
/// above.  Deterministic output for a given input.
inline bool is_prime(const BigInt& n) {
  if (n <= std::numeric_limits<std::uint64_t>::max())
    return n >= 2 && is_prime_u64(n.convert_to<std::uint64_t>());
  if ((n & 1) == 0) return false;
  if (!internal::miller_rabin_base(n, 2)) return false;
  return internal::strong_lucas(n);
}

inline bool is_prime_u64_arg_checked(std::uint64_t p) { return is_prime_u64(p); }

// ---------------------------------------------------------------------------
// Integer square roots and perfect squares
// ---------------------------------------------------------------------------

/// floor(sqrt(m)) by Newton iteration from above, with an explicit
/// floor certificate: the result r satisfies r^2 <= m < (r+1)^2.
inline BigInt isqrt(const BigInt& m) {
  if (m < 0) throw std::domain_error("isqrt: negative input");
  if (m == 0) return 0;
  const unsigned bits = static_cast<unsigned>(msb(m)) + 1;
  BigInt r = BigInt(1) << ((bits + 1) / 2);  // r >= sqrt(m)
  for (;;) {
    BigInt t = (r + m / r) >> 1;
    if (t >= r) break;
    r = t;
  }
  while (r * r > m) --r;
  while ((r + 1) * (r + 1) <= m) ++r;
  return r;
}

namespace internal {

template <std::size_t M>
constexpr std::array<bool, M> quadratic_residue_table() {
  std::array<bool, M> table{};
  for (std::size_t k = 0; k < M; ++k) table[(k * k) % M] = true;
  return table;
}

}  // namespace internal

/// True iff m = k^2 for some integer k.  Residue prefilters mod 256, 9, 5,
/// 7 and 13 reject most non-squares before the isqrt is attempted.
inline bool is_perfect_square(const BigInt& m) {
  if (m < 0) return false;
  if (m == 0) return true;
  static constexpr auto q256 = internal::quadratic_residue_table<256>();
  static constexpr auto q9 = internal::quadratic_residue_table<9>();
  static constexpr auto q5 = internal::quadratic_residue_table<5>();
  static constexpr auto q7 = internal::quadratic_residue_table<7>();
  static constexpr auto q13 = internal::quadratic_residue_table<13>();
  if (!q256[(m & 255).convert_to<std::size_t>()]) return false;
  const std::size_t r4095 = (m % 4095).convert_to<std::size_t>();  // 4095 = 9*5*7*13
  if (!q9[r4095 % 9] || !q5[r4095 % 5] || !q7[r4095 % 7] || !q13[r4095 % 13]) return false;
  const BigInt r = isqrt(m);
  return r * r == m;
}

// ---------------------------------------------------------------------------
// Factorization
// ---------------------------------------------------------------------------

struct FactorBudget {
  std::uint64_t trial_limit = 1'000'000;    // trial division by primes up to here
  std::uint64_t rho_iterations = 1 << 26;   // total cycle-walk steps before giving up
};

/// Multiset of (prime, exponent) pairs, ascending in the prime, plus the
/// sign of the original integer.  `zero` flags the one input with no
/// factorization.
struct Factorization {
  int sign = 1;  // +1 or -1
  bool zero = false;
  std::vector<std::pair<BigInt, unsigned>> factors;

  BigInt recompose() const {
    if (zero) return 0;
    BigInt v = sign;
    for (const auto& [p, e] : factors)
      for (unsigned i = 0; i < e; ++i) v *= p;
    return v;
  }
};

namespace internal {

inline std::uint64_t pollard_brent_u64(std::uint64_t n, std::uint64_t& budget) {
  // n odd composite, not a prime power of a small prime
  for (std::uint64_t salt = 1;; ++salt) {
    const std::uint64_t c = 1 + mix64(n ^ (salt * 0x9e3779b97f4a7c15ULL)) % (n - 1);
    std::uint64_t y = mix64(n + salt) % n, m = 128, g = 1, r = 1, q = 1, x = 0, ys = 0;
    while (g == 1) {
      x = y;
      for (std::uint64_t i = 0; i < r; ++i) y = (mulmod_u64(y, y, n) + c) % n;
      std::uint64_t k = 0;
      while (k < r && g == 1) {
        ys = y;
        const std::uint64_t lim = std::min(m, r - k);
        for (std::uint64_t i = 0; i < lim; ++i) {
          y = (mulmod_u64(y, y, n) + c) % n;
          q = mulmod_u64(q, x > y ? x - y : y - x, n);
        }
        if (budget < lim) throw PartialFactorizationError("factor budget exhausted");
        budget -= lim;
        g = std::gcd(q, n);
        k += lim;
      }
      r <<= 1;
    }
    if (g == n) {
      // backtrack one step at a time
      g = 1;
      while (g == 1) {
        ys = (mulmod_u64(ys, ys, n) + c) % n;
        g = std::gcd(x > ys ? x - ys : ys - x, n);
      }
    }
    if (g != n) return g;
  }
}

inline BigInt pollard_brent_big(const BigInt& n, std::uint64_t& budget) {
  const std::uint64_t fingerprint = (n % std::numeric_limits<std::uint64_t>::max())
                                        .convert_to<std::uint64_t>();
  for (std::uint64_t salt = 1;; ++salt) {
    const BigInt c = 1 + BigInt(mix64(fingerprint ^ salt));
    BigInt y = BigInt(mix64(fingerprint + salt)) % n, g = 1, q = 1, x = 0, ys = 0;
    std::uint64_t r = 1;
    const std::uint64_t m = 64;
    while (g == 1) {
      x = y;
      for (std::uint64_t i = 0; i < r; ++i) y = (y * y + c) % n;
      std::uint64_t k = 0;
      while (k < r && g == 1) {
        ys = y;
        const std::uint64_t lim = std::min(m, r - k);
        for (std::uint64_t i = 0; i < lim; ++i) {
          y = (y * y + c) % n;
          q = (q * abs(x - y)) % n;
        }
        if (budget < lim) throw PartialFactorizationError("factor budget exhausted");
        budget -= lim;
        g = gcd(q, n);
        k += lim;
      }
      r <<= 1;
    }
    if (g == n) {
      g = 1;
      while (g == 1) {
        ys = (ys * ys + c) % n;
        g = gcd(abs(x - ys), n);
      }
    }
    if (g != n) return g;
  }
}

inline void split_u64(std::uint64_t v, std::vector<BigInt>& primes_out,
                      std::uint64_t& budget) {
  if (v == 1) return;
  if (is_prime_u64(v)) {
    primes_out.emplace_back(v);
    return;
  }
  const std::uint64_t f = pollard_brent_u64(v, budget);
  split_u64(f, primes_out, budget);
  split_u64(v / f, primes_out, budget);
}

inline void split_big(const BigInt& m, std::vector<BigInt>& primes_out,
                      std::uint64_t& budget) {
  if (m == 1) return;
  if (m <= std::numeric_limits<std::uint64_t>::max()) {
    split_u64(m.convert_to<std::uint64_t>(), primes_out, budget);
    return;
  }
  if (is_prime(m)) {
    primes_out.push_back(m);
    return;
  }
  // A square cofactor defeats the rho cycle; peel it first.
  const BigInt r = isqrt(m);
  if (r * r == m) {
    split_big(r, primes_out, budget);
    split_big(r, primes_out, budget);
    return;
  }
  const BigInt f = pollard_brent_big(m, budget);
  split_big(f, primes_out, budget);
  split_big(m / f, primes_out, budget);
}

}  // namespace internal

/// Complete factorization: trial division over sieved primes, then
/// rho-splitting with value-derived pseudo-randomness (pure in the input),
/// with every cofactor certified prime before it is reported.  Throws
/// PartialFactorizationError when the budget runs out; never returns a
/// partial answer.
inline Factorization factorize(BigInt m, const FactorBudget& budget = {}) {
  Factorization f;
  if (m == 0) {
    f.zero = true;
    return f;
  }
  if (m < 0) {
    f.sign = -1;
    m = -m;
  }
  std::vector<BigInt> rest;
  std::uint64_t steps = budget.rho_iterations;
  // the sieve only reaches 10^6; larger requested limits do not add primes
  const std::uint64_t trial = std::min<std::uint64_t>(budget.trial_limit, 1'000'000);
  if (m <= std::numeric_limits<std::uint64_t>::max()) {
    std::uint64_t v = m.convert_to<std::uint64_t>();
    for (std::uint64_t p : small_primes()) {
      if (p > trial || p * p > v) break;
      while (v % p == 0) {
        v /= p;
        rest.emplace_back(p);
      }
    }
    if (v > 1) {
      if (v <= trial * trial) {
        rest.emplace_back(v);  // no factor up to its root survived trial division
      } else {
        internal::split_u64(v, rest, steps);
      }
    }
  } else {
    for (std::uint64_t p : small_primes()) {
      if (p > trial) break;
      while (m % p == 0) {
        m /= p;
        rest.emplace_back(p);
      }
    }
    if (m > 1) {
      if (m <= BigInt(trial) * trial) {
        rest.push_back(m);  // no factor up to its root survived trial division
      } else {
        internal::split_big(m, rest, steps);
      }
    }
  }
  std::sort(rest.begin(), rest.end());
  for (std::size_t i = 0; i < rest.size();) {
    std::size_t j = i;
    while (j < rest.size() && rest[j] == rest[i]) ++j;
    f.factors.emplace_back(rest[i], static_cast<unsigned>(j - i));
    i = j;
  }
  return f;
}

/// tau = prod (e + 1).  Undefined for zero.
inline std::uint64_t divisor_count(const Factorization& f) {
  if (f.zero) throw std::domain_error("divisor_count: undefined for zero");
  std::uint64_t tau = 1;
  for (const auto& [p, e] : f.factors) tau *= (e + 1);
  return tau;
}

/// All positive divisors of |m| given its factorization, unsorted size
/// tau(m).
inline std::vector<BigInt> all_divisors(const Factorization& f) {
  if (f.zero) throw std::domain_error("all_divisors: undefined for zero");
  std::vector<BigInt> divs{1};
  for (const auto& [p, e] : f.factors) {
    const std::size_t base = divs.size();
    BigInt pk = 1;
    for (unsigned k = 1; k <= e; ++k) {
      pk *= p;
      for (std::size_t i = 0; i < base; ++i) divs.push_back(divs[i] * pk);
    }
  }
  return divs;
}

/// nu_p(m) + 1: the k with p^(k-1) | m and p^k not | m.
inline unsigned p_adic_k(BigInt m, const BigInt& p) {
  if (m == 0) throw std::domain_error("p_adic_k: m must be nonzero");
  if (!is_prime(p)) throw NotPrimeError("p_adic_k: p must be prime");
  unsigned nu = 0;
  while (m % p == 0) {
    m /= p;
    ++nu;
  }
  return nu + 1;
}

// ---------------------------------------------------------------------------
// Sums of reciprocal primes
// ---------------------------------------------------------------------------

/// Exact value of sum_{p <= n} 1/p.  numerator/denominator are coprime by
/// construction (the denominator is squarefree and each new prime never
/// divides the updated numerator), so no gcd pass is needed even for large n.
struct PrimeHarmonicSum {
  BigInt numerator = 0;
  BigInt denominator = 1;

  double approx() const { return ratio_as_double(numerator, denominator); }
  BigRat exact() const { return BigRat(numerator, denominator); }
};

/// One snapshot per cutoff (ascending cutoffs, all >= 2), from a single
/// accumulation pass.
inline std::vector<PrimeHarmonicSum> mertens_sum_prefixes(
    std::span<const std::uint64_t> cutoffs) {
  if (cutoffs.empty()) return {};
  for (std::size_t i = 0; i < cutoffs.size(); ++i) {
    if (cutoffs[i] < 2) throw std::invalid_argument("mertens_sum: n must be >= 2");
    if (i > 0 && cutoffs[i] < cutoffs[i - 1])
      throw std::invalid_argument("mertens_sum_prefixes: cutoffs must ascend");
  }
  const auto primes = primes_up_to(cutoffs.back());
  std::vector<PrimeHarmonicSum> out;
  out.reserve(cutoffs.size());
  PrimeHarmonicSum acc;
  std::size_t next = 0;
  for (std::uint64_t p : primes) {
    while (next < cutoffs.size() && p > cutoffs[next]) {
      out.push_back(acc);
      ++next;
    }
    if (next == cutoffs.size()) break;
    acc.numerator = acc.numerator * p + acc.denominator;
    acc.denominator *= p;
  }
  while (next < cutoffs.size()) {
    out.push_back(acc);
    ++next;
  }
  return out;
}

inline PrimeHarmonicSum mertens_sum(std::uint64_t n) {
  const std::uint64_t cut[] = {n};
  return mertens_sum_prefixes(cut).front();
}

// ---------------------------------------------------------------------------
// Limiting density of p | det
// ---------------------------------------------------------------------------

/// 1 - prod_{k>=1} (1 - p^-k), truncated once the geometric tail bound
/// sum_{k>K} p^-k = p^-K/(p-1) drops below tol.  The reported
/// truncation_error is that certified bound, not an empirical estimate.
struct MaplesLimit {
  std::uint64_t p = 2;
  double value = 0.0;
  double truncation_error = 0.0;
};

inline MaplesLimit maples_limit(std::uint64_t p, double tol = 1e-12) {
  if (!is_prime_u64(p)) throw NotPrimeError("maples_limit: p must be prime");
  if (!(tol > 0)) throw std::invalid_argument("maples_limit: tol must be positive");
  const long double pl = static_cast<long double>(p);
  long double product = 1.0L;
  long double pk = 1.0L;  // p^-k accumulator
  long double tail = 1.0L / (pl - 1.0L);
  while (tail >= tol) {
    pk /= pl;
    product *= (1.0L - pk);
    tail = pk / (pl - 1.0L);
  }
  MaplesLimit out;
  out.p = p;
  out.value = static_cast<double>(1.0L - product);
  out.truncation_error = static_cast<double>(tail);
  return out;
}

// ---------------------------------------------------------------------------
// Square-difference candidates
// ---------------------------------------------------------------------------

/// All pairs (A, B) with A, B >= 0 and A^2 - B^2 in {d, -d, 2d, -2d}.
/// Each target T factors as (A-B)(A+B) over divisor pairs of equal parity,
/// so the result has at most 4*tau(2|d|) members.
inline std::set<std::pair<BigInt, BigInt>> square_pair_candidates(
    const BigInt& d, const FactorBudget& budget = {}) {
  if (d == 0) throw std::domain_error("square_pair_candidates: d must be nonzero");
  std::set<std::pair<BigInt, BigInt>> out;
  const BigInt targets[] = {d, -d, 2 * d, -2 * d};
  for (const BigInt& t : targets) {
    const BigInt a = abs(t);
    const auto divs = all_divisors(factorize(a, budget));
    for (const BigInt& u : divs) {
      const BigInt v = a / u;
      if (u > v) continue;
      if (((u + v) & 1) != 0) continue;  // parity mismatch
      if (t > 0)
        out.emplace((u + v) >> 1, (v - u) >> 1);
      else
        out.emplace((v - u) >> 1, (v + u) >> 1);
    }
  }
  return out;
}

}  // namespace detlab
