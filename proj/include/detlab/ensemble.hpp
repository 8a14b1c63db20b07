#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "detlab/bigint.hpp"
#include "detlab/errors.hpp"
#include "detlab/rng.hpp"

namespace detlab {

/// A matrix entry: -1, 0 or +1.
using XiValue = std::int8_t;

inline constexpr bool is_xi(int v) { return v == -1 || v == 0 || v == 1; }

/// The entry distribution is fixed: P(0) = 1/2, P(+1) = P(-1) = 1/4.
/// Realized from exactly two uniform bits, so the weights are exact by
/// construction rather than approximated through floating point.
inline constexpr XiValue xi_from_bits(std::uint32_t two_bits) {
  // 00, 01 -> 0;  10 -> +1;  11 -> -1.
  switch (two_bits & 3u) {
    case 2u:
      return 1;
    case 3u:
      return -1;
    default:
      return 0;
  }
}

inline XiValue sample_xi(BitPairStream& bits) { return xi_from_bits(bits.next_pair()); }

/// Dimension plus master seed.  The entry weights are not configurable.
struct EnsembleSpec {
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

/// Dense n-by-n matrix with entries in {-1,0,1}.  Indexing is 0-based.
class SignedTernaryMatrix {
 public:
  explicit SignedTernaryMatrix(std::size_t n) : n_(n), entries_(n * n, 0) {
    if (n == 0) throw std::invalid_argument("matrix dimension must be positive");
  }

  static SignedTernaryMatrix from_entries(std::size_t n, std::vector<XiValue> entries) {
    SignedTernaryMatrix m(n);
    if (entries.size() != n * n)
      throw std::invalid_argument("entry count does not match dimension");
    for (XiValue v : entries)
      if (!is_xi(v)) throw std::invalid_argument("matrix entry outside {-1,0,1}");
    m.entries_ = std::move(entries);
    return m;
  }

  std::size_t dim() const { return n_; }

  XiValue operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
  XiValue& at(std::size_t i, std::size_t j) { return entries_[i * n_ + j]; }

  const std::vector<XiValue>& entries() const { return entries_; }

  bool operator==(const SignedTernaryMatrix&) const = default;

 private:
  std::size_t n_;
  std::vector<XiValue> entries_;
};

/// Row-major fill with n^2 independent draws; a pure function of the stream.
inline SignedTernaryMatrix sample_matrix(const EnsembleSpec& spec, BitPairStream& bits) {
  if (spec.n == 0) throw std::invalid_argument("sample_matrix: n must be >= 1");
  SignedTernaryMatrix m(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i)
    for (std::size_t j = 0; j < spec.n; ++j) m.at(i, j) = sample_xi(bits);
  return m;
}

/// Convenience: matrix for Monte Carlo sample `index` under `seed`.
inline SignedTernaryMatrix sample_matrix_indexed(std::size_t n, std::uint64_t seed,
                                                 std::uint64_t index) {
  BitPairStream bits{substream(seed, index)};
  return sample_matrix(EnsembleSpec{n, seed}, bits);
}

/// One pattern of {0,±1}^k together with its exact probability
/// (1/2)^{#zeros} * (1/4)^{#nonzeros}.
struct WeightedVector {
  std::vector<XiValue> pattern;
  BigRat weight;
};

inline constexpr int kEnumerationCap = 12;

inline std::uint64_t pow3(unsigned k) {
  std::uint64_t r = 1;
  while (k--) r *= 3;
  return r;
}

/// Visits every pattern of {0,±1}^k exactly once, in base-3 counter order:
/// coordinate i is the i-th least significant ternary digit of the counter,
/// with digit values mapping 0 -> 0, 1 -> +1, 2 -> -1.  Weights over the
/// full enumeration sum to exactly 1.
template <typename Visit>
void enumerate_weighted(unsigned k, Visit&& visit, unsigned cap = kEnumerationCap) {
  if (k > cap)
    throw EnumerationCapError("enumerate_weighted: k=" + std::to_string(k) +
                              " exceeds cap " + std::to_string(cap));
  const std::uint64_t total = pow3(k);
  WeightedVector wv;
  wv.pattern.assign(k, 0);
  std::vector<std::uint8_t> digits(k, 0);
  for (std::uint64_t counter = 0;; ++counter) {
    unsigned zeros = 0;
    for (unsigned i = 0; i < k; ++i)
      if (wv.pattern[i] == 0) ++zeros;
    // weight = (1/2)^zeros (1/4)^(k-zeros) = 2^zeros / 4^k
    wv.weight = BigRat(BigInt(1) << zeros, BigInt(1) << (2 * k));
    visit(static_cast<const WeightedVector&>(wv));
    if (counter + 1 == total) break;
    // increment the base-3 counter
    for (unsigned i = 0; i < k; ++i) {
      digits[i] = static_cast<std::uint8_t>((digits[i] + 1) % 3);
      wv.pattern[i] = digits[i] == 0 ? XiValue{0} : (digits[i] == 1 ? XiValue{1} : XiValue{-1});
      if (digits[i] != 0) break;
    }
  }
}

/// Materialized form of enumerate_weighted for small k.
inline std::vector<WeightedVector> enumerate_weighted_all(unsigned k,
                                                          unsigned cap = kEnumerationCap) {
  std::vector<WeightedVector> out;
  out.reserve(static_cast<std::size_t>(pow3(k)));
  enumerate_weighted(k, [&](const WeightedVector& wv) { out.push_back(wv); }, cap);
  return out;
}

}  // namespace detlab
