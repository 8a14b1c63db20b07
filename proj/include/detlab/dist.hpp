#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "detlab/arith.hpp"
#include "detlab/bigint.hpp"
#include "detlab/ensemble.hpp"
#include "detlab/errors.hpp"
#include "detlab/rng.hpp"

namespace detlab {

/// Exact distribution of a signed weighted sum, over Z or over F_p.
struct SumDistribution {
  std::map<BigInt, BigRat> probs;
  std::optional<std::uint64_t> modulus;  // engaged for F_p distributions

  BigRat total() const {
    BigRat t = 0;
    for (const auto& [value, prob] : probs) t += prob;
    return t;
  }

  BigRat prob_at(const BigInt& x) const {
    const auto it = probs.find(x);
    return it == probs.end() ? BigRat(0) : it->second;
  }
};

inline constexpr std::size_t kSumSupportCap = 10'000'000;

namespace internal {

template <typename Key, typename Map>
SumDistribution finish_distribution(const Map& numerators, unsigned folds) {
  SumDistribution out;
  const BigInt denom = BigInt(1) << (2 * folds);  // 4^folds
  for (const auto& [value, num] : numerators)
    if (num != 0) out.probs.emplace(BigInt(value), BigRat(BigInt(num), denom));
  return out;
}

}  // namespace internal

/// Exact distribution of sum_i xi_i a_i over Z.  Dynamic programming: start
/// from the point mass at 0 and fold each a_i in with weights (1/2 stay,
/// 1/4 shift +a_i, 1/4 shift -a_i); all probabilities are dyadic rationals
/// with denominator 4^n.  The support is sparse; its size is capped.
inline SumDistribution exact_sum_distribution(std::span<const BigInt> a,
                                              std::size_t cap = kSumSupportCap) {
  BigInt reach = 0;
  for (const BigInt& x : a) reach += abs(x);
  const unsigned folds = static_cast<unsigned>(a.size());
  if (reach < (BigInt(1) << 62)) {
    std::unordered_map<long long, BigInt> cur;
    cur.emplace(0, 1);
    for (const BigInt& ai : a) {
      const long long s = ai.convert_to<long long>();
      if (s == 0) {
        for (auto& [value, num] : cur) num <<= 2;
        continue;
      }
      std::unordered_map<long long, BigInt> next;
      next.reserve(cur.size() * 3);
      for (const auto& [value, num] : cur) {
        next[value] += num << 1;
        next[value + s] += num;
        next[value - s] += num;
      }
      if (next.size() > cap)
        throw RangeCapError("exact_sum_distribution: support exceeds cap");
      cur = std::move(next);
    }
    return internal::finish_distribution<long long>(cur, folds);
  }
  std::map<BigInt, BigInt> cur;
  cur.emplace(0, 1);
  for (const BigInt& ai : a) {
    if (ai == 0) {
      for (auto& [value, num] : cur) num <<= 2;
      continue;
    }
    std::map<BigInt, BigInt> next;
    for (const auto& [value, num] : cur) {
      next[value] += num << 1;
      next[value + ai] += num;
      next[value - ai] += num;
    }
    if (next.size() > cap) throw RangeCapError("exact_sum_distribution: support exceeds cap");
    cur = std::move(next);
  }
  return internal::finish_distribution<BigInt>(cur, folds);
}

/// P(sum_i xi_i a_i = 0) alone: the same fold, without materializing the
/// rational map.  This is the hot path of the partial-sum experiments.
inline BigRat exact_zero_probability(std::span<const BigInt> a,
                                     std::size_t cap = kSumSupportCap) {
  BigInt reach = 0;
  for (const BigInt& x : a) reach += abs(x);
  const unsigned folds = static_cast<unsigned>(a.size());
  const BigInt denom = BigInt(1) << (2 * folds);
  if (reach < (BigInt(1) << 62)) {
    std::unordered_map<long long, BigInt> cur;
    cur.emplace(0, 1);
    for (const BigInt& ai : a) {
      const long long s = ai.convert_to<long long>();
      if (s == 0) {
        for (auto& [value, num] : cur) num <<= 2;
        continue;
      }
      std::unordered_map<long long, BigInt> next;
      next.reserve(cur.size() * 3);
      for (const auto& [value, num] : cur) {
        next[value] += num << 1;
        next[value + s] += num;
        next[value - s] += num;
      }
      if (next.size() > cap)
        throw RangeCapError("exact_zero_probability: support exceeds cap");
      cur = std::move(next);
    }
    const auto it = cur.find(0);
    return it == cur.end() ? BigRat(0) : BigRat(it->second, denom);
  }
  std::map<BigInt, BigInt> cur;
  cur.emplace(0, 1);
  for (const BigInt& ai : a) {
    if (ai == 0) {
      for (auto& [value, num] : cur) num <<= 2;
      continue;
    }
    std::map<BigInt, BigInt> next;
    for (const auto& [value, num] : cur) {
      next[value] += num << 1;
      next[value + ai] += num;
      next[value - ai] += num;
    }
    if (next.size() > cap) throw RangeCapError("exact_zero_probability: support exceeds cap");
    cur = std::move(next);
  }
  const auto it = cur.find(0);
  return it == cur.end() ? BigRat(0) : BigRat(it->second, denom);
}

/// Same fold over residues mod p; cost O(n p).
inline SumDistribution exact_sum_distribution_mod_p(std::span<const BigInt> a,
                                                    std::uint64_t p,
                                                    std::size_t cap = kSumSupportCap) {
  if (!is_prime_u64(p)) throw NotPrimeError("exact_sum_distribution_mod_p: p must be prime");
  if (p > cap) throw RangeCapError("exact_sum_distribution_mod_p: p exceeds support cap");
  std::vector<BigInt> cur(p, 0), next(p);
  cur[0] = 1;
  for (const BigInt& ai : a) {
    const std::uint64_t s = ((ai % p) + p).convert_to<std::uint64_t>() % p;
    if (s == 0) {
      for (auto& num : cur) num <<= 2;
      continue;
    }
    for (std::uint64_t r = 0; r < p; ++r) {
      const std::uint64_t up = r + s < p ? r + s : r + s - p;
      const std::uint64_t down = r >= s ? r - s : r + p - s;
      next[r] = (cur[r] << 1) + cur[down] + cur[up];
    }
    std::swap(cur, next);
  }
  SumDistribution out;
  out.modulus = p;
  const BigInt denom = BigInt(1) << (2 * a.size());
  for (std::uint64_t r = 0; r < p; ++r)
    if (cur[r] != 0) out.probs.emplace(BigInt(r), BigRat(cur[r], denom));
  return out;
}

/// Reduction of a Z-distribution mod p (push-forward onto residues).
inline SumDistribution reduce_mod_p(const SumDistribution& dist, std::uint64_t p) {
  if (dist.modulus) throw std::invalid_argument("reduce_mod_p: input already modular");
  SumDistribution out;
  out.modulus = p;
  for (const auto& [value, prob] : dist.probs) {
    BigInt r = value % p;
    if (r < 0) r += p;
    out.probs[r] += prob;
  }
  return out;
}

/// Largest deviation of a mod-p distribution from the uniform one,
/// max_x |P(x) - 1/p| over all residues (absent residues count as P = 0).
inline BigRat sup_deviation_from_uniform(const SumDistribution& dist) {
  if (!dist.modulus)
    throw std::invalid_argument("sup_deviation_from_uniform: needs a modular distribution");
  const std::uint64_t p = *dist.modulus;
  const BigRat uniform(1, p);
  BigRat sup = dist.probs.size() < p ? uniform : BigRat(0);  // some residue missing
  for (const auto& [value, prob] : dist.probs) {
    const BigRat dev = prob > uniform ? prob - uniform : uniform - prob;
    sup = std::max(sup, dev);
  }
  return sup;
}

// ---------------------------------------------------------------------------
// Anti-concentration check
// ---------------------------------------------------------------------------

struct FourierCheck {
  BigRat max_prob;
  BigRat zero_prob;
  bool holds = false;  // maximum attained at 0 (ties allowed)
};

/// The mode of sum xi_i a_i sits at 0: verified by exact comparison of the
/// full distribution.  Ties pass, the statement is an inequality.
inline FourierCheck check_fourier_lemma(std::span<const BigInt> a,
                                        std::size_t cap = kSumSupportCap) {
  const SumDistribution dist = exact_sum_distribution(a, cap);
  FourierCheck out;
  out.zero_prob = dist.prob_at(0);
  out.max_prob = 0;
  for (const auto& [value, prob] : dist.probs) out.max_prob = std::max(out.max_prob, prob);
  out.holds = out.zero_prob == out.max_prob;
  return out;
}

/// Characteristic function of the sum: prod_i (1 + cos(a_i t)) / 2.
/// Diagnostic only; every verdict in this module rests on exact rationals.
inline double char_fn(std::span<const BigInt> a, double t) {
  double phi = 1.0;
  for (const BigInt& ai : a)
    phi *= 0.5 * (1.0 + std::cos(static_cast<double>(ai) * t));
  return phi;
}

// ---------------------------------------------------------------------------
// Isolated families
// ---------------------------------------------------------------------------

using Pattern = std::vector<XiValue>;

inline std::size_t hamming_distance(const Pattern& a, const Pattern& b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

/// Exact weight of one pattern: (1/2)^zeros (1/4)^nonzeros.
inline BigRat pattern_weight(const Pattern& v) {
  unsigned zeros = 0;
  for (XiValue x : v) zeros += x == 0;
  return BigRat(BigInt(1) << zeros, BigInt(1) << (2 * v.size()));
}

/// A set of patterns in {0,±1}^k, pairwise Hamming distance >= 2.
struct IsolatedFamily {
  unsigned k = 0;
  std::set<Pattern> members;
};

inline bool is_pairwise_separated(const std::set<Pattern>& members, std::size_t min_dist) {
  for (auto it = members.begin(); it != members.end(); ++it) {
    auto jt = it;
    for (++jt; jt != members.end(); ++jt)
      if (hamming_distance(*it, *jt) < min_dist) return false;
  }
  return true;
}

inline void validate_family(const IsolatedFamily& family) {
  for (const Pattern& v : family.members) {
    if (v.size() != family.k)
      throw std::invalid_argument("isolated family: pattern length != k");
    for (XiValue x : v)
      if (!is_xi(x)) throw std::invalid_argument("isolated family: entry outside {-1,0,1}");
  }
  if (!is_pairwise_separated(family.members, 2))
    throw std::invalid_argument("family is not 2-isolated");
}

struct IsolationCheck {
  BigRat mass;   // exact P(xi in E)
  BigRat bound;  // 1/k
  bool holds = false;
};

/// Exact mass of a 2-isolated family against the 1/k bound.  Rejects
/// families that are not pairwise Hamming->=2.
inline IsolationCheck verify_2_isolated(const IsolatedFamily& family) {
  if (family.k == 0) throw std::invalid_argument("verify_2_isolated: k must be >= 1");
  validate_family(family);
  IsolationCheck out;
  out.mass = 0;
  for (const Pattern& v : family.members) out.mass += pattern_weight(v);
  out.bound = BigRat(1, family.k);
  out.holds = out.mass <= out.bound;
  return out;
}

/// The radius-1 Hamming ball around v: v itself plus the 2k single-coordinate
/// rewrites.
inline std::set<Pattern> hamming_ball_1(const Pattern& v) {
  std::set<Pattern> ball{v};
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (XiValue alt : {XiValue{-1}, XiValue{0}, XiValue{1}}) {
      if (alt == v[i]) continue;
      Pattern w = v;
      w[i] = alt;
      ball.insert(std::move(w));
    }
  }
  return ball;
}

/// Whether the radius-1 balls around the members are pairwise disjoint,
/// checked by counting: the union has full size (2k+1)|E| iff no two balls
/// share a pattern.  True whenever the pairwise distance is >= 3; families
/// with a pair at distance exactly 2 always overlap through the midpoint.
inline bool hamming_balls_disjoint(const IsolatedFamily& family) {
  std::set<Pattern> unioned;
  std::size_t total = 0;
  for (const Pattern& v : family.members) {
    const auto ball = hamming_ball_1(v);
    total += ball.size();
    unioned.insert(ball.begin(), ball.end());
  }
  return unioned.size() == total;
}

/// Greedy rejection sampler: propose xi-distributed patterns, keep those at
/// Hamming distance >= min_dist from everything kept so far.  Stops at
/// target_size or after max_consecutive_rejections straight rejections, so
/// it may return fewer members than requested.
inline IsolatedFamily random_separated_family(unsigned k, std::size_t target_size,
                                              BitPairStream& bits, std::size_t min_dist,
                                              std::size_t max_consecutive_rejections = 200) {
  if (k == 0) throw std::invalid_argument("random_separated_family: k must be >= 1");
  IsolatedFamily family;
  family.k = k;
  std::size_t rejections = 0;
  while (family.members.size() < target_size && rejections < max_consecutive_rejections) {
    Pattern v(k);
    for (unsigned i = 0; i < k; ++i) v[i] = sample_xi(bits);
    bool ok = true;
    for (const Pattern& w : family.members) {
      if (hamming_distance(v, w) < min_dist) {
        ok = false;
        break;
      }
    }
    if (ok && family.members.insert(std::move(v)).second) {
      rejections = 0;
    } else {
      ++rejections;
    }
  }
  return family;
}

inline IsolatedFamily random_2_isolated_family(unsigned k, std::size_t target_size,
                                               BitPairStream& bits) {
  return random_separated_family(k, target_size, bits, 2);
}

}  // namespace detlab
