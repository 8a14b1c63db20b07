#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "detlab/dist.hpp"
#include "detlab/exactdet.hpp"

using namespace detlab;

namespace {

std::vector<BigInt> weights(std::initializer_list<long long> values) {
  std::vector<BigInt> out;
  for (long long v : values) out.emplace_back(v);
  return out;
}

std::vector<BigInt> random_weights(SplitMix64& gen, std::size_t len, long long max_abs) {
  std::vector<BigInt> out(len);
  for (std::size_t i = 0; i < len; ++i) {
    const long long span = 2 * max_abs + 1;
    out[i] = static_cast<long long>(gen.next() % span) - max_abs;
  }
  return out;
}

}  // namespace

TEST_CASE("exact_sum_distribution hand-checked values") {
  SECTION("a = (1,1): nine weighted outcomes") {
    const auto d = exact_sum_distribution(weights({1, 1}));
    CHECK(d.prob_at(0) == BigRat(3, 8));
    CHECK(d.prob_at(1) == BigRat(1, 4));
    CHECK(d.prob_at(-1) == BigRat(1, 4));
    CHECK(d.prob_at(2) == BigRat(1, 16));
    CHECK(d.prob_at(-2) == BigRat(1, 16));
    CHECK(d.total() == 1);
  }
  SECTION("empty weights give the point mass at zero") {
    const auto d = exact_sum_distribution({});
    REQUIRE(d.probs.size() == 1);
    CHECK(d.prob_at(0) == 1);
  }
  SECTION("zero weights fold to the identity") {
    // sum = 5 xi_3, so P(0) = 1/2 and P(+-5) = 1/4 each
    const auto d = exact_sum_distribution(weights({0, 0, 5}));
    CHECK(d.prob_at(0) == BigRat(1, 2));
    CHECK(d.prob_at(5) == BigRat(1, 4));
    CHECK(d.prob_at(-5) == BigRat(1, 4));
    CHECK(d.total() == 1);
  }
}

TEST_CASE("distribution invariants over random weights") {
  SplitMix64 gen(31);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_weights(gen, 1 + trial % 9, 6);
    const auto d = exact_sum_distribution(a);
    CHECK(d.total() == 1);
    for (const auto& [value, prob] : d.probs) CHECK(d.prob_at(-value) == prob);
    // the dedicated zero-probability path agrees with the full map
    CHECK(exact_zero_probability(a) == d.prob_at(0));
  }
}

TEST_CASE("modular distribution") {
  SECTION("a = (1), p = 3") {
    const auto d = exact_sum_distribution_mod_p(weights({1}), 3);
    CHECK(d.prob_at(0) == BigRat(1, 2));
    CHECK(d.prob_at(1) == BigRat(1, 4));
    CHECK(d.prob_at(2) == BigRat(1, 4));
  }
  SECTION("push-forward consistency with the integer distribution") {
    SplitMix64 gen(32);
    for (int trial = 0; trial < 50; ++trial) {
      const auto a = random_weights(gen, 1 + trial % 7, 9);
      for (std::uint64_t p : {2ULL, 3ULL, 7ULL}) {
        const auto direct = exact_sum_distribution_mod_p(a, p);
        const auto reduced = reduce_mod_p(exact_sum_distribution(a), p);
        CHECK(direct.probs == reduced.probs);
      }
    }
  }
  SECTION("push-forward on sampled minors") {
    const auto m = sample_matrix_indexed(8, 33, 0);
    const MinorVector mv = first_row_minors(m);
    const auto direct = exact_sum_distribution_mod_p(mv.d, 3);
    const auto reduced = reduce_mod_p(exact_sum_distribution(mv.d), 3);
    CHECK(direct.probs == reduced.probs);
    CHECK(direct.total() == 1);
  }
  SECTION("p must be prime") {
    CHECK_THROWS_AS(exact_sum_distribution_mod_p(weights({1}), 9), NotPrimeError);
  }
}

TEST_CASE("sup deviation from uniform") {
  // all weights divisible by p: point mass at zero, deviation 1 - 1/p
  const auto d = exact_sum_distribution_mod_p(weights({3, 6, 0}), 3);
  CHECK(sup_deviation_from_uniform(d) == BigRat(2, 3));
  // near-uniform case stays small
  const auto m = sample_matrix_indexed(10, 34, 1);
  const SecondMinorVector sv = second_order_minors(m);
  const auto dist = exact_sum_distribution_mod_p(sv.w, 3);
  CHECK(sup_deviation_from_uniform(dist) < BigRat(2, 3));
}

TEST_CASE("check_fourier_lemma") {
  SECTION("hand values") {
    const auto c = check_fourier_lemma(weights({1, 1}));
    CHECK(c.max_prob == BigRat(3, 8));
    CHECK(c.zero_prob == BigRat(3, 8));
    CHECK(c.holds);
    CHECK(check_fourier_lemma(weights({1})).holds);
  }
  SECTION("exhaustive sweep, length <= 3, |a| <= 2") {
    std::vector<BigInt> a;
    for (std::size_t len = 0; len <= 3; ++len) {
      a.assign(len, 0);
      std::vector<int> digits(len, 0);
      std::uint64_t total = 1;
      for (std::size_t i = 0; i < len; ++i) total *= 5;
      for (std::uint64_t c = 0; c < total; ++c) {
        CHECK(check_fourier_lemma(a).holds);
        for (std::size_t i = 0; i < len; ++i) {
          if (++digits[i] == 5) {
            digits[i] = 0;
            a[i] = -2;
          } else {
            a[i] = digits[i] - 2;
            break;
          }
        }
      }
    }
  }
}

TEST_CASE("char_fn") {
  CHECK(char_fn(weights({3, -1, 7}), 0.0) == 1.0);
  CHECK(char_fn(weights({1}), std::numbers::pi) == Catch::Approx(0.0).margin(1e-15));
  // inversion: (1/2pi) integral of phi over [-pi, pi] recovers P(0) = 3/8
  const auto a = weights({1, 1});
  const int steps = 4096;  // composite Simpson needs an even count
  const double h = 2 * std::numbers::pi / steps;
  double integral = char_fn(a, -std::numbers::pi) + char_fn(a, std::numbers::pi);
  for (int i = 1; i < steps; ++i) {
    const double t = -std::numbers::pi + i * h;
    integral += char_fn(a, t) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  integral *= h / 3.0;
  CHECK(integral / (2 * std::numbers::pi) == Catch::Approx(3.0 / 8.0).margin(1e-6));
}

namespace {

IsolatedFamily family_of(unsigned k, std::initializer_list<Pattern> members) {
  IsolatedFamily f;
  f.k = k;
  for (const Pattern& v : members) f.members.insert(v);
  return f;
}

}  // namespace

TEST_CASE("verify_2_isolated") {
  SECTION("two opposite corners in k = 2") {
    const auto f = family_of(2, {Pattern{1, 1}, Pattern{-1, -1}});
    const auto check = verify_2_isolated(f);
    CHECK(check.mass == BigRat(1, 8));
    CHECK(check.bound == BigRat(1, 2));
    CHECK(check.holds);
    // distance exactly 2: the radius-1 balls meet at the mixed corners
    CHECK_FALSE(hamming_balls_disjoint(f));
  }
  SECTION("empty family") {
    IsolatedFamily f;
    f.k = 3;
    const auto check = verify_2_isolated(f);
    CHECK(check.mass == 0);
    CHECK(check.holds);
    CHECK(hamming_balls_disjoint(f));
  }
  SECTION("families at distance 1 are rejected") {
    const auto f = family_of(2, {Pattern{1, 1}, Pattern{1, -1}});
    CHECK_THROWS_AS(verify_2_isolated(f), std::invalid_argument);
  }
  SECTION("distance-2 separation does not imply the 1/k mass bound") {
    // the sum-of-coordinates mod 3 code in {0,+-1}^4: any two distinct
    // members differ in at least two coordinates, yet the family holds
    // mass 43/128 > 1/4
    IsolatedFamily f;
    f.k = 4;
    Pattern v(4);
    for (int c = 0; c < 81; ++c) {
      int x = c, sum = 0;
      for (int i = 0; i < 4; ++i) {
        const int digit = x % 3;
        x /= 3;
        v[i] = digit == 0 ? 0 : (digit == 1 ? 1 : -1);
        sum += v[i];
      }
      if (((sum % 3) + 3) % 3 == 0) f.members.insert(v);
    }
    CHECK(f.members.size() == 27);
    CHECK(is_pairwise_separated(f.members, 2));
    const auto check = verify_2_isolated(f);
    CHECK(check.mass == BigRat(43, 128));
    CHECK_FALSE(check.holds);
    CHECK_FALSE(hamming_balls_disjoint(f));
  }
  SECTION("distance >= 3 restores both the bound and disjoint balls") {
    for (unsigned k = 3; k <= 7; ++k) {
      for (std::uint64_t s = 0; s < 100; ++s) {
        BitPairStream bits{substream(40 + k, s)};
        const auto f = random_separated_family(k, 20, bits, 3);
        CHECK(hamming_balls_disjoint(f));
        CHECK(verify_2_isolated(f).holds);
      }
    }
  }
}

TEST_CASE("random_2_isolated_family") {
  SECTION("k = 1 cannot hold two members") {
    BitPairStream bits{substream(41, 0)};
    const auto f = random_2_isolated_family(1, 2, bits);
    CHECK(f.members.size() <= 1);
  }
  SECTION("output always validates") {
    for (std::uint64_t s = 0; s < 200; ++s) {
      BitPairStream bits{substream(42, s)};
      const auto f = random_2_isolated_family(2 + s % 6, 20, bits);
      CHECK_NOTHROW(validate_family(f));
    }
  }
  SECTION("deterministic under the seed") {
    BitPairStream b1{substream(43, 7)};
    BitPairStream b2{substream(43, 7)};
    const auto f1 = random_2_isolated_family(6, 20, b1);
    const auto f2 = random_2_isolated_family(6, 20, b2);
    CHECK(f1.members == f2.members);
    CHECK(f1.members.size() >= 2);
  }
}

TEST_CASE("support cap raises") {
  std::vector<BigInt> a;
  for (int i = 0; i < 20; ++i) a.push_back(BigInt(1) << (i + 1));
  CHECK_THROWS_AS(exact_sum_distribution(a, 1000), RangeCapError);
}
