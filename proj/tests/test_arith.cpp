#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "detlab/arith.hpp"
#include "detlab/errors.hpp"
#include "detlab/experiments.hpp"
#include "detlab/rng.hpp"

using namespace detlab;

TEST_CASE("isqrt") {
  CHECK(isqrt(BigInt(0)) == 0);
  CHECK(isqrt(BigInt(15)) == 3);
  CHECK(isqrt(BigInt(16)) == 4);
  CHECK(isqrt(BigInt(17)) == 4);
  CHECK_THROWS_AS(isqrt(BigInt(-1)), std::domain_error);

  // floor certificate on a 100-digit input
  const BigInt m = ipow(BigInt(10), 100) + 1;
  const BigInt r = isqrt(m);
  CHECK(r * r <= m);
  CHECK((r + 1) * (r + 1) > m);

  SplitMix64 gen(11);
  for (int i = 0; i < 200; ++i) {
    const BigInt v = BigInt(gen.next()) * gen.next() + gen.next();
    const BigInt s = isqrt(v);
    CHECK(s * s <= v);
    CHECK((s + 1) * (s + 1) > v);
  }
}

TEST_CASE("is_perfect_square agrees with the square table") {
  CHECK(is_perfect_square(BigInt(0)));
  CHECK_FALSE(is_perfect_square(BigInt(-4)));
  std::set<long long> squares;
  for (long long k = 0; k * k <= 10'000; ++k) squares.insert(k * k);
  for (long long m = -10'000; m <= 10'000; ++m)
    CHECK(is_perfect_square(BigInt(m)) == (m >= 0 && squares.count(m) > 0));
  // near-squares of large numbers
  SplitMix64 gen(3);
  for (int i = 0; i < 200; ++i) {
    const BigInt k = BigInt(gen.next()) + 2;
    CHECK(is_perfect_square(k * k));
    CHECK_FALSE(is_perfect_square(k * k + 1));
    CHECK_FALSE(is_perfect_square(k * k - 1));
  }
}

TEST_CASE("factorize") {
  SECTION("small examples") {
    const Factorization f12 = factorize(BigInt(12));
    CHECK(f12.sign == 1);
    REQUIRE(f12.factors.size() == 2);
    CHECK(f12.factors[0] == std::pair<BigInt, unsigned>{2, 2});
    CHECK(f12.factors[1] == std::pair<BigInt, unsigned>{3, 1});

    const Factorization f45 = factorize(BigInt(-45));
    CHECK(f45.sign == -1);
    REQUIRE(f45.factors.size() == 2);
    CHECK(f45.factors[0] == std::pair<BigInt, unsigned>{3, 2});
    CHECK(f45.factors[1] == std::pair<BigInt, unsigned>{5, 1});
    CHECK(f45.recompose() == -45);
  }
  SECTION("zero is flagged, not factored") {
    CHECK(factorize(BigInt(0)).zero);
    CHECK_THROWS_AS(divisor_count(factorize(BigInt(0))), std::domain_error);
  }
  SECTION("recomposition holds on random 64-bit integers") {
    SplitMix64 gen(7);
    for (int i = 0; i < 1000; ++i) {
      const std::uint64_t raw = gen.next();
      const BigInt m = (raw & 1) ? BigInt(raw >> 1) : -BigInt(raw >> 1);
      if (m == 0) continue;
      const Factorization f = factorize(m);
      CHECK(f.recompose() == m);
      for (const auto& [p, e] : f.factors) CHECK(is_prime(p));
    }
  }
  SECTION("factors are certified and ascending beyond 64 bits") {
    const BigInt a(8589934609ULL);  // prime just above 2^33
    const BigInt b(8589934621ULL);
    const Factorization f = factorize(a * b);  // product exceeds 2^64
    REQUIRE(f.factors.size() == 2);
    CHECK(f.factors[0].first == a);
    CHECK(f.factors[1].first == b);
    const Factorization sq = factorize(a * a * b);
    REQUIRE(sq.factors.size() == 2);
    CHECK(sq.factors[0] == std::pair<BigInt, unsigned>{a, 2});
    CHECK(sq.factors[1] == std::pair<BigInt, unsigned>{b, 1});
  }
  SECTION("budget exhaustion raises instead of lying") {
    FactorBudget tiny;
    tiny.trial_limit = 100;
    tiny.rho_iterations = 4;
    const BigInt hard = BigInt("2305843009213693951") * BigInt("618970019642690137449562111");
    CHECK_THROWS_AS(factorize(hard, tiny), PartialFactorizationError);
  }
}

TEST_CASE("divisor_count matches enumeration") {
  CHECK(divisor_count(factorize(BigInt(12))) == 6);
  CHECK(divisor_count(factorize(BigInt(1))) == 1);
  for (long long m = 1; m <= 10'000; ++m) {
    std::uint64_t brute = 0;
    for (long long d = 1; d * d <= m; ++d)
      if (m % d == 0) brute += (d * d == m) ? 1 : 2;
    CHECK(divisor_count(factorize(BigInt(m))) == brute);
  }
}

TEST_CASE("p_adic_k") {
  CHECK(p_adic_k(BigInt(12), 2) == 3);
  CHECK(p_adic_k(BigInt(7), 3) == 1);
  CHECK_THROWS_AS(p_adic_k(BigInt(0), 2), std::domain_error);
  CHECK_THROWS_AS(p_adic_k(BigInt(5), 4), NotPrimeError);

  // tau factors through the p-adic multiplicities: tau(m) = prod_p k(p)
  SplitMix64 gen(13);
  for (int i = 0; i < 300; ++i) {
    const long long m = static_cast<long long>(gen.next() % 1'000'000) + 1;
    const Factorization f = factorize(BigInt(m));
    double log_tau = std::log(static_cast<double>(divisor_count(f)));
    double sum = 0;
    for (const auto& [p, e] : f.factors) sum += std::log(static_cast<double>(p_adic_k(m, p)));
    CHECK(log_tau == Catch::Approx(sum).margin(1e-12));
  }
}

TEST_CASE("primes_up_to") {
  CHECK(primes_up_to(10) == std::vector<std::uint64_t>{2, 3, 5, 7});
  CHECK(primes_up_to(1).empty());
  CHECK(primes_up_to(2) == std::vector<std::uint64_t>{2});
  CHECK(primes_up_to(1'000'000).size() == 78498);
  // independent re-derivation by trial division on an interval
  const auto sieved = primes_up_to(2000);
  std::vector<std::uint64_t> trial;
  for (std::uint64_t n = 2; n <= 2000; ++n) {
    bool prime = true;
    for (std::uint64_t d = 2; d * d <= n; ++d)
      if (n % d == 0) {
        prime = false;
        break;
      }
    if (prime) trial.push_back(n);
  }
  CHECK(sieved == trial);
}

TEST_CASE("primality") {
  const auto primes = primes_up_to(2000);
  for (std::uint64_t n = 0; n <= 2000; ++n)
    CHECK(is_prime_u64(n) == std::binary_search(primes.begin(), primes.end(), n));
  // strong pseudoprime to many small bases, still composite
  // (it splits as 149491 * 747451 * 34233211)
  CHECK_FALSE(is_prime_u64(3825123056546413051ULL));
  CHECK(factorize(BigInt(3825123056546413051ULL)).factors.size() == 3);
  CHECK(is_prime_u64(18446744073709551557ULL));  // largest 64-bit prime
  CHECK(is_prime(BigInt("618970019642690137449562111")));           // 2^89 - 1
  CHECK_FALSE(is_prime(BigInt("618970019642690137449562109")));
  CHECK(is_prime(BigInt("170141183460469231731687303715884105727")));  // 2^127 - 1
  const BigInt c = BigInt("618970019642690137449562111") * 3;
  CHECK_FALSE(is_prime(c));
}

TEST_CASE("mertens sums") {
  SECTION("exact small values") {
    const PrimeHarmonicSum s10 = mertens_sum(10);
    CHECK(s10.numerator == 247);
    CHECK(s10.denominator == 210);
    const PrimeHarmonicSum s2 = mertens_sum(2);
    CHECK(s2.numerator == 1);
    CHECK(s2.denominator == 2);
    CHECK_THROWS_AS(mertens_sum(1), std::invalid_argument);
  }
  SECTION("prefix snapshots agree with direct sums") {
    const std::vector<std::uint64_t> cuts{2, 10, 100, 1000};
    const auto snaps = mertens_sum_prefixes(cuts);
    REQUIRE(snaps.size() == 4);
    for (std::size_t i = 0; i < cuts.size(); ++i) {
      const PrimeHarmonicSum direct = mertens_sum(cuts[i]);
      CHECK(snaps[i].numerator == direct.numerator);
      CHECK(snaps[i].denominator == direct.denominator);
    }
  }
  SECTION("dyadic increments stay below the recorded constant") {
    std::vector<std::uint64_t> cuts;
    for (int l = 4; l <= 20; ++l) cuts.push_back(std::uint64_t{1} << l);
    const auto snaps = mertens_sum_prefixes(cuts);
    for (int l = 4; l <= 19; ++l) {
      const double increment = snaps[l - 3].approx() - snaps[l - 4].approx();
      CHECK(increment * l <= kDyadicMertensConstant);
      CHECK(increment > 0);
    }
  }
}

TEST_CASE("maples_limit") {
  const MaplesLimit m2 = maples_limit(2, 1e-9);
  CHECK(std::abs(m2.value - 0.7112119) <= 1e-6);
  const MaplesLimit m3 = maples_limit(3, 1e-9);
  CHECK(std::abs(m3.value - 0.4398739) <= 1e-6);
  CHECK(m2.truncation_error <= 1e-9);

  // high-precision long double oracle with a far deeper cutoff
  for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 101ULL}) {
    long double prod = 1.0L, pk = 1.0L;
    for (int k = 1; k <= 500; ++k) {
      pk /= static_cast<long double>(p);
      prod *= (1.0L - pk);
      if (pk < 1e-30L) break;
    }
    const double oracle = static_cast<double>(1.0L - prod);
    CHECK(std::abs(maples_limit(p, 1e-12).value - oracle) <= 1e-10);
  }

  // decreasing in p, and ~1/p for huge p
  double prev = 1.0;
  for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL}) {
    const double v = maples_limit(p, 1e-9).value;
    CHECK(v < prev);
    prev = v;
  }
  const double big = maples_limit(1'000'000'007ULL, 1e-15).value;
  CHECK(std::abs(big - 1e-9) < 1e-10);

  CHECK_THROWS_AS(maples_limit(4, 1e-9), NotPrimeError);
  CHECK_THROWS_AS(maples_limit(2, 0.0), std::invalid_argument);
}

namespace {

std::set<std::pair<BigInt, BigInt>> brute_square_pairs(long long d, long long radius) {
  std::set<std::pair<BigInt, BigInt>> out;
  for (long long a = 0; a <= radius; ++a)
    for (long long b = 0; b <= radius; ++b) {
      const long long diff = a * a - b * b;
      if (diff == d || diff == -d || diff == 2 * d || diff == -2 * d)
        out.emplace(a, b);
    }
  return out;
}

}  // namespace

TEST_CASE("square_pair_candidates") {
  SECTION("examples") {
    CHECK(square_pair_candidates(BigInt(4)) ==
          std::set<std::pair<BigInt, BigInt>>{{2, 0}, {0, 2}, {3, 1}, {1, 3}});
    CHECK(square_pair_candidates(BigInt(1)) ==
          std::set<std::pair<BigInt, BigInt>>{{1, 0}, {0, 1}});
    CHECK_THROWS_AS(square_pair_candidates(BigInt(0)), std::domain_error);
  }
  SECTION("agrees with brute force for |d| <= 200") {
    for (long long d = 1; d <= 200; ++d) {
      const long long radius = 2 * d + 1;
      CHECK(square_pair_candidates(BigInt(d)) == brute_square_pairs(d, radius));
      CHECK(square_pair_candidates(BigInt(-d)) == brute_square_pairs(-d, radius));
    }
  }
  SECTION("counting bound and post-condition") {
    for (long long d : {1, 2, 7, 12, 36, 97, 144, 199}) {
      const auto pairs = square_pair_candidates(BigInt(d));
      CHECK(pairs.size() <= 4 * divisor_count(factorize(BigInt(2 * d))));
      for (const auto& [a, b] : pairs) {
        const BigInt diff = a * a - b * b;
        const bool ok = diff == d || diff == -d || diff == 2 * d || diff == -2 * d;
        CHECK(ok);
      }
    }
  }
}

TEST_CASE("all_divisors") {
  const auto divs = all_divisors(factorize(BigInt(12)));
  std::set<BigInt> got(divs.begin(), divs.end());
  CHECK(got == std::set<BigInt>{1, 2, 3, 4, 6, 12});
}
