#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "detlab/arith.hpp"
#include "detlab/bigint.hpp"
#include "detlab/dist.hpp"
#include "detlab/ensemble.hpp"
#include "detlab/errors.hpp"
#include "detlab/exactdet.hpp"
#include "detlab/report.hpp"
#include "detlab/rng.hpp"

namespace detlab {

// ---------------------------------------------------------------------------
// Recorded constants
//
// The asymptotic statements under test come with unspecified constants, so
// the shape checks pin these values, measured once at the default seeds and
// kept with headroom.  Tests compare against them; nothing recalibrates at
// run time.
// ---------------------------------------------------------------------------

inline constexpr double kDivisorGrowthConstant = 0.5;   // mean log tau <= C (log n)^2
inline constexpr double kDistinctPrimeConstant = 1.5;   // mean omega   <= C log n
inline constexpr double kDeficiencyScaleConstant = 0.25; // P(def>=2) * p^2 <= C
inline constexpr double kDyadicMertensConstant = 1.25;  // dyadic 1/p increment <= C / l
inline constexpr double kDefaultDeltaHat = 1.0;         // fitted exponent of P(det = 0)

// ---------------------------------------------------------------------------
// Deterministic sharded execution
// ---------------------------------------------------------------------------

inline unsigned default_shard_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Evaluates fn(0..count-1) across `shards` threads over contiguous index
/// blocks and returns the results in index order.  Because every sample is
/// a pure function of its index (experiments key their RNG substreams by
/// it), the output is identical for every shard count.
template <typename Fn>
auto run_indexed(std::uint64_t count, unsigned shards, Fn&& fn)
    -> std::vector<std::decay_t<decltype(fn(std::uint64_t{}))>> {
  using T = std::decay_t<decltype(fn(std::uint64_t{}))>;
  std::vector<T> out(count);
  if (count == 0) return out;
  const unsigned workers =
      static_cast<unsigned>(std::min<std::uint64_t>(std::max(1u, shards), count));
  if (workers == 1) {
    for (std::uint64_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const std::uint64_t base = count / workers;
  const std::uint64_t extra = count % workers;
  std::uint64_t lo = 0;
  for (unsigned s = 0; s < workers; ++s) {
    const std::uint64_t hi = lo + base + (s < extra ? 1 : 0);
    threads.emplace_back([&, lo, hi] {
      try {
        for (std::uint64_t i = lo; i < hi; ++i) out[i] = fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
    lo = hi;
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

namespace internal {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Nearest-rank percentile of a nonempty sample, pct in (0, 100].
inline double percentile(std::vector<double> values, double pct) {
  std::sort(values.begin(), values.end());
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(pct / 100.0 * static_cast<double>(values.size())));
  return values[std::min(values.size() - 1, std::max<std::size_t>(1, rank) - 1)];
}

inline double mean(const std::vector<double>& values) {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

/// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double cov = 0.0, var = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cov += (x[i] - mx) * (y[i] - my);
    var += (x[i] - mx) * (x[i] - mx);
  }
  return cov / var;
}

}  // namespace internal

// ---------------------------------------------------------------------------
// Exhaustive enumeration at tiny n
// ---------------------------------------------------------------------------

namespace internal {

inline long long det3_entries(const long long* e) {
  return e[0] * (e[4] * e[8] - e[5] * e[7]) - e[1] * (e[3] * e[8] - e[5] * e[6]) +
         e[2] * (e[3] * e[7] - e[4] * e[6]);
}

inline long long det_small(const XiValue* entries, unsigned n) {
  long long e[16];
  for (unsigned i = 0; i < n * n; ++i) e[i] = entries[i];
  switch (n) {
    case 1:
      return e[0];
    case 2:
      return e[0] * e[3] - e[1] * e[2];
    case 3:
      return det3_entries(e);
    case 4: {
      long long acc = 0;
      for (unsigned col = 0; col < 4; ++col) {
        if (e[col] == 0) continue;
        long long sub[9];
        unsigned idx = 0;
        for (unsigned i = 1; i < 4; ++i)
          for (unsigned j = 0; j < 4; ++j)
            if (j != col) sub[idx++] = e[i * 4 + j];
        const long long term = e[col] * det3_entries(sub);
        acc += (col % 2 == 0) ? term : -term;
      }
      return acc;
    }
    default:
      throw std::invalid_argument("det_small: n must be <= 4");
  }
}

/// Accumulates, over the base-3 counter range [lo, hi), the integer mass
/// sum(2^zeros) per determinant value.  Total mass over the full sweep is
/// 4^(n^2); dividing by it recovers exact probabilities.
inline std::map<long long, std::uint64_t> det_mass_sweep(unsigned n, std::uint64_t lo,
                                                         std::uint64_t hi) {
  const unsigned m = n * n;
  std::vector<std::uint8_t> digit(m, 0);
  std::vector<XiValue> entry(m, 0);
  std::uint64_t c = lo;
  for (unsigned i = 0; i < m; ++i) {
    digit[i] = static_cast<std::uint8_t>(c % 3);
    c /= 3;
    entry[i] = digit[i] == 0 ? XiValue{0} : (digit[i] == 1 ? XiValue{1} : XiValue{-1});
  }
  std::map<long long, std::uint64_t> acc;
  for (std::uint64_t counter = lo; counter < hi; ++counter) {
    unsigned zeros = 0;
    for (unsigned i = 0; i < m; ++i) zeros += entry[i] == 0;
    acc[det_small(entry.data(), n)] += std::uint64_t{1} << zeros;
    for (unsigned i = 0; i < m; ++i) {
      if (++digit[i] == 3) {
        digit[i] = 0;
        entry[i] = 0;
      } else {
        entry[i] = digit[i] == 1 ? XiValue{1} : XiValue{-1};
        break;
      }
    }
  }
  return acc;
}

}  // namespace internal

/// Exact distribution of det M for n <= 4, by weighted enumeration of all
/// 3^(n^2) matrices.  Entry order matches sample_matrix (row-major).
inline std::map<long long, BigRat> exact_det_distribution(unsigned n, unsigned shards = 1) {
  if (n == 0 || n > 4)
    throw EnumerationCapError("exact_det_distribution: n must be in 1..4");
  const unsigned m = n * n;
  std::uint64_t total = 1;
  for (unsigned i = 0; i < m; ++i) total *= 3;
  const unsigned workers = std::max(1u, shards);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges;
  const std::uint64_t base = total / workers, extra = total % workers;
  std::uint64_t lo = 0;
  for (unsigned s = 0; s < workers; ++s) {
    const std::uint64_t hi = lo + base + (s < extra ? 1 : 0);
    if (hi > lo) ranges.emplace_back(lo, hi);
    lo = hi;
  }
  const auto partials = run_indexed(ranges.size(), workers, [&](std::uint64_t r) {
    return internal::det_mass_sweep(n, ranges[r].first, ranges[r].second);
  });
  std::map<long long, std::uint64_t> merged;
  for (const auto& part : partials)
    for (const auto& [value, mass] : part) merged[value] += mass;
  const BigInt denom = BigInt(1) << (2 * m);
  std::map<long long, BigRat> out;
  for (const auto& [value, mass] : merged) out.emplace(value, BigRat(mass, denom));
  return out;
}

/// Exact P(det M is a perfect square) for n <= 4.
inline BigRat exact_square_probability(unsigned n, unsigned shards = 1) {
  const auto dist = exact_det_distribution(n, shards);
  BigRat p = 0;
  for (const auto& [value, prob] : dist)
    if (value >= 0 && is_perfect_square(BigInt(value))) p += prob;
  return p;
}

// ---------------------------------------------------------------------------
// Experiment drivers
// ---------------------------------------------------------------------------

namespace internal {

inline Provenance provenance(std::uint64_t seed, unsigned shards, std::uint64_t samples) {
  Provenance p;
  p.seed = seed;
  p.shards = shards;
  p.samples = samples;
  return p;
}

inline std::string pattern_string(const Pattern& v) {
  std::string s;
  s.reserve(v.size());
  for (XiValue x : v) s += x == 0 ? '0' : (x == 1 ? '+' : '-');
  return s;
}

}  // namespace internal

inline ExperimentReport exact_square_probability_report(unsigned n, unsigned shards) {
  internal::Stopwatch timer;
  ExperimentReport r;
  r.experiment = "exact-square-prob";
  r.params["n"] = n;
  r.provenance = internal::provenance(0, shards, 0);
  const auto dist = exact_det_distribution(n, shards);
  BigRat p_square = 0, p_zero = 0;
  for (const auto& [value, prob] : dist) {
    if (value == 0) p_zero = prob;
    if (value >= 0 && is_perfect_square(BigInt(value))) p_square += prob;
  }
  r.estimates.push_back(make_exact_estimate("p_square", p_square));
  r.estimates.push_back(make_exact_estimate("p_det_zero", p_zero));
  r.duration_seconds = timer.seconds();
  return r;
}

/// Monte Carlo estimate of P(det M is a perfect square).  det = 0 counts as
/// a square (0 = 0^2).
inline ExperimentReport square_probability_experiment(std::size_t n, std::uint64_t samples,
                                                      std::uint64_t seed, unsigned shards) {
  if (samples < 1) throw std::invalid_argument("square_probability_experiment: samples >= 1");
  internal::Stopwatch timer;
  ExperimentReport r;
  r.experiment = "square-prob";
  r.params["n"] = n;
  r.provenance = internal::provenance(seed, shards, samples);
  const auto hits = run_indexed(samples, shards, [&](std::uint64_t i) -> std::uint8_t {
    const SignedTernaryMatrix m = sample_matrix_indexed(n, seed, i);
    return is_perfect_square(determinant(m)) ? 1 : 0;
  });
  const std::uint64_t successes = std::accumulate(hits.begin(), hits.end(), std::uint64_t{0});
  r.estimates.push_back(make_probability_estimate("p_square", successes, samples));
  r.duration_seconds = timer.seconds();
  return r;
}

/// P(det = 0) per dimension (exact for n <= 4, Monte Carlo above) plus a
/// least-squares decay exponent fitted on log2 P over the top half of the
/// dimension list (entries with zero observed hits are left out of the fit).
inline ExperimentReport mode_decay_experiment(const std::vector<std::size_t>& n_list,
                                              std::uint64_t samples, std::uint64_t seed,
                                              unsigned shards) {
  internal::Stopwatch timer;
  ExperimentReport r;
  r.experiment = "mode-decay";
  r.params["n_list"] = n_list;
  r.provenance = internal::provenance(seed, shards, samples);
  std::vector<double> xs, ys;
  for (std::size_t block = 0; block < n_list.size(); ++block) {
    const std::size_t n = n_list[block];
    double p_zero = 0.0;
    if (n <= 4) {
      const auto dist = exact_det_distribution(static_cast<unsigned>(n), shards);
      BigRat exact_zero = 0, max_prob = 0;
      for (const auto& [value, prob] : dist) {
        if (value == 0) exact_zero = prob;
        max_prob = std::max(max_prob, prob);
      }
      Estimate e = make_exact_estimate("p_det_zero_n" + std::to_string(n), exact_zero);
      r.estimates.push_back(e);
      r.estimates.push_back(make_value_estimate(
          "mode_at_zero_n" + std::to_string(n), exact_zero == max_prob ? 1.0 : 0.0));
      p_zero = rational_as_double(exact_zero);
    } else {
      const std::uint64_t offset = block * samples;
      const auto hits = run_indexed(samples, shards, [&](std::uint64_t i) -> std::uint8_t {
        const SignedTernaryMatrix m = sample_matrix_indexed(n, seed, offset + i);
        return determinant(m) == 0 ? 1 : 0;
      });
      const std::uint64_t zeros = std::accumulate(hits.begin(), hits.end(), std::uint64_t{0});
      r.estimates.push_back(
          make_probability_estimate("p_det_zero_n" + std::to_string(n), zeros, samples));
      p_zero = static_cast<double>(zeros) / static_cast<double>(samples);
    }
    if (p_zero > 0) {
      xs.push_back(static_cast<double>(n));
      ys.push_back(std::log2(p_zero));
    }
  }
  // fit over the top half of the dimension list
  const std::size_t keep = (xs.size() + 1) / 2;
  if (xs.size() >= 2 && keep >= 2) {
    const std::vector<double> fx(xs.end() - keep, xs.end());
    const std::vector<double> fy(ys.end() - keep, ys.end());
    r.estimates.push_back(
        make_value_estimate("delta_hat", -internal::fit_slope(fx, fy)));
  }
  r.duration_seconds = timer.seconds();
  return r;
}

/// Frequency of p | det M against the limiting value.
inline ExperimentReport maples_experiment(std::size_t n, std::uint64_t p,
                                          std::uint64_t samples, std::uint64_t seed,
                                          unsigned shards) {
  internal::Stopwatch timer;
  ExperimentReport r;
  r.experiment = "maples";
  r.params["n"] = n;
  r.params["p"] = p;
  r.provenance = internal::provenance(seed, shards, samples);
  const MaplesLimit limit = maples_limit(p, 1e-12);
  const auto hits = run_indexed(samples, shards, [&](std::uint64_t i) -> std::uint8_t {
    const SignedTernaryMatrix m = sample_matrix_indexed(n, seed, i);
    return det_mod_p(m, p) == 0 ? 1 : 0;
  });
  const std::uint64_t divisible = std::accumulate(hits.begin(), hits.end(), std::uint64_t{0});
  r.estimates.push_back(make_probability_estimate("p_divisible", divisible, samples));
  r.estimates.push_back(make_value_estimate("maples_limit", limit.value));
  r.estimates.push_back(
      make_value_estimate("maples_limit_truncation_error", limit.truncation_error));
  r.duration_seconds = timer.seconds();
  return r;
}

namespace internal {

struct DivisorSample {
  bool zero = false;
  bool failed = false;
  double log_tau = 0.0;
  double omega = 0.0;
};

inline DivisorSample divisor_sample_of(const BigInt& value) {
  DivisorSample s;
  if (value == 0) {
    s.zero = true;
    return s;
  }
  try {
    const Factorization f = factorize(value);
    s.log_tau = std::log(static_cast<double>(divisor_count(f)));
    s.omega = static_cast<double>(f.factors.size());
  } catch (const PartialFactorizationError&) {
    s.failed = true;
  }
  return s;
}

}  // namespace internal

/// Mean log tau(det M) (and mean count of distinct prime factors) per
/// dimension; the singular fraction is reported separately since tau is
/// undefined at zero.
inline ExperimentReport divisor_growth_experiment(const std::vector<std::size_t>& n_list,
                                                  std::uint64_t samples, std::uint64_t seed,
                                                  unsigned shards) {
  internal::Stopwatch timer;
  ExperimentReport r;
  r.experiment = "divisors";
  r.params["n_list"] = n_list;
  r.provenance = internal::provenance(seed, shards, samples);
  for (std::size_t block = 0; block < n_list.size(); ++block) {
    const std::size_t n = n_list[block];
    const std::uint64_t offset = block * samples;
    const auto rows = run_indexed(samples, shards, [&](std::uint64_t i) {
      const SignedTernaryMatrix m = sample_matrix_indexed(n, seed, offset + i);
      return internal::divisor_sample_of(determinant(m));
    });
    std::uint64_t zeros = 0, failures = 0;
    std::vector<double> log_taus, omegas;
    for (const auto& row : rows) {
      if (row.zero) {
        ++zeros;
      } else if (row.failed) {
        ++failures;
      } else {
        log_taus.push_back(row.log_tau);
        omegas.push_back(row.omega);
      }
    }
    const std::string suffix = "_n" + std::to_string(n);
    r.estimates.push_back(make_probability_estimate("p_det_zero" + suffix, zeros, samples));
    if (!log_taus.empty()) {
      r.estimates.push_back(
          make_value_estimate("mean_log_tau" + suffix, internal::mean(log_taus)));
      r.estimates.push_back(
          make_value_estimate("mean_distinct_primes" + suffix, internal::mean(omegas)));
    }
    r.estimates.push_back(
        make_value_estimate("factorization_failures" + suffix, static_cast<double>(failures)));
  }
  r.duration_seconds = timer.seconds();
  return r;
}

/// Mean log tau(tau1 d1 + tau2 d2) over samples where the combination is
/// nonzero.
inline ExperimentReport pair_divisor_experiment(std::size_t n, std::uint64_t samples,
                                                int tau1, int tau2, std::uint64_t seed,
                                                unsigned shards) {
  const auto valid_tau = [](int t) { return t == 1 || t == -1 || t == 2 || t == -2; };
  if (!valid_tau(tau1) || !valid_tau(tau2))
    throw std::invalid_argument("pair_divisor_experiment: tau must be in {+-1, +-2}");
  if (n < 3) throw std::invalid_argument("pair_divisor_experiment: n must be >= 3");
  internal::Stopwatch timer;
  ExperimentReport r;
  r.experiment = "pair-divisors";
  r.params["n"] = n;
  r.params["tau1"] = tau1;
  r.params["tau2"] = tau2;
  r.provenance = internal::provenance(seed, shards, samples);
  const auto rows = run_indexed(samples, shards, [&](std::uint64_t i) {
    const SignedTernaryMatrix m = sample_matrix_indexed(n, seed, i);
    const BigInt d1 = first_row_minor(m, 0);
    const BigInt d2 = first_row_minor(m, 1);
    return internal::divisor_sample_of(tau1 * d1 + tau2 * d2);
  });
  std::uint64_t zeros = 0, failures = 0;
  std::vector<double> log_taus;
  for (const auto& row : rows) {
    if (row.zero)
      ++zeros;
    else if (row.failed)
      ++failures;
    else
      log_taus.push_back(row.log_tau);
  }
  r.estimates.push_back(make_probability_estimate("p_zero_combination", zeros, samples));
  if (!log_taus.empty())
    r.estimates.push_back(make_value_estimate("mean_log_tau", internal::mean(log_taus)));
  r.estimates.push_back(
      make_value_estimate("factorization_failures", static_cast<double>(failures)));
  r.duration_seconds = timer.seconds();
  return r;
}

/// Tail frequency of the divisor count of 2 d_j over the last k first-row
/// minors: P(exists j with tau(2 d_j) > e^sqrt(n)).  Samples with a zero
/// minor are tallied apart (tau is undefined there).
inline ExperimentReport divisor_tail_experiment(std::size_t n, std::size_t k,
                                                std::uint64_t samples, std::uint64_t seed,
                                                unsigned shards) {
  if (k >= n) throw std::invalid_argument("divisor_tail_experiment: need k < n");
  if (n < 2) throw std::invalid_argument("divisor_tail_experiment: need n >= 2");
  internal::Stopwatch timer;
  ExperimentReport r;
  r.experiment = "divisor-tail";
  r.params["n"] = n;
  r.params["k"] = k;
  r.provenance = internal::provenance(seed, shards, samples);
  const double threshold = std::exp(std::sqrt(static_cast<double>(n)));
  struct Row {
    std::uint8_t zero_minor = 0;
    std::uint8_t failed = 0;
    std::uint8_t exceeded = 0;
  };
  const auto rows = run_indexed(samples, shards, [&](std::uint64_t i) {
    const SignedTernaryMatrix m = sample_matrix_indexed(n, seed, i);
    Row row;
    for (std::size_t col = n - k; col < n; ++col) {
      const BigInt d = first_row_minor(m, col);
      if (d == 0) {
        row.zero_minor = 1;
        return row;
      }
      try {
        const std::uint64_t tau = divisor_count(factorize(2 * d));
        if (static_cast<double>(tau) > threshold) row.exceeded = 1;
      } catch (const PartialFactorizationError&) {
        row.failed = 1;
        return row;
      }
    }
    return row;
  });
  std::uint64_t zeros = 0, failures = 0, exceeded = 0, valid = 0;
  for (const auto& row : rows) {
    if (row.zero_minor)
      ++zeros;
    else if (row.failed)
      ++failures;
    else {
      ++valid;
      exceeded += row.exceeded;
    }
  }
  r.estimates.push_back(make_probability_estimate("p_tail_exceeded", exceeded, valid));
  r.estimates.push_back(make_probability_estimate("p_any_zero_minor", zeros, samples));
  r.estimates.push_back(
      make_value_estimate("factorization_failures", static_cast<double>(failures)));
  const double logn = std::log(static_cast<double>(n));
  r.estimates.push_back(make_value_estimate(
      "markov_reference",
      kDivisorGrowthConstant * static_cast<double>(k) * logn * logn /
          std::sqrt(static_cast<double>(n))));
  r.duration_seconds = timer.seconds();
  return r;
}

/// Distribution over sampled matrices of the exact inner probability
/// P_xi(sum_{i<=n-k} xi_i d_i = 0), computed by the exact DP per sample.
inline ExperimentReport partial_zero_experiment(std::size_t n, std::size_t k,
                                                std::uint64_t samples, std::uint64_t seed,
                                                unsigned shards,
                                                double delta_hat = kDefaultDeltaHat) {
  if (n > 14) throw RangeCapError("partial_zero_experiment: n must be <= 14");
  if (k >= n) throw std::invalid_argument("partial_zero_experiment: need k < n");
  internal::Stopwatch timer;
  ExperimentReport r;
  r.experiment = "partial-zero";
  r.params["n"] = n;
  r.params["k"] = k;
  r.params["delta_hat"] = delta_hat;
  r.provenance = internal::provenance(seed, shards, samples);
  const double threshold = std::pow(2.0, -static_cast<double>(n) * delta_hat / 2.0);
  const auto inner = run_indexed(samples, shards, [&](std::uint64_t i) -> double {
    const SignedTernaryMatrix m = sample_matrix_indexed(n, seed, i);
    std::vector<BigInt> a(n - k);
    for (std::size_t col = 0; col + k < n; ++col) a[col] = first_row_minor(m, col);
    return rational_as_double(exact_zero_probability(a));
  });
  std::uint64_t above = 0;
  for (double v : inner) above += v > threshold;
  std::vector<double> values(inner.begin(), inner.end());
  r.estimates.push_back(make_value_estimate("mean_inner_zero_prob", internal::mean(values)));
  r.estimates.push_back(
      make_value_estimate("median_inner_zero_prob", internal::percentile(values, 50)));
  r.estimates.push_back(
      make_value_estimate("p90_inner_zero_prob", internal::percentile(values, 90)));
  r.estimates.push_back(make_probability_estimate("p_above_threshold", above, samples));
  r.estimates.push_back(make_value_estimate("threshold", threshold));
  r.duration_seconds = timer.seconds();
  return r;
}

/// For each sampled matrix and first-row prefix, sweeps all 3^k suffix
/// completions, keeps the ones whose determinant is a perfect square, and
/// measures that set: its size, whether it is 2-isolated, and its exact
/// xi-mass (which must be <= 1/k whenever the set is 2-isolated).
inline ExperimentReport square_suffix_experiment(std::size_t n, std::size_t k,
                                                 std::uint64_t samples, std::uint64_t seed,
                                                 unsigned shards) {
  if (k == 0 || k > 10) throw EnumerationCapError("square_suffix_experiment: k must be in 1..10");
  if (k >= n) throw std::invalid_argument("square_suffix_experiment: need k < n");
  internal::Stopwatch timer;
  ExperimentReport r;
  r.experiment = "square-suffix";
  r.params["n"] = n;
  r.params["k"] = k;
  r.provenance = internal::provenance(seed, shards, samples);
  struct Row {
    std::uint32_t set_size = 0;
    std::uint8_t two_isolated = 0;
    std::uint8_t coupling_violated = 0;
    BigRat mass;
    std::string prefix;
    std::vector<std::string> members;
  };
  const auto rows = run_indexed(samples, shards, [&](std::uint64_t i) {
    const SignedTernaryMatrix m = sample_matrix_indexed(n, seed, i);
    const MinorVector minors = first_row_minors(m);
    BigInt base = 0;
    for (std::size_t col = 0; col + k < n; ++col) {
      if (m(0, col) == 0) continue;
      const BigInt term = BigInt(m(0, col)) * minors.d[col];
      base += (col % 2 == 0) ? term : -term;
    }
    Row row;
    row.prefix.reserve(n - k);
    for (std::size_t col = 0; col + k < n; ++col)
      row.prefix += m(0, col) == 0 ? '0' : (m(0, col) == 1 ? '+' : '-');
    IsolatedFamily family;
    family.k = static_cast<unsigned>(k);
    enumerate_weighted(static_cast<unsigned>(k), [&](const WeightedVector& wv) {
      BigInt det = base;
      for (std::size_t j = 0; j < k; ++j) {
        if (wv.pattern[j] == 0) continue;
        const std::size_t col = n - k + j;
        const BigInt term = BigInt(wv.pattern[j]) * minors.d[col];
        det += (col % 2 == 0) ? term : -term;
      }
      if (is_perfect_square(det)) {
        family.members.insert(wv.pattern);
        row.mass += wv.weight;
      }
    });
    row.set_size = static_cast<std::uint32_t>(family.members.size());
    row.two_isolated = is_pairwise_separated(family.members, 2) ? 1 : 0;
    if (row.two_isolated && row.mass > BigRat(1, static_cast<unsigned>(k)))
      row.coupling_violated = 1;
    for (const Pattern& v : family.members) row.members.push_back(internal::pattern_string(v));
    return row;
  });
  std::uint64_t isolated = 0, violations = 0;
  double size_acc = 0.0;
  BigRat mass_acc = 0;
  for (const auto& row : rows) {
    isolated += row.two_isolated;
    violations += row.coupling_violated;
    size_acc += row.set_size;
    mass_acc += row.mass;
  }
  r.estimates.push_back(make_probability_estimate("p_two_isolated", isolated, samples));
  r.estimates.push_back(
      make_probability_estimate("p_not_two_isolated", samples - isolated, samples));
  r.estimates.push_back(make_value_estimate(
      "mean_set_size", size_acc / static_cast<double>(std::max<std::uint64_t>(1, samples))));
  if (samples > 0)
    r.estimates.push_back(make_exact_estimate(
        "mean_mass", mass_acc / BigRat(static_cast<std::uint64_t>(samples))));
  r.estimates.push_back(
      make_value_estimate("coupling_violations", static_cast<double>(violations)));
  Json exemplars = Json::array();
  for (std::size_t i = 0; i < rows.size() && i < 3; ++i) {
    const auto& row = rows[i];
    exemplars.push_back(Json{{"sample", i},
                             {"prefix", row.prefix},
                             {"members", row.members},
                             {"two_isolated", row.two_isolated != 0},
                             {"mass", rational_string(row.mass)}});
  }
  r.extras = Json{{"exemplars", exemplars}};
  r.duration_seconds = timer.seconds();
  return r;
}

/// Frequency of rank deficiency >= 2 among the trailing columns, with the
/// exact implication check: such samples must have p | d1 and p | d2.
inline ExperimentReport codim_experiment(std::size_t n, std::uint64_t p,
                                         std::uint64_t samples, std::uint64_t seed,
                                         unsigned shards) {
  if (n < 4) throw std::invalid_argument("codim_experiment: need n >= 4");
  internal::Stopwatch timer;
  ExperimentReport r;
  r.experiment = "codim";
  r.params["n"] = n;
  r.params["p"] = p;
  r.provenance = internal::provenance(seed, shards, samples);
  struct Row {
    std::uint8_t deficient = 0;
    std::uint8_t implication_violated = 0;
  };
  const auto rows = run_indexed(samples, shards, [&](std::uint64_t i) {
    const SignedTernaryMatrix m = sample_matrix_indexed(n, seed, i);
    Row row;
    const FpRankReport rank = trailing_column_deficiency(m, p, 3);
    if (rank.deficiency >= 2) {
      row.deficient = 1;
      const BigInt d1 = first_row_minor(m, 0);
      const BigInt d2 = first_row_minor(m, 1);
      if (d1 % p != 0 || d2 % p != 0) row.implication_violated = 1;
    }
    return row;
  });
  std::uint64_t deficient = 0, violations = 0;
  for (const auto& row : rows) {
    deficient += row.deficient;
    violations += row.implication_violated;
  }
  r.estimates.push_back(make_probability_estimate("p_deficiency_ge2", deficient, samples));
  const double freq =
      samples == 0 ? 0.0 : static_cast<double>(deficient) / static_cast<double>(samples);
  r.estimates.push_back(make_value_estimate(
      "deficiency_times_p2", freq * static_cast<double>(p) * static_cast<double>(p)));
  r.estimates.push_back(
      make_value_estimate("implication_violations", static_cast<double>(violations)));
  r.duration_seconds = timer.seconds();
  return r;
}

/// Sup-distance from uniform of the exact mod-p distribution of the signed
/// xi-weighted sum of second-order minors, stratified by the trailing-column
/// deficiency.
inline ExperimentReport equidist_experiment(std::size_t n, std::uint64_t p,
                                            std::uint64_t samples, std::uint64_t seed,
                                            unsigned shards) {
  if (n < 4) throw std::invalid_argument("equidist_experiment: need n >= 4");
  internal::Stopwatch timer;
  ExperimentReport r;
  r.experiment = "equidist";
  r.params["n"] = n;
  r.params["p"] = p;
  r.provenance = internal::provenance(seed, shards, samples);
  struct Row {
    double sup_dev = 0.0;
    std::uint8_t stratum = 0;  // deficiency capped at 2
    std::uint8_t normalization_violated = 0;
  };
  const auto rows = run_indexed(samples, shards, [&](std::uint64_t i) {
    const SignedTernaryMatrix m = sample_matrix_indexed(n, seed, i);
    const SecondMinorVector sv = second_order_minors(m);
    std::vector<BigInt> a(sv.w.size());
    for (std::size_t idx = 0; idx < sv.w.size(); ++idx) {
      // 1-based label j = idx + 2; sign (-1)^j
      a[idx] = (idx % 2 == 0) ? sv.w[idx] : -sv.w[idx];
    }
    const SumDistribution dist = exact_sum_distribution_mod_p(a, p);
    Row row;
    row.sup_dev = rational_as_double(sup_deviation_from_uniform(dist));
    row.normalization_violated = dist.total() == 1 ? 0 : 1;
    const std::size_t def = trailing_column_deficiency(m, p, 3).deficiency;
    row.stratum = static_cast<std::uint8_t>(std::min<std::size_t>(def, 2));
    return row;
  });
  std::vector<double> all;
  std::array<std::vector<double>, 3> strata;
  std::uint64_t normalization_violations = 0;
  for (const auto& row : rows) {
    all.push_back(row.sup_dev);
    strata[row.stratum].push_back(row.sup_dev);
    normalization_violations += row.normalization_violated;
  }
  if (!all.empty()) {
    r.estimates.push_back(
        make_value_estimate("median_sup_deviation", internal::percentile(all, 50)));
    r.estimates.push_back(
        make_value_estimate("p90_sup_deviation", internal::percentile(all, 90)));
  }
  const char* stratum_names[3] = {"def0", "def1", "def2plus"};
  for (int s = 0; s < 3; ++s) {
    r.estimates.push_back(make_value_estimate(
        std::string("count_") + stratum_names[s], static_cast<double>(strata[s].size())));
    if (!strata[s].empty()) {
      r.estimates.push_back(
          make_value_estimate(std::string("median_sup_deviation_") + stratum_names[s],
                              internal::percentile(strata[s], 50)));
      r.estimates.push_back(
          make_value_estimate(std::string("p90_sup_deviation_") + stratum_names[s],
                              internal::percentile(strata[s], 90)));
    }
  }
  r.estimates.push_back(make_value_estimate("normalization_violations",
                                            static_cast<double>(normalization_violations)));
  r.duration_seconds = timer.seconds();
  return r;
}

}  // namespace detlab
