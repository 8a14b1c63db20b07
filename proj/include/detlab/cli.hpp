#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "detlab/arith.hpp"
#include "detlab/bigint.hpp"
#include "detlab/dist.hpp"
#include "detlab/ensemble.hpp"
#include "detlab/errors.hpp"
#include "detlab/exactdet.hpp"
#include "detlab/experiments.hpp"
#include "detlab/report.hpp"
#include "detlab/version.hpp"

namespace detlab::cli {

/// Parsed invocation: subcommand, its parameters, and where/how to emit.
struct RunConfig {
  std::string subcommand;
  Json params = Json::object();
  std::string format = "json";  // "json" or "csv"
  std::optional<std::string> out_path;

  bool operator==(const RunConfig&) const = default;
};

/// Subcommand name and parameters recovered from an emitted report.
inline RunConfig run_config_from_report(const ExperimentReport& r) {
  RunConfig c;
  c.subcommand = r.experiment;
  c.params = r.params;
  return c;
}

// ---------------------------------------------------------------------------
// Matrix files
// ---------------------------------------------------------------------------

/// Text format: first line n, then n lines of n space-separated entries from
/// {-1,0,1}.  Parse failures carry 1-based line/column positions.
inline SignedTernaryMatrix read_matrix_stream(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;

  const auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    ++lineno;
    return false;
  };

  if (!next_line()) throw MatrixParseError(1, 1, "empty file; expected dimension");
  std::size_t n = 0;
  {
    std::istringstream head(line);
    long long v = 0;
    if (!(head >> v) || v < 1)
      throw MatrixParseError(lineno, 1, "expected a positive dimension");
    std::string rest;
    if (head >> rest)
      throw MatrixParseError(lineno, line.find(rest) + 1, "unexpected token after dimension");
    n = static_cast<std::size_t>(v);
  }

  std::vector<XiValue> entries;
  entries.reserve(n * n);
  for (std::size_t row = 0; row < n; ++row) {
    if (!next_line())
      throw MatrixParseError(lineno, 1,
                             "expected matrix row " + std::to_string(row + 1) + " of " +
                                 std::to_string(n));
    std::size_t pos = 0, count = 0;
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r'))
        ++pos;
      if (pos >= line.size()) break;
      const std::size_t start = pos;
      while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '\r')
        ++pos;
      const std::string token = line.substr(start, pos - start);
      if (count >= n)
        throw MatrixParseError(lineno, start + 1, "too many entries in row");
      long long v = 0;
      try {
        std::size_t used = 0;
        v = std::stoll(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw MatrixParseError(lineno, start + 1, "entry '" + token + "' is not an integer");
      }
      if (!is_xi(static_cast<int>(v)))
        throw MatrixParseError(lineno, start + 1,
                               "entry '" + token + "' outside {-1,0,1}");
      entries.push_back(static_cast<XiValue>(v));
      ++count;
    }
    if (count < n)
      throw MatrixParseError(lineno, line.size() + 1,
                             "row has " + std::to_string(count) + " entries; expected " +
                                 std::to_string(n));
  }
  return SignedTernaryMatrix::from_entries(n, std::move(entries));
}

inline SignedTernaryMatrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MatrixParseError(1, 1, "cannot open '" + path + "'");
  return read_matrix_stream(in);
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

namespace internal {

inline unsigned env_default_shards() {
  if (const char* env = std::getenv("DETLAB_SHARDS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return default_shard_count();
}

inline void emit(const ExperimentReport& report, const RunConfig& config, std::ostream& out,
                 std::ostream& err, int& status) {
  const std::string payload =
      config.format == "csv" ? report_to_csv(report) : report_to_json_string(report);
  if (config.out_path) {
    std::ofstream file(*config.out_path, std::ios::binary);
    if (!file) {
      err << "error: cannot write '" << *config.out_path << "'\n";
      status = 1;
      return;
    }
    file << payload;
  } else {
    out << payload;
  }
}

}  // namespace internal

/// Runs one CLI invocation.  Exit codes: 0 success, 2 argument or parse
/// errors, 3 resource-cap errors, 1 anything else.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"determinant statistics laboratory"};
  app.set_version_flag("--version", std::string("detlab ") + kVersion);
  app.require_subcommand(1);

  RunConfig config;
  std::uint64_t samples = 10'000;
  std::uint64_t seed = 0;
  unsigned shards = internal::env_default_shards();

  const auto add_common = [&](CLI::App* sub, bool with_sampling) {
    sub->add_option("--format", config.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    sub->add_option("--out", [&](const std::vector<std::string>& v) {
          config.out_path = v.back();
          return true;
        },
        "write the report to a file instead of standard output");
    if (with_sampling) {
      sub->add_option("--samples", samples, "Monte Carlo sample count")->capture_default_str();
      sub->add_option("--seed", seed, "master seed")->capture_default_str();
      sub->add_option("--shards", shards, "parallel shard count")->capture_default_str();
    }
  };

  // --- square-prob ---
  std::size_t sp_n = 8;
  auto* sp = app.add_subcommand("square-prob", "Monte Carlo P(det M is a perfect square)");
  sp->add_option("--n", sp_n, "matrix dimension")->required();
  add_common(sp, true);

  // --- exact-square-prob ---
  std::size_t esp_n = 2;
  auto* esp = app.add_subcommand("exact-square-prob",
                                 "exact P(det M is a perfect square) by full enumeration");
  esp->add_option("--n", esp_n, "matrix dimension (1..4)")->required();
  esp->add_option("--shards", shards, "parallel shard count")->capture_default_str();
  add_common(esp, false);

  // --- mode-decay ---
  std::vector<std::size_t> md_list{2, 4, 8, 12, 16};
  auto* md = app.add_subcommand("mode-decay", "P(det = 0) per dimension and fitted exponent");
  md->add_option("--n-list", md_list, "dimensions (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  add_common(md, true);

  // --- maples ---
  std::size_t mp_n = 40;
  std::uint64_t mp_p = 2;
  double mp_tol = 1e-12;
  auto* mp = app.add_subcommand("maples", "frequency of p | det M against the limiting value");
  mp->add_option("--n", mp_n, "matrix dimension")->capture_default_str();
  mp->add_option("--p", mp_p, "prime modulus")->required();
  mp->add_option("--tolerance", mp_tol, "limit truncation tolerance")->capture_default_str();
  add_common(mp, true);

  // --- divisors ---
  std::vector<std::size_t> dv_list{6, 10, 14};
  auto* dv = app.add_subcommand("divisors", "divisor statistics of det M per dimension");
  dv->add_option("--n-list", dv_list, "dimensions (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  add_common(dv, true);

  // --- pair-divisors ---
  std::size_t pd_n = 10;
  int pd_tau1 = 1, pd_tau2 = 1;
  auto* pd = app.add_subcommand("pair-divisors",
                                "divisor statistics of tau1 d1 + tau2 d2");
  pd->add_option("--n", pd_n, "matrix dimension")->required();
  pd->add_option("--tau1", pd_tau1, "coefficient in {+-1,+-2}")->required();
  pd->add_option("--tau2", pd_tau2, "coefficient in {+-1,+-2}")->required();
  add_common(pd, true);

  // --- divisor-tail ---
  std::size_t dt_n = 9, dt_k = 2;
  auto* dt = app.add_subcommand("divisor-tail",
                                "tail frequency of tau(2 d_j) over the last k minors");
  dt->add_option("--n", dt_n, "matrix dimension")->required();
  dt->add_option("--k", dt_k, "number of trailing minors")->required();
  add_common(dt, true);

  // --- partial-zero ---
  std::size_t pz_n = 10, pz_k = 2;
  double pz_delta = kDefaultDeltaHat;
  auto* pz = app.add_subcommand("partial-zero",
                                "exact inner probability of a vanishing partial sum");
  pz->add_option("--n", pz_n, "matrix dimension (<= 14)")->required();
  pz->add_option("--k", pz_k, "suffix length excluded from the sum")->required();
  pz->add_option("--delta-hat", pz_delta, "decay exponent for the threshold")
      ->capture_default_str();
  add_common(pz, true);

  // --- square-suffix ---
  std::size_t ss_n = 8, ss_k = 3;
  auto* ss = app.add_subcommand("square-suffix",
                                "square-producing suffix sets and their isolation");
  ss->add_option("--n", ss_n, "matrix dimension")->required();
  ss->add_option("--k", ss_k, "suffix length (1..10)")->required();
  add_common(ss, true);

  // --- codim ---
  std::size_t cd_n = 20;
  std::uint64_t cd_p = 3;
  auto* cd = app.add_subcommand("codim", "trailing-column rank deficiency over F_p");
  cd->add_option("--n", cd_n, "matrix dimension")->required();
  cd->add_option("--p", cd_p, "prime modulus")->required();
  add_common(cd, true);

  // --- equidist ---
  std::size_t eq_n = 8;
  std::uint64_t eq_p = 3;
  auto* eq = app.add_subcommand("equidist",
                                "mod-p equidistribution of the signed minor sum");
  eq->add_option("--n", eq_n, "matrix dimension")->required();
  eq->add_option("--p", eq_p, "prime modulus")->required();
  add_common(eq, true);

  // --- fourier-check ---
  std::vector<long long> fc_a;
  bool fc_exhaustive = false;
  std::size_t fc_len = 5;
  long long fc_max_abs = 2;
  auto* fc = app.add_subcommand("fourier-check",
                                "the mode of sum xi_i a_i sits at zero (exact check)");
  fc->add_option("--a", fc_a, "weights (comma separated)")->delimiter(',');
  fc->add_flag("--exhaustive", fc_exhaustive, "sweep all weight vectors");
  fc->add_option("--len", fc_len, "vector length for the sweep")->capture_default_str();
  fc->add_option("--max-abs", fc_max_abs, "weight magnitude bound for the sweep")
      ->capture_default_str();
  add_common(fc, false);

  // --- isolated-check ---
  unsigned ic_k = 6;
  std::size_t ic_target = 20, ic_count = 1000;
  std::size_t ic_min_dist = 2;
  auto* ic = app.add_subcommand("isolated-check",
                                "random separated families against the 1/k mass bound");
  ic->add_option("--k", ic_k, "pattern length")->required();
  ic->add_option("--target-size", ic_target, "requested family size")->capture_default_str();
  ic->add_option("--count", ic_count, "number of families")->capture_default_str();
  ic->add_option("--min-distance", ic_min_dist, "pairwise Hamming separation")
      ->capture_default_str();
  ic->add_option("--seed", seed, "master seed")->capture_default_str();
  add_common(ic, false);

  // --- mertens ---
  std::uint64_t mt_n = 10;
  auto* mt = app.add_subcommand("mertens", "exact sum of 1/p over primes p <= n");
  mt->add_option("--n", mt_n, "upper bound")->required();
  add_common(mt, false);

  // --- det ---
  std::string det_path;
  auto* dd = app.add_subcommand("det", "determinant of a matrix file");
  dd->add_option("file", det_path, "matrix file")->required();
  add_common(dd, false);

  std::vector<char*> argv;
  std::string program = "detlab";
  argv.push_back(program.data());
  std::vector<std::string> owned = args;
  for (auto& a : owned) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << "detlab " << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  int status = 0;
  try {
    ExperimentReport report;
    if (sp->parsed()) {
      report = square_probability_experiment(sp_n, samples, seed, shards);
    } else if (esp->parsed()) {
      report = exact_square_probability_report(static_cast<unsigned>(esp_n), shards);
    } else if (md->parsed()) {
      report = mode_decay_experiment(md_list, samples, seed, shards);
    } else if (mp->parsed()) {
      report = maples_experiment(mp_n, mp_p, samples, seed, shards);
      (void)mp_tol;
    } else if (dv->parsed()) {
      report = divisor_growth_experiment(dv_list, samples, seed, shards);
    } else if (pd->parsed()) {
      report = pair_divisor_experiment(pd_n, samples, pd_tau1, pd_tau2, seed, shards);
    } else if (dt->parsed()) {
      report = divisor_tail_experiment(dt_n, dt_k, samples, seed, shards);
    } else if (pz->parsed()) {
      report = partial_zero_experiment(pz_n, pz_k, samples, seed, shards, pz_delta);
    } else if (ss->parsed()) {
      report = square_suffix_experiment(ss_n, ss_k, samples, seed, shards);
    } else if (cd->parsed()) {
      report = codim_experiment(cd_n, cd_p, samples, seed, shards);
    } else if (eq->parsed()) {
      report = equidist_experiment(eq_n, eq_p, samples, seed, shards);
    } else if (fc->parsed()) {
      detlab::internal::Stopwatch timer;
      report.experiment = "fourier-check";
      if (fc_exhaustive) {
        report.params["len"] = fc_len;
        report.params["max_abs"] = fc_max_abs;
        std::uint64_t checked = 0, violations = 0;
        std::vector<BigInt> a(fc_len, -fc_max_abs);
        std::vector<long long> digits(fc_len, 0);
        const std::uint64_t radix = 2 * static_cast<std::uint64_t>(fc_max_abs) + 1;
        std::uint64_t total = 1;
        for (std::size_t i = 0; i < fc_len; ++i) total *= radix;
        for (std::uint64_t c = 0; c < total; ++c) {
          const FourierCheck check = check_fourier_lemma(a);
          ++checked;
          if (!check.holds) ++violations;
          for (std::size_t i = 0; i < fc_len; ++i) {
            if (++digits[i] == static_cast<long long>(radix)) {
              digits[i] = 0;
              a[i] = -fc_max_abs;
            } else {
              a[i] = digits[i] - fc_max_abs;
              break;
            }
          }
        }
        report.estimates.push_back(
            make_value_estimate("vectors_checked", static_cast<double>(checked)));
        report.estimates.push_back(
            make_value_estimate("mode_violations", static_cast<double>(violations)));
      } else {
        if (fc_a.empty())
          throw CLI::ValidationError("fourier-check", "provide --a or --exhaustive");
        Json ja = Json::array();
        std::vector<BigInt> a;
        for (long long v : fc_a) {
          a.emplace_back(v);
          ja.push_back(v);
        }
        report.params["a"] = ja;
        const FourierCheck check = check_fourier_lemma(a);
        report.estimates.push_back(make_exact_estimate("max_prob", check.max_prob));
        report.estimates.push_back(make_exact_estimate("zero_prob", check.zero_prob));
        report.estimates.push_back(
            make_value_estimate("mode_at_zero", check.holds ? 1.0 : 0.0));
      }
      report.provenance = detlab::internal::provenance(seed, 1, 0);
      report.duration_seconds = timer.seconds();
    } else if (ic->parsed()) {
      detlab::internal::Stopwatch timer;
      report.experiment = "isolated-check";
      report.params["k"] = ic_k;
      report.params["target_size"] = ic_target;
      report.params["count"] = ic_count;
      report.params["min_distance"] = ic_min_dist;
      std::uint64_t mass_ok = 0, balls_ok = 0;
      BigRat max_mass = 0;
      for (std::size_t f = 0; f < ic_count; ++f) {
        BitPairStream bits{substream(seed, f)};
        const IsolatedFamily family =
            random_separated_family(ic_k, ic_target, bits, ic_min_dist);
        const IsolationCheck check = verify_2_isolated(family);
        mass_ok += check.holds;
        balls_ok += hamming_balls_disjoint(family);
        max_mass = std::max(max_mass, check.mass);
      }
      report.estimates.push_back(
          make_probability_estimate("p_mass_bound_holds", mass_ok, ic_count));
      report.estimates.push_back(
          make_probability_estimate("p_balls_disjoint", balls_ok, ic_count));
      report.estimates.push_back(make_exact_estimate("max_family_mass", max_mass));
      report.provenance = detlab::internal::provenance(seed, 1, ic_count);
      report.duration_seconds = timer.seconds();
    } else if (mt->parsed()) {
      detlab::internal::Stopwatch timer;
      report.experiment = "mertens";
      report.params["n"] = mt_n;
      const PrimeHarmonicSum sum = mertens_sum(mt_n);
      report.estimates.push_back(make_exact_estimate("mertens_sum", sum.exact()));
      if (mt_n > 2) {
        const double loglog = std::log(std::log(static_cast<double>(mt_n)));
        if (loglog > 0)
          report.estimates.push_back(
              make_value_estimate("ratio_to_loglog", sum.approx() / loglog));
      }
      report.provenance = detlab::internal::provenance(0, 1, 0);
      report.duration_seconds = timer.seconds();
    } else if (dd->parsed()) {
      detlab::internal::Stopwatch timer;
      report.experiment = "det";
      report.params["file"] = det_path;
      const SignedTernaryMatrix m = read_matrix_file(det_path);
      report.params["n"] = m.dim();
      const BigInt det = det_bareiss(m);
      if (det != det_crt(m)) throw std::logic_error("determinant engines disagree");
      report.estimates.push_back(make_exact_estimate("det", BigRat(det)));
      report.estimates.push_back(
          make_value_estimate("is_square", is_perfect_square(det) ? 1.0 : 0.0));
      if (det != 0) {
        const std::uint64_t tau = divisor_count(factorize(det));
        Estimate te = make_value_estimate("tau", static_cast<double>(tau));
        te.exact = std::to_string(tau);
        report.estimates.push_back(te);
      }
      report.provenance = detlab::internal::provenance(0, 1, 0);
      report.duration_seconds = timer.seconds();
    }
    config.subcommand = report.experiment;
    config.params = report.params;
    internal::emit(report, config, out, err, status);
  } catch (const MatrixParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const NotPrimeError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ResourceCapError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return status;
}

}  // namespace detlab::cli
