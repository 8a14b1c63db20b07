#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "detlab/bigint.hpp"
#include "detlab/version.hpp"

namespace detlab {

using Json = nlohmann::ordered_json;

inline constexpr double kZ95 = 1.959963984540054;  // two-sided 95%

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Wilson score interval for a binomial proportion; stays inside [0,1] and
/// behaves sensibly at the extremes p = 0 and p = 1.
inline Interval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                double z = kZ95) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (phat + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

enum class Trend { Confirmed, Inconclusive, Refuted };

/// Does the interval at the larger parameter sit strictly below the one at
/// the smaller parameter?  Overlap is inconclusive rather than a failure.
inline Trend trend_down(const Interval& at_small, const Interval& at_large) {
  if (at_large.high < at_small.low) return Trend::Confirmed;
  if (at_large.low > at_small.high) return Trend::Refuted;
  return Trend::Inconclusive;
}

/// One reported quantity.  Probabilities carry a Wilson CI; exact rationals
/// carry the "p/q" string next to a decimal convenience value.
struct Estimate {
  std::string name;
  double value = 0.0;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  std::optional<std::string> exact;

  bool operator==(const Estimate&) const = default;
};

inline Estimate make_probability_estimate(std::string name, std::uint64_t successes,
                                          std::uint64_t trials) {
  Estimate e;
  e.name = std::move(name);
  e.value = trials == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(trials);
  const Interval ci = wilson_interval(successes, trials);
  e.ci_low = ci.low;
  e.ci_high = ci.high;
  return e;
}

inline Estimate make_value_estimate(std::string name, double value) {
  Estimate e;
  e.name = std::move(name);
  e.value = value;
  return e;
}

inline Estimate make_exact_estimate(std::string name, const BigRat& r) {
  Estimate e;
  e.name = std::move(name);
  e.value = rational_as_double(r);
  e.exact = rational_string(r);
  return e;
}

struct Provenance {
  std::uint64_t seed = 0;
  unsigned shards = 1;
  std::uint64_t samples = 0;
  std::string version = kVersion;

  bool operator==(const Provenance&) const = default;
};

struct ExperimentReport {
  std::string experiment;
  Json params = Json::object();
  std::vector<Estimate> estimates;
  Provenance provenance;
  Json extras;  // optional structured payload, e.g. sampled set exemplars
  double duration_seconds = 0.0;

  bool operator==(const ExperimentReport&) const = default;

  const Estimate& at(const std::string& name) const {
    for (const Estimate& e : estimates)
      if (e.name == name) return e;
    throw std::out_of_range("no estimate named " + name);
  }
  bool has(const std::string& name) const {
    return std::any_of(estimates.begin(), estimates.end(),
                       [&](const Estimate& e) { return e.name == name; });
  }
};

/// All numbers in reports pass through one formatter (the JSON shortest
/// round-trip form), so CSV and JSON carry byte-identical values.
inline std::string format_number(double v) { return Json(v).dump(); }

inline Json to_json(const Estimate& e) {
  Json j;
  j["name"] = e.name;
  j["value"] = e.value;
  if (e.ci_low) j["ci_low"] = *e.ci_low;
  if (e.ci_high) j["ci_high"] = *e.ci_high;
  if (e.exact) j["exact"] = *e.exact;
  return j;
}

inline Json to_json(const ExperimentReport& r) {
  Json j;
  j["experiment"] = r.experiment;
  j["params"] = r.params;
  Json est = Json::array();
  for (const Estimate& e : r.estimates) est.push_back(to_json(e));
  j["estimates"] = est;
  j["provenance"] = Json{{"seed", r.provenance.seed},
                         {"shards", r.provenance.shards},
                         {"samples", r.provenance.samples},
                         {"version", r.provenance.version}};
  if (!r.extras.is_null()) j["extras"] = r.extras;
  j["duration_seconds"] = r.duration_seconds;
  return j;
}

inline ExperimentReport report_from_json(const Json& j) {
  ExperimentReport r;
  r.experiment = j.at("experiment").get<std::string>();
  r.params = j.at("params");
  for (const Json& je : j.at("estimates")) {
    Estimate e;
    e.name = je.at("name").get<std::string>();
    e.value = je.at("value").get<double>();
    if (je.contains("ci_low")) e.ci_low = je.at("ci_low").get<double>();
    if (je.contains("ci_high")) e.ci_high = je.at("ci_high").get<double>();
    if (je.contains("exact")) e.exact = je.at("exact").get<std::string>();
    r.estimates.push_back(std::move(e));
  }
  const Json& p = j.at("provenance");
  r.provenance.seed = p.at("seed").get<std::uint64_t>();
  r.provenance.shards = p.at("shards").get<unsigned>();
  r.provenance.samples = p.at("samples").get<std::uint64_t>();
  r.provenance.version = p.at("version").get<std::string>();
  if (j.contains("extras")) r.extras = j.at("extras");
  r.duration_seconds = j.at("duration_seconds").get<double>();
  return r;
}

inline std::string report_to_json_string(const ExperimentReport& r) {
  return to_json(r).dump(2) + "\n";
}

/// The same payload minus the wall-clock field; two runs with identical
/// (seed, shards, parameters) must agree on this byte for byte.
inline std::string report_fingerprint(const ExperimentReport& r) {
  Json j = to_json(r);
  j.erase("duration_seconds");
  return j.dump(2);
}

/// One row per estimate; numbers identical to the JSON form.
inline std::string report_to_csv(const ExperimentReport& r) {
  std::ostringstream out;
  out << "experiment,name,value,ci_low,ci_high,exact,seed,shards,samples,version\n";
  for (const Estimate& e : r.estimates) {
    out << r.experiment << ',' << e.name << ',' << format_number(e.value) << ',';
    if (e.ci_low) out << format_number(*e.ci_low);
    out << ',';
    if (e.ci_high) out << format_number(*e.ci_high);
    out << ',';
    if (e.exact) out << *e.exact;
    out << ',' << r.provenance.seed << ',' << r.provenance.shards << ','
        << r.provenance.samples << ',' << r.provenance.version << '\n';
  }
  return out.str();
}

}  // namespace detlab
