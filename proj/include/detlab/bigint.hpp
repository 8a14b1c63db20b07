#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace detlab {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

/// Exact rational rendered as "p/q" (or just "p" when q == 1).
inline std::string rational_string(const BigRat& r) {
  std::string s = numerator(r).str();
  if (denominator(r) != 1) {
    s += '/';
    s += denominator(r).str();
  }
  return s;
}

/// num/den as a double, valid even when both operands overflow the double
/// range individually.  Shifts each operand down to <= 62 significant bits
/// and re-applies the exponent difference.
inline double ratio_as_double(BigInt num, BigInt den) {
  if (den == 0) throw std::domain_error("ratio_as_double: zero denominator");
  if (num == 0) return 0.0;
  const bool neg = (num < 0) != (den < 0);
  num = abs(num);
  den = abs(den);
  const long sn = std::max<long>(0, static_cast<long>(msb(num)) - 61);
  const long sd = std::max<long>(0, static_cast<long>(msb(den)) - 61);
  const double q = static_cast<double>(num >> sn) / static_cast<double>(den >> sd);
  const double v = std::ldexp(q, static_cast<int>(sn - sd));
  return neg ? -v : v;
}

inline double rational_as_double(const BigRat& r) {
  return ratio_as_double(numerator(r), denominator(r));
}

inline BigInt factorial(unsigned n) {
  BigInt f = 1;
  for (unsigned i = 2; i <= n; ++i) f *= i;
  return f;
}

inline BigInt ipow(const BigInt& base, unsigned exp) {
  BigInt r = 1, b = base;
  while (exp != 0) {
    if (exp & 1u) r *= b;
    b *= b;
    exp >>= 1;
  }
  return r;
}

}  // namespace detlab
