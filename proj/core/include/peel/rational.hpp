#pragma once

#include <gmpxx.h>

#include <string>

#include "peel/errors.hpp"

namespace peel {

// Exact rational scalar. All enumerative quantities that admit exact values
// (weights, growth constants, disk series, thresholds) use this type.
using Rat = mpq_class;

inline Rat rat(long num, long den = 1) {
  Rat r(num, den);
  r.canonicalize();
  return r;
}

// Parses "num/den", an integer, or a plain decimal like "0.125".
Rat parse_rational(const std::string& text);

// Canonical "num/den" (or "num" when den == 1).
std::string to_fraction_string(const Rat& r);

inline double to_double(const Rat& r) { return r.get_d(); }

Rat rat_pow(const Rat& base, long exp);

// Exact binomial coefficient C(n, k) for n >= 0.
Rat rat_binomial(long n, long k);

}  // namespace peel
