#pragma once

#include <gmpxx.h>

#include <string>

namespace viab {

// Exact rational scalar used throughout the model layer and the exact LP
// backend. Floats appear only inside the float LP backend and in reports
// emitted in float mode.
using Rat = mpq_class;

// Parses "p/q", decimal strings ("-1.25", "0.5", "3e2") and plain integers.
// Throws SchemaError on anything else (including division by zero).
Rat rat_from_string(const std::string& text);

// Canonical form: "p" when the denominator is 1, otherwise "p/q", reduced.
std::string rat_to_string(const Rat& value);

inline double rat_to_double(const Rat& value) { return value.get_d(); }

// mpq_class(n, d) does not canonicalize; route every possibly non-coprime
// pair through this factory.
inline Rat make_rat(long num, long den) {
  Rat r(num, den);
  r.canonicalize();
  return r;
}

// 17-significant-digit decimal, the float-mode report format.
std::string double_to_string(double value);

}  // namespace viab
