#include "viab/rational.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>

#include "viab/errors.hpp"

namespace viab {

namespace {

bool is_integer_literal(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

}  // namespace

Rat rat_from_string(const std::string& text) {
  if (text.empty()) throw SchemaError("empty rational literal");

  auto slash = text.find('/');
  if (slash != std::string::npos) {
    const std::string num = text.substr(0, slash);
    const std::string den = text.substr(slash + 1);
    if (!is_integer_literal(num) || !is_integer_literal(den))
      throw SchemaError("bad rational literal '" + text + "'");
    Rat r;
    if (r.set_str(text, 10) != 0)
      throw SchemaError("bad rational literal '" + text + "'");
    if (r.get_den() == 0) throw SchemaError("zero denominator in '" + text + "'");
    r.canonicalize();
    return r;
  }

  if (is_integer_literal(text)) {
    Rat r;
    if (r.set_str(text, 10) != 0)
      throw SchemaError("bad integer literal '" + text + "'");
    return r;
  }

  // Decimal with optional exponent: [+-]ddd[.ddd][eE[+-]ddd]
  std::string mantissa = text;
  long exponent = 0;
  auto epos = text.find_first_of("eE");
  if (epos != std::string::npos) {
    mantissa = text.substr(0, epos);
    const std::string exp_str = text.substr(epos + 1);
    if (!is_integer_literal(exp_str))
      throw SchemaError("bad exponent in '" + text + "'");
    exponent = std::strtol(exp_str.c_str(), nullptr, 10);
  }
  auto dot = mantissa.find('.');
  std::string digits = mantissa;
  long frac_digits = 0;
  if (dot != std::string::npos) {
    digits = mantissa.substr(0, dot) + mantissa.substr(dot + 1);
    frac_digits = static_cast<long>(mantissa.size() - dot - 1);
    if (frac_digits == 0) throw SchemaError("trailing dot in '" + text + "'");
  }
  if (!is_integer_literal(digits))
    throw SchemaError("bad decimal literal '" + text + "'");

  mpz_class num(digits, 10);
  mpz_class den(1);
  long net = exponent - frac_digits;
  mpz_class ten(10);
  if (net >= 0) {
    mpz_class scale;
    mpz_pow_ui(scale.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(net));
    num *= scale;
  } else {
    mpz_pow_ui(den.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(-net));
  }
  Rat r(num, den);
  r.canonicalize();
  return r;
}

std::string rat_to_string(const Rat& value) {
  Rat v = value;
  v.canonicalize();
  if (v.get_den() == 1) return v.get_num().get_str();
  return v.get_num().get_str() + "/" + v.get_den().get_str();
}

std::string double_to_string(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace viab
