#include "peel/rational.hpp"

#include <cctype>

namespace peel {

Rat parse_rational(const std::string& text) {
  std::string s;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
  if (s.empty()) throw ConfigError("empty rational literal");

  auto slash = s.find('/');
  if (slash != std::string::npos) {
    Rat r;
    if (r.set_str(s, 10) != 0) throw ConfigError("bad rational literal: " + text);
    if (r.get_den() == 0) throw ConfigError("zero denominator: " + text);
    r.canonicalize();
    return r;
  }
  auto dot = s.find('.');
  if (dot == std::string::npos) {
    Rat r;
    if (r.set_str(s, 10) != 0) throw ConfigError("bad integer literal: " + text);
    return r;
  }
  // decimal: sign, integer part, fractional part
  std::string digits = s.substr(0, dot) + s.substr(dot + 1);
  std::size_t frac_len = s.size() - dot - 1;
  if (digits.empty() || digits == "-" || digits == "+")
    throw ConfigError("bad decimal literal: " + text);
  mpz_class num;
  if (num.set_str(digits, 10) != 0) throw ConfigError("bad decimal literal: " + text);
  mpz_class den = 1;
  for (std::size_t i = 0; i < frac_len; ++i) den *= 10;
  Rat r(num, den);
  r.canonicalize();
  return r;
}

std::string to_fraction_string(const Rat& r) {
  Rat c = r;
  c.canonicalize();
  if (c.get_den() == 1) return c.get_num().get_str();
  return c.get_num().get_str() + "/" + c.get_den().get_str();
}

Rat rat_pow(const Rat& base, long exp) {
  if (exp == 0) return Rat(1);
  Rat b = exp > 0 ? base : Rat(1) / base;
  long e = exp > 0 ? exp : -exp;
  Rat out(1);
  while (e > 0) {
    if (e & 1) out *= b;
    b *= b;
    e >>= 1;
  }
  return out;
}

Rat rat_binomial(long n, long k) {
  if (k < 0 || k > n) return Rat(0);
  mpz_class out;
  mpz_bin_uiui(out.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return Rat(out);
}

}  // namespace peel
