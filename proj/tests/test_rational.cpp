#include "doctest.h"
#include "peel/rational.hpp"

using namespace peel;

TEST_CASE("parse fraction, integer and decimal forms") {
  CHECK(parse_rational("1/12") == Rat(1, 12));
  CHECK(parse_rational("-3/9") == Rat(-1, 3));
  CHECK(parse_rational("7") == Rat(7));
  CHECK(parse_rational("0.125") == Rat(1, 8));
  CHECK(parse_rational(" 2.50 ") == Rat(5, 2));
  CHECK_THROWS_AS(parse_rational("1/0"), ConfigError);
  CHECK_THROWS_AS(parse_rational("abc"), ConfigError);
}

TEST_CASE("fraction strings are canonical") {
  CHECK(to_fraction_string(Rat(10, 12)) == "5/6");
  CHECK(to_fraction_string(Rat(8, 4)) == "2");
  CHECK(to_fraction_string(Rat(-5, 9)) == "-5/9");
}

TEST_CASE("powers and binomials") {
  CHECK(rat_pow(Rat(2, 3), 3) == Rat(8, 27));
  CHECK(rat_pow(Rat(2), -2) == Rat(1, 4));
  CHECK(rat_pow(Rat(5), 0) == Rat(1));
  CHECK(rat_binomial(6, 3) == Rat(20));
  CHECK(rat_binomial(2, 1) == Rat(2));
  CHECK(rat_binomial(3, 5) == Rat(0));
}
