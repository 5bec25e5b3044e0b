#include "doctest.h"

#include <string>
#include <vector>

#include "varidyn/expression.hpp"

using namespace varidyn;

namespace {
double ev(const std::string& text, std::vector<double> q = {}) {
  return Expr::parse(text).eval(q);
}
}  // namespace

TEST_CASE("precedence and associativity") {
  CHECK(ev("2+3*4") == doctest::Approx(14.0));
  CHECK(ev("2*3+4") == doctest::Approx(10.0));
  CHECK(ev("(2+3)*4") == doctest::Approx(20.0));
  CHECK(ev("6/3/2") == doctest::Approx(1.0));
  CHECK(ev("7-4-2") == doctest::Approx(1.0));
  CHECK(ev("2^3^2") == doctest::Approx(512.0));  // right-associative
  CHECK(ev("-2^2") == doctest::Approx(-4.0));    // unary minus binds looser
  CHECK(ev("-q1^2", {3.0}) == doctest::Approx(-9.0));
  CHECK(ev("(-2)^2") == doctest::Approx(4.0));
  CHECK(ev("q1^-2", {4.0}) == doctest::Approx(0.0625));
  CHECK(ev("3 - -2") == doctest::Approx(5.0));
  CHECK(ev(" 1 + 2 ") == doctest::Approx(3.0));
  CHECK(ev("1e-2 + 2.5e1") == doctest::Approx(25.01));
}

TEST_CASE("coordinates and functions") {
  CHECK(ev("sqrt(q1^2 + q2^2)", {3.0, 4.0}) == doctest::Approx(5.0));
  CHECK(ev("sin(q1)*cos(q1) ", {0.5}) ==
        doctest::Approx(std::sin(0.5) * std::cos(0.5)));
  CHECK(ev("exp(log(q1))", {2.5}) == doctest::Approx(2.5));
  CHECK(ev("abs(q1)", {-3.0}) == doctest::Approx(3.0));
  CHECK(Expr::parse("q3").min_arity() == 3);
  CHECK(Expr::parse("1.5").min_arity() == 0);
}

TEST_CASE("parse errors carry a position") {
  CHECK_THROWS_AS(Expr::parse("q0"), ParseError);
  CHECK_THROWS_AS(Expr::parse("2 +"), ParseError);
  CHECK_THROWS_AS(Expr::parse("sin 2"), ParseError);
  CHECK_THROWS_AS(Expr::parse("(1"), ParseError);
  CHECK_THROWS_AS(Expr::parse("1)"), ParseError);
  CHECK_THROWS_AS(Expr::parse("foo(2)"), ParseError);
  CHECK_THROWS_AS(Expr::parse(""), ParseError);
  CHECK_THROWS_AS(Expr::parse("$"), ParseError);
  CHECK_THROWS_AS(Expr::parse("2 4"), ParseError);

  try {
    Expr::parse("1 + $");
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.position() == 4);
  }
}

TEST_CASE("evaluation domain violations") {
  CHECK_THROWS_AS(ev("1/q1", {0.0}), DomainError);
  CHECK_THROWS_AS(ev("log(q1)", {-1.0}), DomainError);
  CHECK_THROWS_AS(ev("sqrt(q1)", {-4.0}), DomainError);
  CHECK_THROWS_AS(ev("q1^0.5", {-4.0}), DomainError);
  CHECK_THROWS_AS(ev("q1^-2", {0.0}), DomainError);
  CHECK_THROWS_AS(Expr::parse("q2").eval(std::vector<double>{1.0}),
                  DimensionError);
}

TEST_CASE("printing round-trips structurally") {
  const char* cases[] = {
      "q1 + q2*q3",
      "-q1^2 + 3*q2",
      "sqrt(q1^2 + q2^2)/(1 - q1)",
      "2^q1^2",
      "sin(q1)*cos(q2) - exp(-q1)",
      "q1^-2 + abs(q2 - 3)",
      "(q1 + q2)^3",
      "1/(2*(1 - 1/q1))",
  };
  for (const char* c : cases) {
    Expr e = Expr::parse(c);
    std::string s1 = e.str();
    Expr e2 = Expr::parse(s1);
    CHECK(e2.str() == s1);
    std::vector<double> pt = {1.7, 2.3, 0.9};
    CHECK(e.eval(pt) == e2.eval(pt));  // bitwise equal
  }
}

TEST_CASE("expression algebra composes and folds") {
  Expr q1 = Expr::coordinate(0);
  Expr two = Expr::constant(2.0);
  Expr sum = q1 * q1 + two;
  std::vector<double> pt = {3.0};
  CHECK(sum.eval(pt) == doctest::Approx(11.0));

  CHECK((Expr::constant(2.0) + Expr::constant(3.0)).constant_value() == 5.0);
  CHECK((q1 + Expr::constant(0.0)).str() == "q1");
  CHECK((Expr::constant(1.0) * q1).str() == "q1");
  CHECK((-Expr::constant(2.0)).constant_value() == -2.0);
  CHECK((-(-q1)).str() == "q1");
  CHECK(pow(q1, 1.0).str() == "q1");

  Expr c = sqrt(q1 * q1 + Expr::constant(1.0));
  CHECK(c.eval(pt) == doctest::Approx(std::sqrt(10.0)));

  CHECK_THROWS_AS(Expr::constant(1.0 / 0.0), PreconditionError);
  Expr empty;
  CHECK_THROWS_AS(empty + q1, PreconditionError);
  CHECK_THROWS_AS(empty.eval(pt), PreconditionError);
}

TEST_CASE("dual evaluation of expressions") {
  Expr e = Expr::parse("q1^3*q2");
  std::vector<D1> pt = {D1(2.0, 1.0), D1(5.0, 0.0)};
  D1 r = e.eval(pt);
  CHECK(r.a == doctest::Approx(40.0));
  CHECK(r.b == doctest::Approx(60.0));
}
