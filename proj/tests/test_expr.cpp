#include <cmath>
#include <vector>

#include "doctest.h"
#include "stokeshom/expr.hpp"

using namespace shom;

TEST_CASE("constants and simple evaluation") {
  CHECK(parse_expr("1")->eval_y(0, 0) == 1.0);
  CHECK(parse_expr("2+sin(2*pi*y1)")->eval_y(0.25, 0) == doctest::Approx(3.0));
  CHECK(parse_expr("cos(2*pi*y1)*cos(2*pi*y2)")->eval_y(0.5, 0.5) == doctest::Approx(1.0));
  CHECK(parse_expr("y1^2")->eval_y(3, 0) == doctest::Approx(9.0));
  CHECK(parse_expr("exp(0)")->eval_y(17, -4) == 1.0);
}

TEST_CASE("division by zero raises an evaluation error carrying the point") {
  auto e = parse_expr("1/y1");
  try {
    e->eval_y(0.0, 0.0);
    FAIL("expected EvalError");
  } catch (const EvalError& err) {
    CHECK(err.y == 0.0);
  }
}

TEST_CASE("precedence and associativity") {
  CHECK(parse_expr("2+3*4")->eval_y(0, 0) == 14.0);
  CHECK(parse_expr("2*3^2")->eval_y(0, 0) == 18.0);
  CHECK(parse_expr("-2^2")->eval_y(0, 0) == -4.0);     // ^ binds tighter than unary -
  CHECK(parse_expr("2^-1")->eval_y(0, 0) == 0.5);
  CHECK(parse_expr("2^3^2")->eval_y(0, 0) == 512.0);   // right associative
  CHECK(parse_expr("8-4-2")->eval_y(0, 0) == 2.0);     // left associative
  CHECK(parse_expr("8/4/2")->eval_y(0, 0) == 1.0);
  CHECK(parse_expr(" 1 + y1 * ( y2 - 3 ) ")->eval_y(2, 5) == 5.0);
}

TEST_CASE("syntax errors carry byte offsets") {
  try {
    parse_expr("1+*2");
    FAIL("expected ParseError");
  } catch (const ParseError& err) {
    CHECK(err.byte_offset == 2);
  }
  CHECK_THROWS_AS(parse_expr("sin(1"), ParseError);
  CHECK_THROWS_AS(parse_expr("bogus(1)"), ParseError);
  CHECK_THROWS_AS(parse_expr("x1"), ParseError);  // x-vars only with allow_x
  CHECK_NOTHROW(parse_expr("x1+y2", true));
}

TEST_CASE("evaluation is pure") {
  auto e = parse_expr("sin(y1)*exp(y2)+y1^3/(2+cos(y2))");
  const double v = e->eval_y(0.3, -0.7);
  for (int i = 0; i < 20; ++i) CHECK(e->eval_y(0.3, -0.7) == v);
}

TEST_CASE("round trip over an expression corpus") {
  const std::vector<std::string> corpus = {
      "1", "0", "pi", "-pi", "y1", "y2", "x1*y1", "x2-y2",
      "2+sin(2*pi*y1)", "2+cos(2*pi*y1)*cos(2*pi*y2)", "1/(2+sin(2*pi*y2))",
      "y1^2+y2^2", "y1^-2", "-y1^2", "(-y1)^2", "y1^y2^2", "exp(-y1^2)",
      "abs(y1-y2)", "sin(cos(exp(y1)))", "1+2+3+4", "1-2-3-4", "1*2*3*4",
      "8/4/2", "2^3^2", "-(y1+y2)", "-(y1*y2)", "1.5e3*y1", "2.5e-2",
      "0.125", "3.141592653589793", "y1/(y2+10)", "sin(pi*y1)^2",
      "cos(pi*(y1+y2))", "y1*y2+y2*y1", "(y1+y2)*(y1-y2)", "1/(1/(1+y1^2))",
      "exp(y1)*exp(y2)", "abs(abs(y1))", "-(-y1)", "x1+x2+y1+y2",
      "sin(2*pi*x1)*sin(2*pi*y2)", "x1^2*y2^2", "12345.6789",
      "2+3*4^2", "(2+3)*4^2", "((y1))", "-1", "1--1", "2*-3", "y2^(1/2)"};
  CHECK(corpus.size() == 50);
  for (const auto& s : corpus) {
    auto e = parse_expr(s, true);
    auto round = parse_expr(e->print(), true);
    CHECK_MESSAGE(e->same_structure(*round), s, " -> ", e->print());
  }
}
