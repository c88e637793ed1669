#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stokeshom/errors.hpp"

namespace shom {

// Variables known to the grammar. Coefficient data uses y1,y2 only; two-scale
// test functions may use all four.
enum class Var : int { X1 = 0, X2 = 1, Y1 = 2, Y2 = 3 };

struct EvalPoint {
  double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
  double get(Var v) const {
    switch (v) {
      case Var::X1: return x1;
      case Var::X2: return x2;
      case Var::Y1: return y1;
      default: return y2;
    }
  }
};

// Immutable expression tree over: numbers, variables, pi, + - * / ^, unary
// minus, sin cos exp abs. Evaluation is reentrant.
class Expr {
 public:
  enum class Kind { Number, Variable, Binary, Unary, Call };

  Kind kind() const { return kind_; }
  double eval(const EvalPoint& p) const;
  double eval_y(double y1, double y2) const { return eval(EvalPoint{0.0, 0.0, y1, y2}); }
  std::string print() const;  // minimally parenthesized; reparses to the same tree
  bool same_structure(const Expr& other) const;

  // node payloads (valid depending on kind)
  double number = 0.0;
  Var var = Var::Y1;
  char op = 0;          // '+','-','*','/','^' for Binary, '-' for Unary
  std::string callee;   // sin, cos, exp, abs
  std::vector<std::shared_ptr<const Expr>> children;

  static std::shared_ptr<const Expr> make_number(double v);

  explicit Expr(Kind k) : kind_(k) {}

 private:
  Kind kind_;
};

using ExprPtr = std::shared_ptr<const Expr>;

// Recursive-descent parse with standard precedence: ^ binds tighter than
// unary minus, then * /, then + -. Binary + - * / associate left, ^ right.
// `allow_x` admits x1,x2 alongside y1,y2.
ExprPtr parse_expr(const std::string& text, bool allow_x = false);

}  // namespace shom
