#include "stokeshom/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>

namespace shom {

namespace {
std::shared_ptr<Expr> make(Expr::Kind k) { return std::make_shared<Expr>(k); }
}  // namespace

double Expr::eval(const EvalPoint& p) const {
  switch (kind_) {
    case Kind::Number:
      return number;
    case Kind::Variable:
      return p.get(var);
    case Kind::Unary:
      return -children[0]->eval(p);
    case Kind::Call: {
      const double a = children[0]->eval(p);
      if (callee == "sin") return std::sin(a);
      if (callee == "cos") return std::cos(a);
      if (callee == "exp") return std::exp(a);
      return std::abs(a);
    }
    case Kind::Binary: {
      const double a = children[0]->eval(p);
      const double b = children[1]->eval(p);
      switch (op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/':
          if (b == 0.0) throw EvalError("division by zero", p.y1, p.y2);
          return a / b;
        default:  return std::pow(a, b);
      }
    }
  }
  return 0.0;
}

namespace {
const char* var_name(Var v) {
  switch (v) {
    case Var::X1: return "x1";
    case Var::X2: return "x2";
    case Var::Y1: return "y1";
    default: return "y2";
  }
}

int precedence(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::Binary:
      return (e.op == '+' || e.op == '-') ? 1 : (e.op == '*' || e.op == '/') ? 2 : 4;
    case Expr::Kind::Unary:
      return 3;
    default:
      return 5;
  }
}
}  // namespace

std::string Expr::print() const {
  switch (kind_) {
    case Kind::Number: {
      if (number == 3.141592653589793238462643383279502884) return "pi";
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", number);
      return buf;
    }
    case Kind::Variable:
      return var_name(var);
    case Kind::Unary: {
      const Expr& c = *children[0];
      std::string s = c.print();
      if (precedence(c) < 3) s = "(" + s + ")";
      return "-" + s;
    }
    case Kind::Call:
      return callee + "(" + children[0]->print() + ")";
    case Kind::Binary: {
      const int mine = precedence(*this);
      std::string l = children[0]->print();
      std::string r = children[1]->print();
      // left operand: parenthesize if strictly looser; for right-assoc '^'
      // also when equal
      if (precedence(*children[0]) < mine || (op == '^' && precedence(*children[0]) == mine))
        l = "(" + l + ")";
      // right operand of left-assoc ops needs parens on ties too
      if (precedence(*children[1]) < mine ||
          (op != '^' && precedence(*children[1]) == mine))
        r = "(" + r + ")";
      return l + op + r;
    }
  }
  return "";
}

bool Expr::same_structure(const Expr& o) const {
  if (kind_ != o.kind_) return false;
  switch (kind_) {
    case Kind::Number:
      return number == o.number;
    case Kind::Variable:
      return var == o.var;
    case Kind::Unary:
      return children[0]->same_structure(*o.children[0]);
    case Kind::Call:
      return callee == o.callee && children[0]->same_structure(*o.children[0]);
    case Kind::Binary:
      return op == o.op && children[0]->same_structure(*o.children[0]) &&
             children[1]->same_structure(*o.children[1]);
  }
  return false;
}

std::shared_ptr<const Expr> Expr::make_number(double v) {
  auto e = make(Kind::Number);
  e->number = v;
  return e;
}

class Parser {
 public:
  Parser(const std::string& s, bool allow_x) : s_(s), allow_x_(allow_x) {}

  ExprPtr run() {
    auto e = sum();
    skip_ws();
    if (pos_ != s_.size()) throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  ExprPtr sum() {
    auto lhs = term();
    for (;;) {
      skip_ws();
      if (eat('+'))
        lhs = binary('+', lhs, term());
      else if (eat('-'))
        lhs = binary('-', lhs, term());
      else
        return lhs;
    }
  }

  ExprPtr term() {
    auto lhs = unary();
    for (;;) {
      skip_ws();
      if (eat('*'))
        lhs = binary('*', lhs, unary());
      else if (eat('/'))
        lhs = binary('/', lhs, unary());
      else
        return lhs;
    }
  }

  ExprPtr unary() {
    if (eat('-')) {
      auto e = make(Expr::Kind::Unary);
      e->op = '-';
      e->children = {unary()};
      return e;
    }
    return power();
  }

  ExprPtr power() {
    auto base = atom();
    skip_ws();
    if (eat('^')) {
      // right-associative; exponent may carry a unary minus
      return binary('^', base, unary());
    }
    return base;
  }

  ExprPtr atom() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of expression", pos_);
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      auto e = sum();
      if (!eat(')')) throw ParseError("missing ')'", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  ExprPtr number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
      ++pos_;
    // exponent suffix
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
        pos_ = p;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
    }
    try {
      return Expr::make_number(std::stod(s_.substr(start, pos_ - start)));
    } catch (const std::exception&) {
      throw ParseError("malformed number", start);
    }
  }

  ExprPtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                s_[pos_] == '_'))
      ++pos_;
    const std::string name = s_.substr(start, pos_ - start);
    if (name == "pi") return Expr::make_number(M_PI);
    if (name == "y1" || name == "y2" || (allow_x_ && (name == "x1" || name == "x2"))) {
      auto e = make(Expr::Kind::Variable);
      e->var = name == "x1" ? Var::X1 : name == "x2" ? Var::X2 : name == "y1" ? Var::Y1 : Var::Y2;
      return e;
    }
    if (name == "sin" || name == "cos" || name == "exp" || name == "abs") {
      if (!eat('(')) throw ParseError("expected '(' after " + name, pos_);
      auto arg = sum();
      if (!eat(')')) throw ParseError("missing ')'", pos_);
      auto e = make(Expr::Kind::Call);
      e->callee = name;
      e->children = {arg};
      return e;
    }
    throw ParseError("unknown identifier '" + name + "'", start);
  }

  static std::shared_ptr<Expr> make(Expr::Kind k) { return std::make_shared<Expr>(k); }
  static ExprPtr binary(char op, ExprPtr l, ExprPtr r) {
    auto e = make(Expr::Kind::Binary);
    e->op = op;
    e->children = {std::move(l), std::move(r)};
    return e;
  }

  const std::string& s_;
  bool allow_x_;
  std::size_t pos_ = 0;
};

ExprPtr parse_expr(const std::string& text, bool allow_x) {
  return Parser(text, allow_x).run();
}

}  // namespace shom
