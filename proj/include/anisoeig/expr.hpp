#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <string_view>
#include <utility>

#include "anisoeig/errors.hpp"

namespace anisoeig {

// Scalar expressions in the variables y and z, used for coefficient
// functions in scenario files. Immutable after construction, so values can
// be copied and evaluated concurrently.
//
// Grammar (recursive descent, no user-defined functions):
//   expr   := term  (('+'|'-') term)*            left-associative
//   term   := unary (('*'|'/') unary)*           left-associative
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?                  right-associative, binds
//                                                tighter than unary minus
//   atom   := number | 'y' | 'z' | 'pi'
//           | ('sin'|'cos'|'exp'|'sqrt'|'abs') '(' expr ')'
//           | '(' expr ')'
class Expr {
 public:
  enum class Var { Y, Z };
  enum class UOp { Neg, Sin, Cos, Exp, Sqrt, Abs };
  enum class BOp { Add, Sub, Mul, Div, Pow };

  Expr() : node_(constant(0.0).node_) {}

  static Expr constant(double v) {
    Node n;
    n.kind = Kind::Const;
    n.value = v;
    return Expr(std::make_shared<const Node>(std::move(n)));
  }
  static Expr variable(Var v) {
    Node n;
    n.kind = Kind::Variable;
    n.var = v;
    return Expr(std::make_shared<const Node>(std::move(n)));
  }
  static Expr unary(UOp op, Expr a) {
    Node n;
    n.kind = Kind::Unary;
    n.uop = op;
    n.a = std::move(a.node_);
    return Expr(std::make_shared<const Node>(std::move(n)));
  }
  static Expr binary(BOp op, Expr a, Expr b) {
    Node n;
    n.kind = Kind::Binary;
    n.bop = op;
    n.a = std::move(a.node_);
    n.b = std::move(b.node_);
    return Expr(std::make_shared<const Node>(std::move(n)));
  }

  static Expr parse(std::string_view source);

  double eval(double y, double z) const {
    double r = eval_node(*node_, y, z);
    if (!std::isfinite(r))
      throw NumericalError("expression evaluates to a non-finite value at (y=" +
                           std::to_string(y) + ", z=" + std::to_string(z) + ")");
    return r;
  }

  bool depends_on(Var v) const { return depends(*node_, v); }

  // Fully parenthesized form; numbers printed with 17 significant digits so
  // that print -> parse round-trips bit-for-bit.
  std::string to_string() const {
    std::string out;
    print_node(*node_, out);
    return out;
  }

  friend bool same_structure(const Expr& a, const Expr& b) {
    return same(*a.node_, *b.node_);
  }

 private:
  enum class Kind { Const, Variable, Unary, Binary };

  struct Node {
    Kind kind{};
    double value = 0.0;
    Var var{};
    UOp uop{};
    BOp bop{};
    std::shared_ptr<const Node> a, b;
  };

  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static double eval_node(const Node& n, double y, double z) {
    switch (n.kind) {
      case Kind::Const:
        return n.value;
      case Kind::Variable:
        return n.var == Var::Y ? y : z;
      case Kind::Unary: {
        double a = eval_node(*n.a, y, z);
        switch (n.uop) {
          case UOp::Neg:  return -a;
          case UOp::Sin:  return std::sin(a);
          case UOp::Cos:  return std::cos(a);
          case UOp::Exp:  return std::exp(a);
          case UOp::Sqrt: return std::sqrt(a);
          case UOp::Abs:  return std::fabs(a);
        }
        return 0.0;
      }
      case Kind::Binary: {
        double a = eval_node(*n.a, y, z);
        double b = eval_node(*n.b, y, z);
        switch (n.bop) {
          case BOp::Add: return a + b;
          case BOp::Sub: return a - b;
          case BOp::Mul: return a * b;
          case BOp::Div: return a / b;
          case BOp::Pow: return std::pow(a, b);
        }
        return 0.0;
      }
    }
    return 0.0;
  }

  static bool depends(const Node& n, Var v) {
    switch (n.kind) {
      case Kind::Const:    return false;
      case Kind::Variable: return n.var == v;
      case Kind::Unary:    return depends(*n.a, v);
      case Kind::Binary:   return depends(*n.a, v) || depends(*n.b, v);
    }
    return false;
  }

  static bool same(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case Kind::Const:
        // bit-level comparison: round-trip stability is exact
        return a.value == b.value || (std::isnan(a.value) && std::isnan(b.value));
      case Kind::Variable:
        return a.var == b.var;
      case Kind::Unary:
        return a.uop == b.uop && same(*a.a, *b.a);
      case Kind::Binary:
        return a.bop == b.bop && same(*a.a, *b.a) && same(*a.b, *b.b);
    }
    return false;
  }

  static void print_node(const Node& n, std::string& out) {
    switch (n.kind) {
      case Kind::Const: {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", n.value);
        // a bare negative literal would rebind under ^ on reparse
        bool wrap = std::signbit(n.value) && !std::isnan(n.value);
        if (wrap) out += '(';
        out += buf;
        if (wrap) out += ')';
        return;
      }
      case Kind::Variable:
        out += (n.var == Var::Y ? 'y' : 'z');
        return;
      case Kind::Unary: {
        const char* name = nullptr;
        switch (n.uop) {
          case UOp::Neg:  name = nullptr; break;
          case UOp::Sin:  name = "sin"; break;
          case UOp::Cos:  name = "cos"; break;
          case UOp::Exp:  name = "exp"; break;
          case UOp::Sqrt: name = "sqrt"; break;
          case UOp::Abs:  name = "abs"; break;
        }
        if (name) {
          out += name;
          out += '(';
          print_node(*n.a, out);
          out += ')';
        } else {
          out += "(-";
          print_node(*n.a, out);
          out += ')';
        }
        return;
      }
      case Kind::Binary: {
        char op = '?';
        switch (n.bop) {
          case BOp::Add: op = '+'; break;
          case BOp::Sub: op = '-'; break;
          case BOp::Mul: op = '*'; break;
          case BOp::Div: op = '/'; break;
          case BOp::Pow: op = '^'; break;
        }
        out += '(';
        print_node(*n.a, out);
        out += op;
        print_node(*n.b, out);
        out += ')';
        return;
      }
    }
  }

  std::shared_ptr<const Node> node_;
};

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(std::string_view src) : src_(src) {}

  Expr run() {
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != src_.size())
      throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  Expr parse_expr() {
    Expr lhs = parse_term();
    for (;;) {
      skip_ws();
      if (accept('+'))
        lhs = Expr::binary(Expr::BOp::Add, lhs, parse_term());
      else if (accept('-'))
        lhs = Expr::binary(Expr::BOp::Sub, lhs, parse_term());
      else
        return lhs;
    }
  }

  Expr parse_term() {
    Expr lhs = parse_unary();
    for (;;) {
      skip_ws();
      if (accept('*'))
        lhs = Expr::binary(Expr::BOp::Mul, lhs, parse_unary());
      else if (accept('/'))
        lhs = Expr::binary(Expr::BOp::Div, lhs, parse_unary());
      else
        return lhs;
    }
  }

  Expr parse_unary() {
    skip_ws();
    if (accept('-'))
      return Expr::unary(Expr::UOp::Neg, parse_unary());
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_atom();
    skip_ws();
    if (accept('^'))
      return Expr::binary(Expr::BOp::Pow, base, parse_unary());
    return base;
  }

  Expr parse_atom() {
    skip_ws();
    if (pos_ >= src_.size())
      throw ParseError("unexpected end of expression", pos_);
    char ch = src_[pos_];
    if (ch == '(') {
      ++pos_;
      Expr e = parse_expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.')
      return parse_number();
    if (std::isalpha(static_cast<unsigned char>(ch)))
      return parse_identifier();
    throw ParseError(std::string("unexpected character '") + ch + "'", pos_);
  }

  Expr parse_number() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           std::isdigit(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() &&
          std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_])))
          ++pos_;
      } else {
        pos_ = mark;  // 'e' was not an exponent
      }
    }
    std::string text(src_.substr(start, pos_ - start));
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0')
      throw ParseError("malformed number '" + text + "'", start);
    return Expr::constant(v);
  }

  Expr parse_identifier() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           std::isalpha(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
    std::string_view name = src_.substr(start, pos_ - start);
    if (name == "y") return Expr::variable(Expr::Var::Y);
    if (name == "z") return Expr::variable(Expr::Var::Z);
    if (name == "pi") return Expr::constant(M_PI);

    Expr::UOp op;
    if (name == "sin") op = Expr::UOp::Sin;
    else if (name == "cos") op = Expr::UOp::Cos;
    else if (name == "exp") op = Expr::UOp::Exp;
    else if (name == "sqrt") op = Expr::UOp::Sqrt;
    else if (name == "abs") op = Expr::UOp::Abs;
    else
      throw ParseError("unknown identifier '" + std::string(name) + "'", start);

    expect('(');
    Expr arg = parse_expr();
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == ',')
      throw ParseError("'" + std::string(name) + "' takes exactly one argument",
                       pos_);
    expect(')');
    return Expr::unary(op, arg);
  }

  void skip_ws() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  bool accept(char c) {
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    skip_ws();
    if (!accept(c))
      throw ParseError(std::string("expected '") + c + "'", pos_);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr Expr::parse(std::string_view source) {
  return detail::ExprParser(source).run();
}

}  // namespace anisoeig
