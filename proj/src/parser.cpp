#include "barrier/parser.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace barrier {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  ExprPtr parse() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("empty expression", pos_);
    ExprPtr e = sum();
    skip();
    if (pos_ < s_.size()) throw ParseError(std::string("unexpected '") + s_[pos_] + "'", pos_);
    return e;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static ExprPtr node(Expr::Kind k, ExprPtr a, ExprPtr b, std::size_t pos) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->a = std::move(a);
    e->b = std::move(b);
    e->pos = pos;
    return e;
  }

  ExprPtr sum() {
    ExprPtr lhs = product();
    for (;;) {
      std::size_t p = pos_;
      if (eat('+'))
        lhs = node(Expr::Kind::Add, lhs, product(), p);
      else if (eat('-'))
        lhs = node(Expr::Kind::Sub, lhs, product(), p);
      else
        return lhs;
    }
  }

  ExprPtr product() {
    ExprPtr lhs = unary();
    for (;;) {
      std::size_t p = pos_;
      if (eat('*'))
        lhs = node(Expr::Kind::Mul, lhs, unary(), p);
      else if (eat('/'))
        lhs = node(Expr::Kind::Div, lhs, unary(), p);
      else
        return lhs;
    }
  }

  ExprPtr unary() {
    std::size_t p = pos_;
    if (eat('-')) return node(Expr::Kind::Neg, unary(), nullptr, p);
    if (eat('+')) return unary();
    return power();
  }

  // Exponentiation binds tighter than unary minus: -x^2 = -(x^2).
  ExprPtr power() {
    ExprPtr base = atom();
    std::size_t p = pos_;
    if (eat('^')) return node(Expr::Kind::Pow, base, unary_power_operand(), p);
    return base;
  }

  ExprPtr unary_power_operand() {
    std::size_t p = pos_;
    if (eat('-')) return node(Expr::Kind::Neg, power(), nullptr, p);
    return power();
  }

  ExprPtr atom() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of expression", pos_);
    std::size_t start = pos_;
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      ExprPtr e = sum();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::string num;
      while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
        num += s_[pos_++];
      if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
        std::size_t save = pos_;
        std::string ex(1, s_[pos_++]);
        if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ex += s_[pos_++];
        if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
          while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ex += s_[pos_++];
          num += ex;
        } else {
          pos_ = save;  // "2e" followed by something else: let the caller complain
        }
      }
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::Number;
      e->pos = start;
      try {
        std::size_t used = 0;
        e->value = std::stod(num, &used);
        if (used != num.size()) throw ParseError("malformed number '" + num + "'", start);
      } catch (const std::logic_error&) {
        throw ParseError("malformed number '" + num + "'", start);
      }
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string name;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        name += s_[pos_++];
      auto e = std::make_shared<Expr>();
      e->name = name;
      e->pos = start;
      if (eat('(')) {
        e->kind = Expr::Kind::Call;
        e->a = sum();
        if (!eat(')')) throw ParseError("expected ')'", pos_);
      } else {
        e->kind = Expr::Kind::Symbol;
      }
      return e;
    }
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

double apply_function(const std::string& f, double x, std::size_t pos) {
  if (f == "exp") return std::exp(x);
  if (f == "log" || f == "ln") return std::log(x);
  if (f == "sqrt") return std::sqrt(x);
  if (f == "sin") return std::sin(x);
  if (f == "cos") return std::cos(x);
  if (f == "abs") return std::abs(x);
  if (f == "pos") return std::max(x, 0.0);
  throw ParseError("unknown function '" + f + "'", pos);
}

double lookup_constant(const std::string& name, const Constants& c, std::size_t pos, bool* found) {
  auto it = c.find(name);
  *found = true;
  if (it != c.end()) return it->second;
  if (name == "pi") return std::numbers::pi;
  if (name == "e") return std::numbers::e;
  *found = false;
  (void)pos;
  return 0.0;
}

}  // namespace

ExprPtr parse_expr(std::string_view text) { return Parser(text).parse(); }

double eval_expr(const ExprPtr& e, const Constants& values) {
  switch (e->kind) {
    case Expr::Kind::Number:
      return e->value;
    case Expr::Kind::Symbol: {
      bool found = false;
      double v = lookup_constant(e->name, values, e->pos, &found);
      if (!found) throw ParseError("unknown symbol '" + e->name + "'", e->pos);
      return v;
    }
    case Expr::Kind::Neg:
      return -eval_expr(e->a, values);
    case Expr::Kind::Add:
      return eval_expr(e->a, values) + eval_expr(e->b, values);
    case Expr::Kind::Sub:
      return eval_expr(e->a, values) - eval_expr(e->b, values);
    case Expr::Kind::Mul:
      return eval_expr(e->a, values) * eval_expr(e->b, values);
    case Expr::Kind::Div:
      return eval_expr(e->a, values) / eval_expr(e->b, values);
    case Expr::Kind::Pow:
      return std::pow(eval_expr(e->a, values), eval_expr(e->b, values));
    case Expr::Kind::Call:
      return apply_function(e->name, eval_expr(e->a, values), e->pos);
  }
  return 0.0;
}

Poly to_poly(const ExprPtr& e, const RingPtr& ring, const Constants& constants) {
  auto constant_value = [&](const ExprPtr& sub, const char* what) {
    Poly p = to_poly(sub, ring, constants);
    if (p.degree() > 0) throw ParseError(std::string(what) + " must be constant", sub->pos);
    return p.constant_term();
  };
  switch (e->kind) {
    case Expr::Kind::Number:
      return Poly(ring, e->value);
    case Expr::Kind::Symbol: {
      if (ring->contains(e->name)) return Poly::variable(ring, e->name);
      bool found = false;
      double v = lookup_constant(e->name, constants, e->pos, &found);
      if (!found) throw ParseError("unknown symbol '" + e->name + "'", e->pos);
      return Poly(ring, v);
    }
    case Expr::Kind::Neg:
      return -to_poly(e->a, ring, constants);
    case Expr::Kind::Add:
      return to_poly(e->a, ring, constants) + to_poly(e->b, ring, constants);
    case Expr::Kind::Sub:
      return to_poly(e->a, ring, constants) - to_poly(e->b, ring, constants);
    case Expr::Kind::Mul:
      return to_poly(e->a, ring, constants) * to_poly(e->b, ring, constants);
    case Expr::Kind::Div: {
      double d = constant_value(e->b, "divisor");
      if (d == 0.0) throw ParseError("division by zero", e->b->pos);
      return to_poly(e->a, ring, constants) * (1.0 / d);
    }
    case Expr::Kind::Pow: {
      double k = constant_value(e->b, "exponent");
      Poly base = to_poly(e->a, ring, constants);
      if (base.degree() == 0) return Poly(ring, std::pow(base.constant_term(), k));
      if (k < 0 || k != std::floor(k) || k > 255)
        throw ParseError("exponent must be a nonnegative integer", e->b->pos);
      return pow(base, static_cast<int>(k));
    }
    case Expr::Kind::Call:
      return Poly(ring, apply_function(e->name, constant_value(e->a, "function argument"), e->pos));
  }
  return Poly(ring);
}

Poly parse_poly(std::string_view text, const RingPtr& ring, const Constants& constants) {
  return to_poly(parse_expr(text), ring, constants);
}

}  // namespace barrier
