#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "barrier/polynomial.hpp"

namespace barrier {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t pos)
      : std::runtime_error(what + " at position " + std::to_string(pos)), pos_(pos) {}
  std::size_t position() const { return pos_; }

 private:
  std::size_t pos_;
};

// Expression tree for literals like "0.5*0.2^2*s^2" or "log(11/20*x*(1-x)+1)".
struct Expr {
  enum class Kind { Number, Symbol, Neg, Add, Sub, Mul, Div, Pow, Call };
  Kind kind = Kind::Number;
  double value = 0.0;
  std::string name;  // symbol or function
  std::shared_ptr<const Expr> a, b;
  std::size_t pos = 0;
};

using ExprPtr = std::shared_ptr<const Expr>;

ExprPtr parse_expr(std::string_view text);

// Named numeric constants (pi, e) plus user parameters.
using Constants = std::map<std::string, double>;

// Expands to a polynomial over ring.  Symbols must be ring variables or
// constants; division and function calls are allowed on constant operands only.
Poly to_poly(const ExprPtr& e, const RingPtr& ring, const Constants& constants = {});

Poly parse_poly(std::string_view text, const RingPtr& ring, const Constants& constants = {});

// Numeric evaluation with exp, log/ln, sqrt, sin, cos, abs and pos (positive
// part) available.
double eval_expr(const ExprPtr& e, const Constants& values);

}  // namespace barrier
