#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "barrier/polynomial.hpp"

namespace barrier {

// constant + sum_k a_k * z_k over decision variables z (indexed by int).
class AffineExpr {
 public:
  AffineExpr() = default;
  AffineExpr(double c) : constant_(c) {}  // NOLINT: implicit on purpose
  static AffineExpr var(int id, double coef = 1.0) {
    AffineExpr e;
    if (coef != 0.0) e.terms_.emplace_back(id, coef);
    return e;
  }

  double constant() const { return constant_; }
  const std::vector<std::pair<int, double>>& terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }

  AffineExpr& operator+=(const AffineExpr& o) { return axpy(1.0, o); }
  AffineExpr& operator-=(const AffineExpr& o) { return axpy(-1.0, o); }
  AffineExpr& operator*=(double s);
  AffineExpr operator-() const {
    AffineExpr r = *this;
    r *= -1.0;
    return r;
  }

  // this += s * o
  AffineExpr& axpy(double s, const AffineExpr& o);

  double value(const std::vector<double>& z) const {
    double v = constant_;
    for (const auto& [k, a] : terms_) v += a * z[k];
    return v;
  }

  bool negligible() const {
    return std::abs(constant_) < 1e-300 && terms_.empty();
  }

 private:
  double constant_ = 0.0;
  std::vector<std::pair<int, double>> terms_;  // sorted by id, no zeros
};

inline AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
inline AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
inline AffineExpr operator*(AffineExpr a, double s) { return a *= s; }
inline AffineExpr operator*(double s, AffineExpr a) { return a *= s; }

template <>
struct CoeffTraits<AffineExpr> {
  static bool is_zero(const AffineExpr& c) { return c.negligible(); }
  static AffineExpr zero() { return AffineExpr(); }
};

using AffinePoly = Polynomial<AffineExpr>;

inline AffinePoly lift(const Poly& p) {
  return p.map_coeffs([](double c) { return AffineExpr(c); });
}

// Fixes the decision values.
inline Poly evaluate_decisions(const AffinePoly& p, const std::vector<double>& z) {
  return p.map_coeffs([&](const AffineExpr& c) { return c.value(z); });
}

}  // namespace barrier
