#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace barrier {

// Ordered list of variable names. Polynomials compare rings by content, so
// two rings built from the same names are interchangeable.
class Ring {
 public:
  explicit Ring(std::vector<std::string> names);

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int i) const { return names_[i]; }
  const std::vector<std::string>& names() const { return names_; }
  // -1 when the variable is not part of the ring.
  int find(std::string_view name) const;
  int index(std::string_view name) const;  // throws on unknown variable
  bool contains(std::string_view name) const { return find(name) >= 0; }

  bool operator==(const Ring& o) const { return names_ == o.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> lookup_;
};

using RingPtr = std::shared_ptr<const Ring>;

RingPtr make_ring(std::vector<std::string> names);

inline bool same_ring(const RingPtr& a, const RingPtr& b) {
  return a == b || (a && b && *a == *b);
}

struct Monomial {
  int deg = 0;
  std::vector<std::uint8_t> e;

  Monomial() = default;
  explicit Monomial(int nvars) : e(nvars, 0) {}

  int operator[](int i) const { return e[i]; }
  void set(int i, int p) {
    deg += p - e[i];
    e[i] = static_cast<std::uint8_t>(p);
  }
  bool operator==(const Monomial& o) const { return e == o.e; }
};

// Graded-lex: lower total degree first; within a degree the monomial with the
// larger power of the earlier variable comes first, so (x1,x2) of degree 2
// are ordered x1^2, x1 x2, x2^2.
struct GradedLexLess {
  bool operator()(const Monomial& a, const Monomial& b) const {
    if (a.deg != b.deg) return a.deg < b.deg;
    return a.e > b.e;
  }
};

Monomial monomial_product(const Monomial& a, const Monomial& b);

// Coefficient behaviour needed by Polynomial.  Specialized for AffineExpr.
template <typename C>
struct CoeffTraits {
  static bool is_zero(const C& c) { return std::abs(c) < 1e-300; }
  static C zero() { return C(0); }
};

template <typename Coeff>
class Polynomial {
 public:
  using Terms = std::map<Monomial, Coeff, GradedLexLess>;

  Polynomial() = default;
  explicit Polynomial(RingPtr ring) : ring_(std::move(ring)) {}
  Polynomial(RingPtr ring, const Coeff& c) : ring_(std::move(ring)) {
    add_term(Monomial(ring_->size()), c);
  }

  static Polynomial variable(const RingPtr& ring, std::string_view name) {
    Polynomial p(ring);
    Monomial m(ring->size());
    m.set(ring->index(name), 1);
    p.add_term(m, Coeff(1));
    return p;
  }

  const RingPtr& ring() const { return ring_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  int degree() const { return terms_.empty() ? 0 : terms_.rbegin()->first.deg; }

  // Total degree restricted to the variables flagged in mask.
  int degree_in(const std::vector<bool>& mask) const {
    int d = 0;
    for (const auto& [m, c] : terms_) {
      int s = 0;
      for (int i = 0; i < ring_->size(); ++i)
        if (mask[i]) s += m[i];
      d = std::max(d, s);
    }
    return d;
  }

  int degree_in(int var) const {
    int d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, m[var]);
    return d;
  }

  void add_term(const Monomial& m, const Coeff& c) {
    if (CoeffTraits<Coeff>::is_zero(c)) return;
    auto it = terms_.find(m);
    if (it == terms_.end()) {
      terms_.emplace(m, c);
      return;
    }
    it->second += c;
    if (CoeffTraits<Coeff>::is_zero(it->second)) terms_.erase(it);
  }

  Coeff coeff(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? CoeffTraits<Coeff>::zero() : it->second;
  }

  Coeff constant_term() const { return coeff(Monomial(ring_->size())); }

  Polynomial& operator+=(const Polynomial& o) {
    adopt_ring(o);
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    adopt_ring(o);
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }
  Polynomial& operator*=(double s) {
    if (s == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto it = terms_.begin(); it != terms_.end();) {
      it->second *= s;
      if (CoeffTraits<Coeff>::is_zero(it->second))
        it = terms_.erase(it);
      else
        ++it;
    }
    return *this;
  }

  Polynomial operator-() const {
    Polynomial r = *this;
    r *= -1.0;
    return r;
  }

  // Maps every coefficient through f, dropping zeros.
  template <typename F>
  auto map_coeffs(F&& f) const -> Polynomial<decltype(f(std::declval<Coeff>()))> {
    using R = decltype(f(std::declval<Coeff>()));
    Polynomial<R> r(ring_);
    for (const auto& [m, c] : terms_) r.add_term(m, f(c));
    return r;
  }

  void check_ring(const RingPtr& other) const {
    if (!same_ring(ring_, other)) throw std::invalid_argument("polynomial ring mismatch");
  }

 private:
  void adopt_ring(const Polynomial& o) {
    if (!ring_) {
      ring_ = o.ring_;
      return;
    }
    if (o.ring_) check_ring(o.ring_);
  }

  RingPtr ring_;
  Terms terms_;
};

using Poly = Polynomial<double>;

template <typename C>
Polynomial<C> operator+(Polynomial<C> a, const Polynomial<C>& b) {
  a += b;
  return a;
}
template <typename C>
Polynomial<C> operator-(Polynomial<C> a, const Polynomial<C>& b) {
  a -= b;
  return a;
}
template <typename C>
Polynomial<C> operator*(Polynomial<C> a, double s) {
  a *= s;
  return a;
}
template <typename C>
Polynomial<C> operator*(double s, Polynomial<C> a) {
  a *= s;
  return a;
}

// Product of polynomials whose coefficient types multiply to CA (CA * CB -> CA
// or CB * CA -> CA).  Covers Poly*Poly and decision-affine * Poly.
template <typename CA, typename CB>
Polynomial<CA> mul(const Polynomial<CA>& a, const Polynomial<CB>& b) {
  a.check_ring(b.ring());
  Polynomial<CA> r(a.ring());
  for (const auto& [ma, ca] : a.terms())
    for (const auto& [mb, cb] : b.terms()) r.add_term(monomial_product(ma, mb), ca * cb);
  return r;
}

template <typename C>
Polynomial<C> operator*(const Polynomial<C>& a, const Polynomial<C>& b) {
  return mul(a, b);
}

template <typename C>
Polynomial<C> pow(const Polynomial<C>& p, int k) {
  if (k < 0) throw std::invalid_argument("negative polynomial exponent");
  Polynomial<C> r(p.ring(), C(1));
  Polynomial<C> base = p;
  while (k > 0) {
    if (k & 1) r = r * base;
    k >>= 1;
    if (k) base = base * base;
  }
  return r;
}

template <typename C>
Polynomial<C> diff(const Polynomial<C>& p, int var) {
  Polynomial<C> r(p.ring());
  for (const auto& [m, c] : p.terms()) {
    int k = m[var];
    if (k == 0) continue;
    Monomial d = m;
    d.set(var, k - 1);
    C cc = c;
    cc *= static_cast<double>(k);
    r.add_term(d, cc);
  }
  return r;
}

template <typename C>
Polynomial<C> diff(const Polynomial<C>& p, std::string_view var) {
  return diff(p, p.ring()->index(var));
}

// Exact definite integral over var in [a,b].
template <typename C>
Polynomial<C> integrate(const Polynomial<C>& p, int var, double a, double b) {
  Polynomial<C> r(p.ring());
  for (const auto& [m, c] : p.terms()) {
    int k = m[var];
    double w = (std::pow(b, k + 1) - std::pow(a, k + 1)) / (k + 1);
    Monomial d = m;
    d.set(var, 0);
    C cc = c;
    cc *= w;
    r.add_term(d, cc);
  }
  return r;
}

template <typename C>
Polynomial<C> integrate01(const Polynomial<C>& p, std::string_view var) {
  return integrate(p, p.ring()->index(var), 0.0, 1.0);
}

// Replaces variable var by q.
template <typename C, typename CQ>
Polynomial<C> substitute(const Polynomial<C>& p, int var, const Polynomial<CQ>& q) {
  p.check_ring(q.ring());
  int maxk = p.degree_in(var);
  std::vector<Polynomial<CQ>> powers;
  powers.emplace_back(q.ring(), CQ(1));
  for (int k = 1; k <= maxk; ++k) powers.push_back(mul(powers.back(), q));
  Polynomial<C> r(p.ring());
  for (const auto& [m, c] : p.terms()) {
    int k = m[var];
    Monomial rest = m;
    rest.set(var, 0);
    if (k == 0) {
      r.add_term(rest, c);
      continue;
    }
    for (const auto& [mq, cq] : powers[k].terms()) r.add_term(monomial_product(rest, mq), c * cq);
  }
  return r;
}

template <typename C, typename CQ>
Polynomial<C> substitute(const Polynomial<C>& p, std::string_view var, const Polynomial<CQ>& q) {
  return substitute(p, p.ring()->index(var), q);
}

// Sets var to a numeric value.
template <typename C>
Polynomial<C> substitute(const Polynomial<C>& p, int var, double value) {
  Polynomial<C> r(p.ring());
  for (const auto& [m, c] : p.terms()) {
    Monomial rest = m;
    rest.set(var, 0);
    C cc = c;
    cc *= std::pow(value, m[var]);
    r.add_term(rest, cc);
  }
  return r;
}

// Moves all terms to a new ring that contains every variable used by p.
template <typename C>
Polynomial<C> change_ring(const Polynomial<C>& p, const RingPtr& to) {
  std::vector<int> map(p.ring()->size());
  for (int i = 0; i < p.ring()->size(); ++i) map[i] = to->find(p.ring()->name(i));
  Polynomial<C> r(to);
  for (const auto& [m, c] : p.terms()) {
    Monomial n(to->size());
    for (int i = 0; i < p.ring()->size(); ++i) {
      if (m[i] == 0) continue;
      if (map[i] < 0)
        throw std::invalid_argument("variable " + p.ring()->name(i) + " missing from target ring");
      n.set(map[i], m[i]);
    }
    r.add_term(n, c);
  }
  return r;
}

double eval(const Poly& p, const std::vector<double>& point);
double eval(const Poly& p, const std::map<std::string, double>& point);

// All monomials of total degree <= d in vars, graded-lex.
std::vector<Poly> monomial_vector(const RingPtr& ring, const std::vector<std::string>& vars, int d);
std::vector<Monomial> monomial_exponents(const RingPtr& ring, const std::vector<int>& vars, int d);

// Splits p by the monomials in the variables flagged in mask:
// p = sum_k key_k * coeff_k(remaining variables).
template <typename C>
std::map<Monomial, Polynomial<C>, GradedLexLess> split_by(const Polynomial<C>& p,
                                                          const std::vector<bool>& mask) {
  std::map<Monomial, Polynomial<C>, GradedLexLess> out;
  int n = p.ring()->size();
  for (const auto& [m, c] : p.terms()) {
    Monomial key(n), rest(n);
    for (int i = 0; i < n; ++i) {
      if (mask[i])
        key.set(i, m[i]);
      else
        rest.set(i, m[i]);
    }
    auto it = out.find(key);
    if (it == out.end()) it = out.emplace(key, Polynomial<C>(p.ring())).first;
    it->second.add_term(rest, c);
  }
  return out;
}

// Drops terms whose coefficient magnitude is below tol (explicit pruning).
Poly prune(const Poly& p, double tol);

double max_abs_coeff(const Poly& p);

std::string to_string(const Poly& p, int precision = 10);
std::string monomial_string(const Ring& ring, const Monomial& m);

// Symmetric matrix of polynomials stored as its upper triangle.
template <typename C>
class SymPolyMatrix {
 public:
  SymPolyMatrix() = default;
  SymPolyMatrix(int dim, const RingPtr& ring)
      : dim_(dim), entries_(dim * (dim + 1) / 2, Polynomial<C>(ring)) {
    if (dim <= 0) throw std::invalid_argument("matrix dimension must be positive");
  }

  int dim() const { return dim_; }
  Polynomial<C>& operator()(int i, int j) { return entries_[slot(i, j)]; }
  const Polynomial<C>& operator()(int i, int j) const { return entries_[slot(i, j)]; }

 private:
  int slot(int i, int j) const {
    if (i > j) std::swap(i, j);
    return i * dim_ - i * (i - 1) / 2 + (j - i);
  }
  int dim_ = 0;
  std::vector<Polynomial<C>> entries_;
};

using PolyMatrix = SymPolyMatrix<double>;

}  // namespace barrier
