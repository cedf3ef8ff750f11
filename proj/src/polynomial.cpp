#include "barrier/polynomial.hpp"

#include <iomanip>

#include "barrier/affine.hpp"

namespace barrier {

Ring::Ring(std::vector<std::string> names) : names_(std::move(names)) {
  for (int i = 0; i < size(); ++i) {
    if (!lookup_.emplace(names_[i], i).second)
      throw std::invalid_argument("duplicate variable " + names_[i]);
  }
}

int Ring::find(std::string_view name) const {
  auto it = lookup_.find(std::string(name));
  return it == lookup_.end() ? -1 : it->second;
}

int Ring::index(std::string_view name) const {
  int i = find(name);
  if (i < 0) throw std::invalid_argument("unknown variable " + std::string(name));
  return i;
}

RingPtr make_ring(std::vector<std::string> names) {
  return std::make_shared<const Ring>(std::move(names));
}

Monomial monomial_product(const Monomial& a, const Monomial& b) {
  Monomial r = a;
  for (std::size_t i = 0; i < r.e.size(); ++i) r.e[i] = static_cast<std::uint8_t>(r.e[i] + b.e[i]);
  r.deg = a.deg + b.deg;
  return r;
}

double eval(const Poly& p, const std::vector<double>& point) {
  if (static_cast<int>(point.size()) != p.ring()->size())
    throw std::invalid_argument("eval: missing assignment");
  // Per-variable power tables, then one product per term.  Exponents are small
  // so this is as accurate as nested Horner for the well-scaled inputs we see.
  int n = p.ring()->size();
  std::vector<std::vector<double>> powers(n);
  for (int i = 0; i < n; ++i) {
    int k = p.degree_in(i);
    powers[i].resize(k + 1);
    powers[i][0] = 1.0;
    for (int j = 1; j <= k; ++j) powers[i][j] = powers[i][j - 1] * point[i];
  }
  double s = 0.0;
  for (const auto& [m, c] : p.terms()) {
    double t = c;
    for (int i = 0; i < n; ++i)
      if (m[i]) t *= powers[i][m[i]];
    s += t;
  }
  return s;
}

double eval(const Poly& p, const std::map<std::string, double>& point) {
  std::vector<double> v(p.ring()->size(), 0.0);
  std::vector<bool> used(p.ring()->size(), false);
  for (const auto& [m, c] : p.terms())
    for (int i = 0; i < p.ring()->size(); ++i)
      if (m[i]) used[i] = true;
  for (int i = 0; i < p.ring()->size(); ++i) {
    auto it = point.find(p.ring()->name(i));
    if (it == point.end()) {
      if (used[i]) throw std::invalid_argument("eval: missing assignment for " + p.ring()->name(i));
      continue;
    }
    v[i] = it->second;
  }
  return eval(p, v);
}

std::vector<Monomial> monomial_exponents(const RingPtr& ring, const std::vector<int>& vars, int d) {
  if (d < 0) throw std::invalid_argument("negative degree");
  std::vector<Monomial> out;
  Monomial cur(ring->size());
  // Depth-first enumeration, then sort into graded-lex.
  std::vector<Monomial> all;
  auto rec = [&](auto&& self, std::size_t k, int left) -> void {
    if (k == vars.size()) {
      all.push_back(cur);
      return;
    }
    for (int p = 0; p <= left; ++p) {
      cur.set(vars[k], p);
      self(self, k + 1, left - p);
    }
    cur.set(vars[k], 0);
  };
  rec(rec, 0, d);
  std::sort(all.begin(), all.end(), GradedLexLess());
  return all;
}

std::vector<Poly> monomial_vector(const RingPtr& ring, const std::vector<std::string>& vars, int d) {
  std::vector<int> ids;
  for (const auto& v : vars) ids.push_back(ring->index(v));
  std::vector<Poly> out;
  for (const auto& m : monomial_exponents(ring, ids, d)) {
    Poly p(ring);
    p.add_term(m, 1.0);
    out.push_back(std::move(p));
  }
  return out;
}

Poly prune(const Poly& p, double tol) {
  Poly r(p.ring());
  for (const auto& [m, c] : p.terms())
    if (std::abs(c) >= tol) r.add_term(m, c);
  return r;
}

double max_abs_coeff(const Poly& p) {
  double s = 0.0;
  for (const auto& [m, c] : p.terms()) s = std::max(s, std::abs(c));
  return s;
}

std::string monomial_string(const Ring& ring, const Monomial& m) {
  std::string s;
  for (int i = 0; i < ring.size(); ++i) {
    if (!m[i]) continue;
    if (!s.empty()) s += "*";
    s += ring.name(i);
    if (m[i] > 1) s += "^" + std::to_string(m[i]);
  }
  return s;
}

std::string to_string(const Poly& p, int precision) {
  if (p.is_zero()) return "0";
  std::ostringstream os;
  os << std::setprecision(precision);
  bool first = true;
  // Highest degree first reads more naturally.
  for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
    double c = it->second;
    std::string mono = monomial_string(*p.ring(), it->first);
    if (first)
      os << (c < 0 ? "-" : "");
    else
      os << (c < 0 ? " - " : " + ");
    double a = std::abs(c);
    if (mono.empty())
      os << a;
    else if (a == 1.0)
      os << mono;
    else
      os << a << "*" << mono;
    first = false;
  }
  return os.str();
}

AffineExpr& AffineExpr::operator*=(double s) {
  if (s == 0.0) {
    constant_ = 0.0;
    terms_.clear();
    return *this;
  }
  constant_ *= s;
  if (std::abs(constant_) < 1e-300) constant_ = 0.0;
  for (auto& t : terms_) t.second *= s;
  return *this;
}

AffineExpr& AffineExpr::axpy(double s, const AffineExpr& o) {
  constant_ += s * o.constant_;
  if (std::abs(constant_) < 1e-300) constant_ = 0.0;
  if (o.terms_.empty() || s == 0.0) return *this;
  std::vector<std::pair<int, double>> merged;
  merged.reserve(terms_.size() + o.terms_.size());
  std::size_t i = 0, j = 0;
  while (i < terms_.size() || j < o.terms_.size()) {
    if (j == o.terms_.size() || (i < terms_.size() && terms_[i].first < o.terms_[j].first)) {
      merged.push_back(terms_[i++]);
    } else if (i == terms_.size() || o.terms_[j].first < terms_[i].first) {
      merged.emplace_back(o.terms_[j].first, s * o.terms_[j].second);
      ++j;
    } else {
      double v = terms_[i].second + s * o.terms_[j].second;
      if (std::abs(v) >= 1e-300) merged.emplace_back(terms_[i].first, v);
      ++i;
      ++j;
    }
  }
  terms_ = std::move(merged);
  return *this;
}

}  // namespace barrier
