#include "barrier/jetform.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace barrier {

Field state_field(const std::string& prefix, int max_order) {
  Field f{prefix, {}};
  for (int k = 0; k <= max_order; ++k) f.jets.push_back(prefix + std::to_string(k));
  return f;
}

Field aux_field(int index) {
  std::string v = "v" + std::to_string(index);
  return Field{v, {v, "d" + v}};
}

std::string JetSpace::tag(std::size_t index, std::size_t npoints) {
  if (index == 0) return "L";
  if (index + 1 == npoints) return "R";
  return "B" + std::to_string(index);
}

JetSpace::JetSpace(std::vector<Field> fields, std::vector<double> interior_breaks) : fields_(std::move(fields)) {
  points_.push_back(0.0);
  std::sort(interior_breaks.begin(), interior_breaks.end());
  for (double b : interior_breaks) {
    if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("breakpoints must lie inside (0,1)");
    if (std::abs(b - points_.back()) > 1e-12) points_.push_back(b);
  }
  points_.push_back(1.0);
  std::vector<std::string> names{"t", "x"};
  jet_ids_.resize(fields_.size());
  bnd_ids_.resize(fields_.size());
  for (std::size_t f = 0; f < fields_.size(); ++f)
    for (std::size_t k = 0; k < fields_[f].jets.size(); ++k) {
      jet_ids_[f].push_back(static_cast<int>(names.size()));
      jet_rev_.resize(names.size() + 1, {-1, -1});
      jet_rev_[names.size()] = {static_cast<int>(f), static_cast<int>(k)};
      names.push_back(fields_[f].jets[k]);
    }
  bnd_rev_.assign(names.size(), {-1, -1});
  bnd_point_.assign(names.size(), -1);
  for (std::size_t f = 0; f < fields_.size(); ++f) {
    bnd_ids_[f].resize(fields_[f].jets.size());
    for (std::size_t k = 0; k < fields_[f].jets.size(); ++k)
      for (std::size_t p = 0; p < points_.size(); ++p) {
        bnd_ids_[f][k].push_back(static_cast<int>(names.size()));
        bnd_rev_.emplace_back(static_cast<int>(f), static_cast<int>(k));
        bnd_point_.push_back(static_cast<int>(p));
        names.push_back(fields_[f].jets[k] + "_" + tag(p, points_.size()));
      }
  }
  jet_rev_.resize(names.size(), {-1, -1});
  ring_ = make_ring(names);
}

int JetSpace::field(const std::string& name) const {
  for (std::size_t f = 0; f < fields_.size(); ++f)
    if (fields_[f].name == name) return static_cast<int>(f);
  throw std::invalid_argument("unknown field " + name);
}

int JetSpace::jet(int field, int order) const {
  if (order < 0 || order > max_order(field))
    throw std::out_of_range("jet order " + std::to_string(order) + " exceeds the space of field " +
                            fields_[field].name);
  return jet_ids_[field][order];
}

std::optional<std::pair<int, int>> JetSpace::jet_of(int var) const {
  if (var < 0 || var >= static_cast<int>(jet_rev_.size()) || jet_rev_[var].first < 0) return std::nullopt;
  return jet_rev_[var];
}

int JetSpace::point_index(double x) const {
  for (std::size_t p = 0; p < points_.size(); ++p)
    if (std::abs(points_[p] - x) < 1e-12) return static_cast<int>(p);
  throw std::invalid_argument("x = " + std::to_string(x) + " is not a breakpoint of the jet space");
}

int JetSpace::boundary(int field, int order, double x) const {
  if (order < 0 || order > max_order(field)) throw std::out_of_range("boundary jet order out of range");
  return bnd_ids_[field][order][point_index(x)];
}

std::optional<std::pair<int, int>> JetSpace::boundary_of(int var) const {
  if (var < 0 || var >= static_cast<int>(bnd_rev_.size()) || bnd_rev_[var].first < 0) return std::nullopt;
  return bnd_rev_[var];
}

double JetSpace::boundary_point(int var) const { return points_[bnd_point_[var]]; }

std::vector<bool> JetSpace::tx_mask() const {
  std::vector<bool> m(ring_->size(), false);
  m[0] = m[1] = true;
  return m;
}

std::vector<bool> JetSpace::jet_mask() const {
  std::vector<bool> m(ring_->size(), false);
  for (const auto& ids : jet_ids_)
    for (int v : ids) m[v] = true;
  return m;
}

std::vector<bool> JetSpace::boundary_mask() const {
  std::vector<bool> m(ring_->size(), false);
  for (int v = 0; v < ring_->size(); ++v) m[v] = is_boundary(v);
  return m;
}

BoundaryRelation pin(const JetSpace& js, int field, int order, double x, const Poly& value) {
  return BoundaryRelation{{{js.boundary(field, order, x), 1.0}}, value};
}

template <typename C>
Polynomial<C> total_derivative(const Polynomial<C>& p, const JetSpace& js) {
  Polynomial<C> r(p.ring());
  const int n = p.ring()->size();
  for (const auto& [m, c] : p.terms()) {
    if (m[js.x()] > 0) {
      Monomial d = m;
      d.set(js.x(), m[js.x()] - 1);
      C cc = c;
      cc *= static_cast<double>(m[js.x()]);
      r.add_term(d, cc);
    }
    for (int v = 2; v < n; ++v) {
      if (!m[v]) continue;
      auto fo = js.jet_of(v);
      if (!fo) {
        if (js.is_boundary(v)) continue;  // boundary values are constants in x
        throw std::invalid_argument("total derivative of unknown variable");
      }
      int next = js.jet(fo->first, fo->second + 1);
      Monomial d = m;
      d.set(v, m[v] - 1);
      d.set(next, d[next] + 1);
      C cc = c;
      cc *= static_cast<double>(m[v]);
      r.add_term(d, cc);
    }
  }
  return r;
}

template <typename C>
Polynomial<C> at_boundary(const Polynomial<C>& p, const JetSpace& js, double a) {
  Polynomial<C> r(p.ring());
  const int n = p.ring()->size();
  for (const auto& [m, c] : p.terms()) {
    Monomial d(n);
    for (int v = 0; v < n; ++v) {
      if (!m[v] || v == js.x()) continue;
      auto fo = js.jet_of(v);
      int target = fo ? js.boundary(fo->first, fo->second, a) : v;
      d.set(target, d[target] + m[v]);
    }
    C cc = c;
    cc *= std::pow(a, m[js.x()]);
    r.add_term(d, cc);
  }
  return r;
}

namespace {

// [p]_a^b = p(b) - p(a) with boundary values.
template <typename C>
Polynomial<C> bracket(const Polynomial<C>& p, const JetSpace& js, double a, double b) {
  return at_boundary(p, js, b) - at_boundary(p, js, a);
}

template <typename C>
int field_order(const Polynomial<C>& p, const JetSpace& js, int field) {
  int k = -1;
  for (int o = 0; o <= js.max_order(field); ++o)
    if (p.degree_in(js.jet(field, o)) > 0) k = o;
  return k;
}

}  // namespace

template <typename C>
IntegralForm<C> lie_derivative(const IntegralForm<C>& form, const Dynamics& dyn, const JetSpace& js) {
  const RingPtr& ring = js.ring();
  for (const auto& piece : form.bulk) {
    for (std::size_t f = 0; f < js.fields().size(); ++f)
      if (static_cast<int>(f) != dyn.field && field_order(piece, js, static_cast<int>(f)) >= 0)
        throw std::invalid_argument("lie_derivative: form depends on a field without dynamics");
  }
  Poly dudt = dyn.time_derivative();
  int kmax = 0;
  for (const auto& piece : form.bulk) kmax = std::max(kmax, field_order(piece, js, dyn.field));
  for (int o = 0; o <= js.max_order(dyn.field); ++o)
    if (form.boundary.degree_in(js.boundary(dyn.field, o, 0.0)) > 0 ||
        form.boundary.degree_in(js.boundary(dyn.field, o, 1.0)) > 0)
      kmax = std::max(kmax, o);
  std::vector<Poly> dk{dudt};
  for (int k = 1; k <= kmax; ++k) dk.push_back(total_derivative(dk.back(), js));

  IntegralForm<C> out(ring, form.breaks);
  for (int i = 0; i < form.pieces(); ++i) {
    const auto& b = form.bulk[i];
    Polynomial<C> r = diff(b, js.t());
    for (int k = 0; k <= kmax; ++k) {
      Polynomial<C> db = diff(b, js.jet(dyn.field, k));
      if (!db.is_zero()) r += mul(db, dk[k]);
    }
    out.bulk[i] = std::move(r);
  }
  Polynomial<C> bd = diff(form.boundary, js.t());
  for (int v = 0; v < ring->size(); ++v) {
    if (form.boundary.degree_in(v) == 0) continue;
    auto fo = js.boundary_of(v);
    if (!fo) continue;
    if (fo->first != dyn.field) throw std::invalid_argument("lie_derivative: boundary value of a static field");
    bd += mul(diff(form.boundary, v), at_boundary(dk[fo->second], js, js.boundary_point(v)));
  }
  out.boundary = std::move(bd);
  out.scalar = diff(form.scalar, js.t());
  return out;
}

template <typename C>
IntegralForm<C> integrate_by_parts(const IntegralForm<C>& form, int target_order, const JetSpace& js,
                                   IbpReport* report) {
  IntegralForm<C> out = form;
  const int nf = static_cast<int>(js.fields().size());
  for (int i = 0; i < out.pieces(); ++i) {
    const double a = out.breaks[i], b = out.breaks[i + 1];
    Polynomial<C>& p = out.bulk[i];
    for (bool changed = true; changed;) {
      changed = false;
      for (int f = 0; f < nf; ++f) {
        int K = field_order(p, js, f);
        if (K <= target_order || K <= 0) continue;
        const int top = js.jet(f, K), prev = js.jet(f, K - 1);
        // Terms linear in the top jet whose remaining jets all sit at least two
        // orders lower: c m' u_{K-1}^q u_K = c m' D(u_{K-1}^{q+1})/(q+1).
        Polynomial<C> keep(p.ring()), boundary(p.ring()), add(p.ring());
        bool any = false;
        for (const auto& [m, c] : p.terms()) {
          bool ok = m[top] == 1;
          if (ok) {
            for (int v = 2; v < p.ring()->size() && ok; ++v) {
              if (!m[v] || v == top || v == prev) continue;
              auto fo = js.jet_of(v);
              if (fo && fo->second > K - 2) ok = false;
            }
          }
          if (!ok) {
            keep.add_term(m, c);
            continue;
          }
          any = true;
          int q = m[prev];
          Monomial rest = m;
          rest.set(top, 0);
          rest.set(prev, 0);
          Polynomial<C> A(p.ring());
          A.add_term(rest, c);
          Poly w(p.ring());
          Monomial wm(p.ring()->size());
          wm.set(prev, q + 1);
          w.add_term(wm, 1.0 / (q + 1));
          boundary += bracket(mul(A, w), js, a, b);
          add -= mul(total_derivative(A, js), w);
        }
        if (!any) continue;
        p = keep + add;
        out.boundary += boundary;
        changed = true;
      }
    }
  }
  if (report) {
    report->reached = true;
    report->remaining_order.assign(nf, -1);
    for (int f = 0; f < nf; ++f) {
      for (const auto& piece : out.bulk)
        report->remaining_order[f] = std::max(report->remaining_order[f], field_order(piece, js, f));
      if (report->remaining_order[f] > target_order) report->reached = false;
    }
  }
  return out;
}

namespace {

// Eliminated boundary variables with their expressions, by Gaussian
// elimination over the relation list.
std::vector<std::pair<int, Poly>> eliminate(const std::vector<BoundaryRelation>& bcs, const JetSpace& js) {
  const RingPtr& ring = js.ring();
  std::vector<std::pair<int, Poly>> piv;
  for (const auto& rel : bcs) {
    Poly R(ring);
    for (const auto& [v, c] : rel.coeffs) R += Poly::variable(ring, ring->name(v)) * c;
    R -= change_ring(rel.value, ring);
    for (const auto& [v, e] : piv) R = substitute(R, v, e);
    int pivot = -1;
    double cp = 0.0;
    for (int v = 0; v < ring->size() && pivot < 0; ++v) {
      if (!js.is_boundary(v) || R.degree_in(v) == 0) continue;
      if (R.degree_in(v) != 1) continue;
      Poly coef = diff(R, v);
      if (coef.degree() == 0 && std::abs(coef.constant_term()) > 1e-14) {
        pivot = v;
        cp = coef.constant_term();
      }
    }
    if (pivot < 0) {
      std::vector<bool> bm = js.boundary_mask();
      if (R.degree_in(bm) == 0) {
        if (max_abs_coeff(R) > 1e-10) throw std::invalid_argument("inconsistent boundary conditions");
        continue;  // redundant
      }
      throw std::invalid_argument("boundary relation is not linear in boundary values");
    }
    Poly expr = (R - Poly::variable(ring, ring->name(pivot)) * cp) * (-1.0 / cp);
    for (auto& [v, e] : piv) e = substitute(e, pivot, expr);
    piv.emplace_back(pivot, expr);
  }
  return piv;
}

}  // namespace

template <typename C>
IntegralForm<C> apply_bcs(const IntegralForm<C>& form, const std::vector<BoundaryRelation>& bcs, const JetSpace& js) {
  IntegralForm<C> out = form;
  if (form.boundary.is_zero()) return out;
  for (const auto& [v, e] : eliminate(bcs, js)) out.boundary = substitute(out.boundary, v, e);
  return out;
}

std::vector<BoundaryRelation> derived_relations(const Dynamics& dyn, const JetSpace& js) {
  const RingPtr& ring = js.ring();
  std::vector<BoundaryRelation> out = dyn.bcs;
  auto piv = eliminate(dyn.bcs, js);
  Poly dudt = dyn.time_derivative();
  for (const auto& rel : dyn.bcs) {
    if (rel.coeffs.size() != 1) continue;
    int v = rel.coeffs[0].first;
    auto fo = js.boundary_of(v);
    if (!fo || fo->first != dyn.field || fo->second != 0) continue;
    double xb = js.boundary_point(v);
    Poly psi = change_ring(rel.value, ring) * (1.0 / rel.coeffs[0].second);
    Poly R = at_boundary(dudt, js, xb) - diff(psi, js.t());
    for (const auto& [pv, e] : piv) R = substitute(R, pv, e);
    std::vector<bool> bm = js.boundary_mask();
    if (R.degree_in(bm) != 1) continue;
    BoundaryRelation derived;
    derived.value = Poly(ring);
    bool linear = true;
    for (const auto& [m, c] : R.terms()) {
      int bv = -1, deg = 0;
      bool has_t = false;
      for (int w = 0; w < ring->size(); ++w) {
        if (!m[w]) continue;
        if (js.is_boundary(w)) {
          bv = w;
          deg += m[w];
        } else {
          has_t = true;
        }
      }
      if (bv < 0) {
        derived.value.add_term(m, -c);
        continue;
      }
      if (deg != 1 || has_t) {
        linear = false;
        break;
      }
      derived.coeffs.emplace_back(bv, c);
    }
    if (linear && !derived.coeffs.empty()) out.push_back(derived);
  }
  return out;
}

Form point_eval_functional(double x0, const Dynamics& dyn, const JetSpace& js) {
  if (x0 < 0.0 || x0 > 1.0) throw std::invalid_argument("point must lie in [0,1]");
  const RingPtr& ring = js.ring();
  auto pinned = [&](double xb) -> std::optional<Poly> {
    int bv = js.boundary(dyn.field, 0, xb);
    for (const auto& rel : dyn.bcs)
      if (rel.coeffs.size() == 1 && rel.coeffs[0].first == bv)
        return change_ring(rel.value, ring) * (1.0 / rel.coeffs[0].second);
    return std::nullopt;
  };
  Poly u1 = Poly::variable(ring, ring->name(js.jet(dyn.field, 1)));
  auto left = pinned(0.0);
  auto right = left ? std::nullopt : pinned(1.0);
  if (!left && !right) throw std::invalid_argument("point evaluation needs a pinned endpoint");
  const bool interior = x0 > 1e-12 && x0 < 1.0 - 1e-12;
  Form f = interior ? Form(ring, {0.0, x0, 1.0}) : Form(ring);
  if (left) {
    f.scalar = *left;
    if (interior)
      f.bulk[0] = u1;
    else if (x0 >= 1.0 - 1e-12)
      f.bulk[0] = u1;
  } else {
    f.scalar = *right;
    if (interior)
      f.bulk[1] = -u1;
    else if (x0 <= 1e-12)
      f.bulk[0] = -u1;
  }
  return f;
}

double evaluate(const Form& form, const JetSpace& js, const std::map<int, Poly>& functions, double t) {
  const RingPtr& ring = js.ring();
  // Derivative tables per field.
  std::map<int, std::vector<Poly>> derivs;
  for (const auto& [f, F] : functions) {
    std::vector<Poly> d{change_ring(F, ring)};
    for (int k = 1; k <= js.max_order(f); ++k) d.push_back(diff(d.back(), js.x()));
    derivs[f] = std::move(d);
  }
  double total = 0.0;
  for (int i = 0; i < form.pieces(); ++i) {
    Poly q = form.bulk[i];
    for (const auto& [f, d] : derivs)
      for (int k = 0; k <= js.max_order(f); ++k)
        if (q.degree_in(js.jet(f, k)) > 0) q = substitute(q, js.jet(f, k), d[k]);
    Poly I = integrate(q, js.x(), form.breaks[i], form.breaks[i + 1]);
    I = substitute(I, js.t(), t);
    if (I.degree() > 0) throw std::invalid_argument("evaluate: form references a field without a function");
    total += I.constant_term();
  }
  Poly bd = form.boundary;
  for (int v = 0; v < ring->size(); ++v) {
    if (v == js.t() || bd.degree_in(v) == 0) continue;
    auto fo = js.boundary_of(v);
    if (!fo || !derivs.count(fo->first)) throw std::invalid_argument("evaluate: unknown boundary value");
    Poly val = substitute(substitute(derivs[fo->first][fo->second], js.x(), js.boundary_point(v)), js.t(), t);
    bd = substitute(bd, v, val.constant_term());
  }
  bd = substitute(bd, js.t(), t);
  Poly sc = substitute(form.scalar, js.t(), t);
  if (bd.degree() > 0 || sc.degree() > 0) throw std::invalid_argument("evaluate: unresolved variables");
  return total + bd.constant_term() + sc.constant_term();
}

template <typename C>
IntegralForm<C> refine(const IntegralForm<C>& f, const std::vector<double>& breaks) {
  IntegralForm<C> out(f.boundary.ring(), breaks);
  for (int i = 0; i + 1 < static_cast<int>(breaks.size()); ++i) {
    double mid = 0.5 * (breaks[i] + breaks[i + 1]);
    int j = 0;
    while (j + 1 < f.pieces() && mid > f.breaks[j + 1]) ++j;
    out.bulk[i] = f.bulk[j];
  }
  out.boundary = f.boundary;
  out.scalar = f.scalar;
  return out;
}

template <typename C>
IntegralForm<C> operator+(const IntegralForm<C>& a, const IntegralForm<C>& b) {
  std::vector<double> br = a.breaks;
  for (double x : b.breaks) {
    bool present = false;
    for (double y : br) present = present || std::abs(x - y) < 1e-12;
    if (!present) br.push_back(x);
  }
  std::sort(br.begin(), br.end());
  IntegralForm<C> ra = refine(a, br), rb = refine(b, br);
  for (int i = 0; i < ra.pieces(); ++i) ra.bulk[i] += rb.bulk[i];
  ra.boundary += rb.boundary;
  ra.scalar += rb.scalar;
  return ra;
}

AffineForm lift(const Form& f) {
  AffineForm out(f.boundary.ring(), f.breaks);
  for (int i = 0; i < f.pieces(); ++i) out.bulk[i] = lift(f.bulk[i]);
  out.boundary = lift(f.boundary);
  out.scalar = lift(f.scalar);
  return out;
}

Form evaluate_decisions(const AffineForm& f, const std::vector<double>& z) {
  Form out(f.boundary.ring(), f.breaks);
  for (int i = 0; i < f.pieces(); ++i) out.bulk[i] = evaluate_decisions(f.bulk[i], z);
  out.boundary = evaluate_decisions(f.boundary, z);
  out.scalar = evaluate_decisions(f.scalar, z);
  return out;
}

#define BARRIER_INSTANTIATE(C)                                                                                  \
  template Polynomial<C> total_derivative(const Polynomial<C>&, const JetSpace&);                               \
  template Polynomial<C> at_boundary(const Polynomial<C>&, const JetSpace&, double);                            \
  template IntegralForm<C> lie_derivative(const IntegralForm<C>&, const Dynamics&, const JetSpace&);            \
  template IntegralForm<C> integrate_by_parts(const IntegralForm<C>&, int, const JetSpace&, IbpReport*);        \
  template IntegralForm<C> apply_bcs(const IntegralForm<C>&, const std::vector<BoundaryRelation>&,              \
                                     const JetSpace&);                                                          \
  template IntegralForm<C> refine(const IntegralForm<C>&, const std::vector<double>&);                          \
  template IntegralForm<C> operator+(const IntegralForm<C>&, const IntegralForm<C>&);

BARRIER_INSTANTIATE(double)
BARRIER_INSTANTIATE(AffineExpr)

#undef BARRIER_INSTANTIATE

}  // namespace barrier
