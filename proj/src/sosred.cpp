#include "barrier/sosred.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include <Eigen/SparseCholesky>

#include "barrier/parser.hpp"

namespace barrier {

int DecisionSpace::add(DecisionKind kind, std::string label) {
  kinds_.push_back(kind);
  labels_.push_back(std::move(label));
  return size() - 1;
}

AffinePoly unknown_poly(DecisionSpace& ds, const RingPtr& ring, const std::vector<int>& vars, int degree,
                        const std::string& label, const Poly& factor) {
  AffinePoly p(ring);
  if (degree < 0) return p;
  for (const Monomial& m : monomial_exponents(ring, vars, degree)) {
    int id = ds.add(DecisionKind::Free, label + "[" + monomial_string(*ring, m) + "]");
    if (factor.ring()) {
      for (const auto& [fm, fc] : factor.terms()) p.add_term(monomial_product(m, fm), AffineExpr::var(id, fc));
    } else {
      p.add_term(m, AffineExpr::var(id));
    }
  }
  return p;
}

template <typename C>
QuadLike<C> to_quadlike(const Polynomial<C>& p, const std::vector<Monomial>& eta, const std::vector<bool>& state_mask) {
  const RingPtr& ring = p.ring();
  QuadLike<C> q{eta, SymPolyMatrix<C>(static_cast<int>(eta.size()), ring)};
  const int n = static_cast<int>(eta.size());
  for (const auto& [key, coeff] : split_by(p, state_mask)) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        if (monomial_product(eta[i], eta[j]) == key) pairs.emplace_back(i, j);
    if (pairs.empty())
      throw std::invalid_argument("to_quadlike: state monomial " + monomial_string(*ring, key) +
                                  " exceeds the degree of the basis");
    const double share = 1.0 / static_cast<double>(pairs.size());
    for (auto [i, j] : pairs) q.Q(i, j) += coeff * (i == j ? share : 0.5 * share);
  }
  return q;
}

template <typename C>
Polynomial<C> expand(const QuadLike<C>& q, const RingPtr& ring) {
  Polynomial<C> r(ring);
  const int n = static_cast<int>(q.eta.size());
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Monomial m = monomial_product(q.eta[i], q.eta[j]);
      for (const auto& [mq, c] : q.Q(i, j).terms()) {
        C cc = c;
        cc *= (i == j ? 1.0 : 2.0);
        r.add_term(monomial_product(m, mq), cc);
      }
    }
  return r;
}

template QuadLike<double> to_quadlike(const Poly&, const std::vector<Monomial>&, const std::vector<bool>&);
template QuadLike<AffineExpr> to_quadlike(const AffinePoly&, const std::vector<Monomial>&, const std::vector<bool>&);
template Poly expand(const QuadLike<double>&, const RingPtr&);
template AffinePoly expand(const QuadLike<AffineExpr>&, const RingPtr&);

AffinePoly quadratic(const std::vector<Monomial>& eta, const SymPolyMatrix<AffineExpr>& P, const RingPtr& ring) {
  return expand(QuadLike<AffineExpr>{eta, P}, ring);
}

SymPolyMatrix<AffineExpr> unknown_matrix(DecisionSpace& ds, const RingPtr& ring, int dim, const std::vector<int>& vars,
                                         int degree, const std::string& label) {
  SymPolyMatrix<AffineExpr> P(dim, ring);
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j)
      P(i, j) = unknown_poly(ds, ring, vars, degree, label + "(" + std::to_string(i) + "," + std::to_string(j) + ")");
  return P;
}

void add_ibp_slack(AffineForm& form, int piece, const AffinePoly& S, const JetSpace& js) {
  const double a = form.breaks[piece], b = form.breaks[piece + 1];
  form.bulk[piece] += total_derivative(S, js);
  form.boundary -= at_boundary(S, js, b);
  form.boundary += at_boundary(S, js, a);
}

std::vector<MultiplierIds> attach_multipliers(AffineForm& form, const std::vector<IntegralSet>& sets,
                                              const std::vector<int>& aux, DecisionSpace& ds, int m_degree,
                                              const JetSpace& js, std::vector<BoundaryRelation>* aux_bcs) {
  if (sets.empty()) throw std::invalid_argument("attach_multipliers: no set constraints");
  if (aux.size() != sets.size()) throw std::invalid_argument("attach_multipliers: one aux field per set");
  const RingPtr& ring = js.ring();
  std::vector<MultiplierIds> out;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const IntegralSet& set = sets[k];
    if (static_cast<int>(set.g.size()) != form.pieces())
      throw std::invalid_argument("attach_multipliers: integrand count does not match pieces");
    MultiplierIds ids;
    ids.aux_field = aux[k];
    Poly dv = Poly::variable(ring, ring->name(js.jet(aux[k], 1)));
    for (int p = 0; p < form.pieces(); ++p) {
      AffinePoly m =
          unknown_poly(ds, ring, {js.x()}, m_degree, "m" + std::to_string(k + 1) + "." + std::to_string(p));
      form.bulk[p] += mul(m, dv - change_ring(set.g[p], ring));
      ids.m.push_back(std::move(m));
    }
    ids.n = ds.add(DecisionKind::Nonneg, "-n" + std::to_string(k + 1));
    // -n v(1) with n <= 0, i.e. (+|n|) v(1).
    Poly v1 = Poly::variable(ring, ring->name(js.boundary(aux[k], 0, 1.0)));
    form.boundary += mul(AffinePoly(ring, AffineExpr::var(ids.n)), v1);
    if (aux_bcs) aux_bcs->push_back(pin(js, aux[k], 0, 0.0, Poly(ring)));
    out.push_back(std::move(ids));
  }
  return out;
}

// ---------------------------------------------------------------------------
// SOS to SDP

namespace {

using MonoSet = std::set<Monomial, GradedLexLess>;

void enumerate(const std::vector<int>& vars, const std::vector<int>& caps, int maxdeg, std::size_t k, Monomial& cur,
               std::vector<Monomial>& out) {
  if (k == vars.size()) {
    out.push_back(cur);
    return;
  }
  for (int e = 0; e <= caps[k] && cur.deg + e <= maxdeg; ++e) {
    cur.set(vars[k], e);
    enumerate(vars, caps, maxdeg, k + 1, cur, out);
  }
  cur.set(vars[k], 0);
}

Monomial project(const Monomial& m, const std::vector<bool>& mask) {
  Monomial r(static_cast<int>(m.e.size()));
  for (std::size_t i = 0; i < m.e.size(); ++i)
    if (mask[i]) r.set(static_cast<int>(i), m[static_cast<int>(i)]);
  return r;
}

// State part of the Gram basis: half-degree monomials, pruned by the
// diagonal-consistency rule until stable.
std::vector<Monomial> state_basis(const AffinePoly& p, const std::vector<bool>& mask) {
  const int n = p.ring()->size();
  MonoSet support;
  std::vector<int> maxexp(n, 0);
  int maxdeg = 0;
  for (const auto& [m, c] : p.terms()) {
    Monomial s = project(m, mask);
    support.insert(s);
    maxdeg = std::max(maxdeg, s.deg);
    for (int v = 0; v < n; ++v) maxexp[v] = std::max(maxexp[v], s[v]);
  }
  std::vector<int> vars, caps;
  for (int v = 0; v < n; ++v)
    if (mask[v] && maxexp[v] > 0) {
      vars.push_back(v);
      caps.push_back(maxexp[v] / 2);
    }
  std::vector<Monomial> cand;
  Monomial cur(n);
  enumerate(vars, caps, maxdeg / 2, 0, cur, cand);
  MonoSet keep(cand.begin(), cand.end());
  for (bool changed = true; changed;) {
    changed = false;
    for (auto it = keep.begin(); it != keep.end();) {
      Monomial sq = monomial_product(*it, *it);
      bool ok = support.count(sq) > 0;
      for (auto jt = keep.begin(); !ok && jt != keep.end(); ++jt) {
        if (jt == it) continue;
        Monomial other(n);
        bool valid = true;
        for (int v = 0; v < n && valid; ++v) {
          int e = sq[v] - (*jt)[v];
          if (e < 0) valid = false;
          else other.set(v, e);
        }
        ok = valid && keep.count(other) > 0;
      }
      if (!ok) {
        it = keep.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  return std::vector<Monomial>(keep.begin(), keep.end());
}

}  // namespace

SosSdp sos_to_sdp(const SosProgram& prog) {
  if (prog.constraints.empty() && prog.equalities.empty()) throw std::invalid_argument("sos_to_sdp: empty program");
  const RingPtr& ring = prog.ring;
  const int nv = ring->size();
  const int tvar = ring->find("t"), xvar = ring->find("x");
  SosSdp out;
  auto& sdp = out.sdp;

  int nfree = 0, nnon = 0;
  out.slot.resize(prog.vars.size());
  for (int id = 0; id < prog.vars.size(); ++id)
    out.slot[id] = {0, prog.vars.kind(id) == DecisionKind::Free ? nfree++ : nnon++};
  const int free_block = nfree ? sdp.add_block(nfree, BlockKind::Free) : -1;
  const int trace_slack = prog.normalize_trace ? nnon++ : -1;
  const int non_block = nnon ? sdp.add_block(nnon, BlockKind::Nonneg) : -1;
  for (int id = 0; id < prog.vars.size(); ++id)
    out.slot[id].first = prog.vars.kind(id) == DecisionKind::Free ? free_block : non_block;

  // Gram blocks.
  for (int ci = 0; ci < static_cast<int>(prog.constraints.size()); ++ci) {
    const SosConstraint& c = prog.constraints[ci];
    c.p.check_ring(ring);
    std::vector<bool> txmask(nv, false);
    for (const auto& [m, coef] : c.p.terms())
      for (int v = 0; v < nv; ++v)
        if (m[v] && !c.state_mask[v]) {
          if (v != tvar && v != xvar)
            throw std::invalid_argument("sos_to_sdp: constraint '" + c.label + "' uses variable " + ring->name(v) +
                                        " that is neither state, t nor x");
          txmask[v] = true;
        }
    int D = c.p.degree_in(txmask);
    std::vector<int> txvars;
    for (int v = 0; v < nv; ++v)
      if (txmask[v]) txvars.push_back(v);
    std::vector<Monomial> eta = state_basis(c.p, c.state_mask);
    if (eta.empty()) continue;  // p must vanish identically; coefficient rows enforce it

    struct W {
      int kind;
      Poly poly;
    };
    std::vector<W> weights{{0, Poly(ring, 1.0)}};
    Poly X = xvar >= 0 ? Poly::variable(ring, "x") : Poly(ring);
    Poly T = tvar >= 0 ? Poly::variable(ring, "t") : Poly(ring);
    if (c.x_interval && xvar >= 0 && txmask[xvar]) {
      auto [a, b] = *c.x_interval;
      weights.push_back({1, mul(X - Poly(ring, a), Poly(ring, b) - X)});
    }
    if (c.t_window && tvar >= 0 && txmask[tvar]) {
      auto [a, b] = *c.t_window;
      weights.push_back({2, mul(T - Poly(ring, a), Poly(ring, b) - T)});
    }
    const int d0 = (D + 1) / 2;
    for (const auto& w : weights) {
      int dz = w.kind == 0 ? d0 : d0 - 1;
      if (w.kind != 0 && D < 1) continue;
      std::vector<Monomial> z = monomial_exponents(ring, txvars, std::max(dz, 0));
      GramBlock g;
      g.constraint = ci;
      g.weight = w.kind;
      g.weight_poly = w.poly;
      for (const auto& e : eta)
        for (const auto& zz : z) g.basis.push_back(monomial_product(e, zz));
      g.eta = eta;
      g.z = z;
      g.sdp_block = sdp.add_block(static_cast<int>(g.basis.size()), BlockKind::Psd);
      out.total_gram_dim += static_cast<int>(g.basis.size());
      out.grams.push_back(std::move(g));
    }
  }

  auto add_decision_terms = [&](int row, const AffineExpr& e, double sign) {
    for (const auto& [id, a] : e.terms()) {
      auto [blk, idx] = out.slot[id];
      sdp.A[row].push_back({blk, idx, idx, sign * a});
    }
  };

  // Coefficient matching per constraint.
  std::size_t gi = 0;
  for (int ci = 0; ci < static_cast<int>(prog.constraints.size()); ++ci) {
    const SosConstraint& c = prog.constraints[ci];
    std::map<Monomial, int, GradedLexLess> rows;
    auto row_of = [&](const Monomial& m) {
      auto it = rows.find(m);
      if (it != rows.end()) return it->second;
      int r = sdp.add_constraint(0.0);
      rows.emplace(m, r);
      return r;
    };
    for (const auto& [m, coef] : c.p.terms()) {
      int r = row_of(m);
      sdp.b[r] = -coef.constant();
      add_decision_terms(r, coef, 1.0);
    }
    for (; gi < out.grams.size() && out.grams[gi].constraint == ci; ++gi) {
      const GramBlock& g = out.grams[gi];
      const int n = static_cast<int>(g.basis.size());
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          Monomial bij = monomial_product(g.basis[i], g.basis[j]);
          for (const auto& [wm, wc] : g.weight_poly.terms()) {
            int r = row_of(monomial_product(bij, wm));
            sdp.A[r].push_back({g.sdp_block, i, j, -wc});
            if (i == j && c.shift != 0.0) sdp.b[r] -= c.shift * wc;
          }
        }
    }
  }
  for (const auto& e : prog.equalities) {
    int r = sdp.add_constraint(-e.constant());
    add_decision_terms(r, e, 1.0);
  }
  if (prog.normalize_trace && !out.grams.empty()) {
    double budget = prog.trace_budget > 0 ? prog.trace_budget : static_cast<double>(out.total_gram_dim);
    int r = sdp.add_constraint(budget);
    for (const auto& g : out.grams)
      for (int i = 0; i < static_cast<int>(g.basis.size()); ++i) sdp.A[r].push_back({g.sdp_block, i, i, 1.0});
    sdp.A[r].push_back({non_block, trace_slack, trace_slack, 1.0});
  } else if (trace_slack >= 0) {
    int r = sdp.add_constraint(0.0);
    sdp.A[r].push_back({non_block, trace_slack, trace_slack, 1.0});
  }
  for (const auto& [id, a] : prog.objective.terms()) {
    auto [blk, idx] = out.slot[id];
    sdp.C.push_back({blk, idx, idx, -a});
  }
  // Merge duplicate entries so every (block,row,col) appears once per matrix.
  auto merge = [](std::vector<SdpEntry<double>>& v) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
      return std::tie(a.block, a.row, a.col) < std::tie(b.block, b.row, b.col);
    });
    std::vector<SdpEntry<double>> r;
    for (const auto& e : v) {
      if (!r.empty() && r.back().block == e.block && r.back().row == e.row && r.back().col == e.col)
        r.back().value += e.value;
      else
        r.push_back(e);
    }
    r.erase(std::remove_if(r.begin(), r.end(), [](const auto& e) { return e.value == 0.0; }), r.end());
    v = std::move(r);
  };
  for (auto& a : sdp.A) merge(a);
  merge(sdp.C);
  sdp.validate();
  return out;
}

namespace {

// Minimum-norm change of the psd and free entries that makes every equality
// hold to rounding.  Interior-point iterates stall with small residuals once
// the scaling matrices become ill conditioned; the identities the
// certificates rest on should be exact.
void polish(const SdpProblem<double>& p, SdpSolution<double>& sol) {
  const int m = p.num_constraints();
  std::map<std::tuple<int, int, int>, int> var;
  std::vector<std::tuple<int, int, int>> where;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd r(m);
  for (int i = 0; i < m; ++i) {
    double ax = 0.0;
    for (const auto& e : p.A[i]) {
      const BlockKind kind = p.blocks[e.block].kind;
      const int lo = std::min(e.row, e.col), hi = std::max(e.row, e.col);
      const double w = kind == BlockKind::Psd && lo != hi ? 2.0 : 1.0;
      const double x = kind == BlockKind::Psd ? sol.X[e.block](lo, hi) : sol.X[e.block](e.row, 0);
      ax += w * e.value * x;
      if (kind == BlockKind::Nonneg) continue;
      auto key = std::make_tuple(e.block, lo, hi);
      auto [it, fresh] = var.emplace(key, static_cast<int>(where.size()));
      if (fresh) where.push_back(key);
      trip.emplace_back(i, it->second, w * e.value);
    }
    r(i) = p.b[i] - ax;
  }
  if (where.empty() || !r.allFinite()) return;
  Eigen::SparseMatrix<double> A(m, static_cast<int>(where.size()));
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseMatrix<double> M = A * A.transpose();
  double diag = 0.0;
  for (int i = 0; i < m; ++i) diag = std::max(diag, M.coeff(i, i));
  for (int i = 0; i < m; ++i) M.coeffRef(i, i) += 1e-13 * std::max(diag, 1.0);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(M);
  if (ldlt.info() != Eigen::Success) return;
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(A.cols());
  Eigen::VectorXd res = r;
  for (int pass = 0; pass < 3; ++pass) {
    Eigen::VectorXd lam = ldlt.solve(res);
    if (!lam.allFinite()) return;
    delta += A.transpose() * lam;
    res = r - A * delta;
  }
  if (res.norm() > r.norm()) return;
  for (std::size_t v = 0; v < where.size(); ++v) {
    auto [blk, lo, hi] = where[v];
    if (p.blocks[blk].kind == BlockKind::Psd) {
      sol.X[blk](lo, hi) += delta(v);
      if (lo != hi) sol.X[blk](hi, lo) += delta(v);
    } else {
      sol.X[blk](lo, 0) += delta(v);
    }
  }
}

}  // namespace

SosResult solve_sos(const SosProgram& prog, const SdpOptions<double>& opt, SosSdp* built) {
  SosSdp local;
  SosSdp& s = built ? *built : local;
  s = sos_to_sdp(prog);
  SosResult r;
  r.raw = solve(s.sdp, opt);
  if (r.raw.status == SdpStatus::Optimal || r.raw.status == SdpStatus::SlowProgress) polish(s.sdp, r.raw);
  r.status = r.raw.status;
  r.iterations = r.raw.iterations;
  r.z.assign(prog.vars.size(), 0.0);
  for (int id = 0; id < prog.vars.size(); ++id) {
    auto [blk, idx] = s.slot[id];
    if (blk >= 0 && blk < static_cast<int>(r.raw.X.size())) r.z[id] = r.raw.X[blk](idx, 0);
  }
  r.objective = prog.objective.value(r.z);
  for (const auto& g : s.grams) r.grams.push_back(r.raw.X[g.sdp_block]);
  return r;
}

Poly gram_polynomial(const SosSdp& s, const SosResult& r, int constraint, const RingPtr& ring) {
  Poly out(ring);
  for (std::size_t k = 0; k < s.grams.size(); ++k) {
    const GramBlock& g = s.grams[k];
    if (g.constraint != constraint) continue;
    const int n = static_cast<int>(g.basis.size());
    Poly q(ring);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        q.add_term(monomial_product(g.basis[i], g.basis[j]), (i == j ? 1.0 : 2.0) * r.grams[k](i, j));
    out += mul(q, g.weight_poly);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Assembly of the avoidance programs

namespace {

// Moves every jet and boundary value of field `from` to field `to`.
template <typename C>
Polynomial<C> rename_field(const Polynomial<C>& p, const JetSpace& js, int from, int to) {
  const int n = p.ring()->size();
  std::vector<int> map(n);
  for (int v = 0; v < n; ++v) {
    map[v] = v;
    if (auto j = js.jet_of(v); j && j->first == from) map[v] = js.jet(to, j->second);
    if (auto b = js.boundary_of(v); b && b->first == from)
      map[v] = js.boundary(to, b->second, js.boundary_point(v));
  }
  Polynomial<C> r(p.ring());
  for (const auto& [m, c] : p.terms()) {
    Monomial d(n);
    for (int v = 0; v < n; ++v)
      if (m[v]) d.set(map[v], d[map[v]] + m[v]);
    r.add_term(d, c);
  }
  return r;
}

std::vector<int> jet_vars(const JetSpace& js, int field, int max_order) {
  std::vector<int> v;
  for (int k = 0; k <= std::min(max_order, js.max_order(field)); ++k) v.push_back(js.jet(field, k));
  return v;
}

int field_order(const AffinePoly& p, const JetSpace& js, int field) {
  int k = -1;
  for (int o = 0; o <= js.max_order(field); ++o)
    if (p.degree_in(js.jet(field, o)) > 0) k = o;
  return k;
}

std::vector<bool> mask_of(const JetSpace& js, const std::vector<int>& vars) {
  std::vector<bool> m(js.ring()->size(), false);
  for (int v : vars) m[v] = true;
  return m;
}

// Slack S = sum over state monomials mu of unknown (t,x) coefficients, added
// as the identity int D_x S - [S] = 0.
void add_generic_slack(AffineForm& form, int piece, const std::vector<int>& state_vars, int state_degree,
                       const std::vector<int>& txvars, int tx_degree, DecisionSpace& ds, const JetSpace& js,
                       const std::string& label) {
  const RingPtr& ring = js.ring();
  AffinePoly S(ring);
  for (const Monomial& mu : monomial_exponents(ring, state_vars, state_degree)) {
    Poly f(ring);
    f.add_term(mu, 1.0);
    S += unknown_poly(ds, ring, txvars, tx_degree, label + "{" + monomial_string(*ring, mu) + "}", f);
  }
  add_ibp_slack(form, piece, S, js);
}

// The pieces cover [0,1], so a scalar c equals the integral of c over every piece.
void fold_scalar(AffineForm& f) {
  for (auto& b : f.bulk) b += f.scalar;
  f.scalar = AffinePoly(f.scalar.ring());
}

AffineForm negate(AffineForm f) {
  for (auto& b : f.bulk) b = -b;
  f.boundary = -f.boundary;
  f.scalar = -f.scalar;
  return f;
}

}  // namespace

Assembly assemble_avoidance(const AvoidSpec& spec) {
  const bool fwd = spec.mode != AvoidMode::Backward;
  const bool timefree = spec.mode == AvoidMode::ForwardAllTime;
  if (fwd != (spec.kind == TimeKind::Forward))
    throw std::invalid_argument("assemble_avoidance: mode does not match the time orientation of the dynamics");
  const int J = spec.jet_order;
  const int K = J + spec.rhs_order + 1;
  std::vector<Field> fields{state_field("u", K)};
  if (fwd) fields.push_back(state_field("w", K));
  fields.push_back(aux_field(1));
  if (fwd) fields.push_back(aux_field(2));
  Assembly A(JetSpace(fields, spec.breaks));
  const JetSpace& js = A.js;
  const RingPtr& ring = js.ring();
  const int U = 0, Wf = fwd ? 1 : -1, V1 = fwd ? 2 : 1, V2 = fwd ? 3 : -1;
  const int npieces = static_cast<int>(js.points().size()) - 1;
  const int kd = spec.kernel_degree;
  const int md = spec.multiplier_degree >= 0 ? spec.multiplier_degree : kd;
  const int sd = spec.slack_degree >= 0 ? spec.slack_degree : kd;
  std::vector<int> tx = timefree ? std::vector<int>{js.x()} : std::vector<int>{js.t(), js.x()};
  DecisionSpace& ds = A.prog.vars;
  A.prog.ring = ring;

  A.dyn.kind = spec.kind;
  A.dyn.field = U;
  A.dyn.rhs = parse_poly(spec.rhs, ring);
  if (timefree && A.dyn.rhs.degree_in(js.t()) > 0)
    throw std::invalid_argument("time-free barrier needs autonomous dynamics");
  for (const auto& [name, value] : spec.bcs) {
    int v = ring->index(name);
    if (!js.is_boundary(v) || js.boundary_of(v)->first != U)
      throw std::invalid_argument("boundary condition on non-boundary variable " + name);
    A.dyn.bcs.push_back(BoundaryRelation{{{v, 1.0}}, parse_poly(value, ring)});
  }
  A.state_bcs = A.dyn.bcs;
  if (fwd)
    for (const auto& r : A.dyn.bcs) {
      BoundaryRelation c = r;
      auto b = js.boundary_of(c.coeffs[0].first);
      c.coeffs[0].first = js.boundary(Wf, b->second, js.boundary_point(c.coeffs[0].first));
      A.state_bcs.push_back(c);
    }
  auto derived = derived_relations(A.dyn, js);

  // Barrier kernel: sum over products of zeta entries.
  std::vector<Monomial> zeta = monomial_exponents(ring, jet_vars(js, U, J), spec.zeta_degree);
  std::set<Monomial, GradedLexLess> products;
  for (const auto& a : zeta)
    for (const auto& b : zeta) products.insert(monomial_product(a, b));
  const bool frozen = !spec.frozen_kernel.empty();
  if (frozen && static_cast<int>(spec.frozen_kernel.size()) != npieces)
    throw std::invalid_argument("frozen kernel count must equal the number of pieces");
  for (int p = 0; p < npieces && frozen; ++p) A.kernel.push_back(lift(change_ring(spec.frozen_kernel[p], ring)));
  for (int p = 0; p < npieces && !frozen; ++p) {
    AffinePoly k(ring);
    for (const auto& mu : products) {
      Poly f(ring);
      f.add_term(mu, 1.0);
      k += unknown_poly(ds, ring, tx, kd, "B" + std::to_string(p) + "{" + monomial_string(*ring, mu) + "}", f);
    }
    A.kernel.push_back(std::move(k));
  }
  A.margin = ds.add(DecisionKind::Free, "margin");
  A.prog.objective = AffineExpr::var(A.margin);
  if (frozen) {
    // s + r = cap with r >= 0 keeps the fixed-barrier problem bounded.
    A.prog.normalize_trace = false;
    int r = ds.add(DecisionKind::Nonneg, "margin.cap");
    A.prog.equalities.push_back(AffineExpr::var(A.margin) + AffineExpr::var(r) - AffineExpr(spec.margin_cap));
  }

  std::optional<std::pair<double, double>> window;
  if (!timefree) window = spec.mode == AvoidMode::Backward ? std::pair{spec.t0, 1.0} : std::pair{0.0, 1.0};

  // Monotonicity: dB/dt >= 0 (backward) or -dB/dt >= 0 (forward).
  {
    AffineForm B(ring, js.points());
    B.bulk = A.kernel;
    AffineForm F = lie_derivative(B, A.dyn, js);
    if (fwd) F = negate(F);
    IbpReport rep;
    F = integrate_by_parts(F, J + 1, js, &rep);
    F = apply_bcs(F, derived, js);
    for (int p = 0; p < npieces; ++p) {
      int top = std::max(field_order(F.bulk[p], js, U), 1);
      int jd = F.bulk[p].degree_in(mask_of(js, jet_vars(js, U, K)));
      add_generic_slack(F, p, jet_vars(js, U, top - 1), 2 * (jd / 2), tx, sd, ds, js, "S" + std::to_string(p));
    }
    F = apply_bcs(F, derived, js);
    fold_scalar(F);
    for (int p = 0; p < npieces; ++p)
      A.prog.constraints.push_back(SosConstraint{"monotone." + std::to_string(p), F.bulk[p], js.jet_mask(),
                                                 std::pair{F.breaks[p], F.breaks[p + 1]}, window, spec.shift});
    A.prog.constraints.push_back(
        SosConstraint{"monotone.boundary", F.boundary + F.scalar, js.boundary_mask(), std::nullopt, window, spec.shift});
  }

  // Gap inequality with multipliers for the set constraints.
  {
    AffineForm G(ring, js.points());
    for (int p = 0; p < npieces; ++p) {
      const AffinePoly& k = A.kernel[p];
      if (spec.mode == AvoidMode::Backward)
        G.bulk[p] = substitute(k, js.t(), spec.t0);
      else if (spec.mode == AvoidMode::ForwardAt)
        G.bulk[p] = substitute(k, js.t(), 1.0) - rename_field(substitute(k, js.t(), 0.0), js, U, Wf);
      else
        G.bulk[p] = k - rename_field(k, js, U, Wf);
    }
    if (spec.mode == AvoidMode::Backward) {
      // B(1, f) for the known terminal profile.
      Poly f = parse_poly(spec.terminal, ring);
      std::vector<Poly> df{f};
      for (int k = 1; k <= K; ++k) df.push_back(diff(df.back(), js.x()));
      AffineExpr bt;
      for (int p = 0; p < npieces; ++p) {
        AffinePoly q = substitute(A.kernel[p], js.t(), 1.0);
        for (int k = 0; k <= K; ++k)
          if (q.degree_in(js.jet(U, k)) > 0) q = substitute(q, js.jet(U, k), df[k]);
        AffinePoly I = integrate(q, js.x(), js.points()[p], js.points()[p + 1]);
        if (I.degree() > 0) throw std::logic_error("terminal value did not reduce to a constant");
        bt += I.constant_term();
      }
      G.scalar -= AffinePoly(ring, bt);
    }
    G.scalar -= AffinePoly(ring, AffineExpr::var(A.margin));

    auto parse_set = [&](const std::vector<std::string>& g, int field) {
      if (static_cast<int>(g.size()) != npieces)
        throw std::invalid_argument("set integrand count must equal the number of pieces");
      IntegralSet s;
      s.field = field;
      for (const auto& e : g) {
        Poly q = parse_poly(e, ring);
        s.g.push_back(field == U ? q : rename_field(q, js, U, field));
      }
      return s;
    };
    std::vector<IntegralSet> sets{parse_set(spec.unsafe, U)};
    std::vector<int> aux{V1};
    if (fwd) {
      sets.push_back(parse_set(spec.initial, Wf));
      aux.push_back(V2);
    }
    std::vector<BoundaryRelation> gap_bcs = A.state_bcs;
    A.multipliers = attach_multipliers(G, sets, aux, ds, md, js, &gap_bcs);
    G = apply_bcs(G, gap_bcs, js);
    std::vector<int> gap_state = jet_vars(js, U, J - 1);
    if (fwd)
      for (int v : jet_vars(js, Wf, J - 1)) gap_state.push_back(v);
    gap_state.push_back(js.jet(V1, 0));
    if (fwd) gap_state.push_back(js.jet(V2, 0));
    for (int p = 0; p < npieces; ++p) {
      int jd = G.bulk[p].degree_in(js.jet_mask());
      add_generic_slack(G, p, gap_state, 2 * (jd / 2), {js.x()}, sd, ds, js, "T" + std::to_string(p));
    }
    G = apply_bcs(G, gap_bcs, js);
    fold_scalar(G);
    for (int p = 0; p < npieces; ++p)
      A.prog.constraints.push_back(SosConstraint{"gap." + std::to_string(p), G.bulk[p], js.jet_mask(),
                                                 std::pair{G.breaks[p], G.breaks[p + 1]}, std::nullopt, spec.shift});
    A.prog.constraints.push_back(
        SosConstraint{"gap.boundary", G.boundary + G.scalar, js.boundary_mask(), std::nullopt, std::nullopt, spec.shift});
  }
  return A;
}

}  // namespace barrier
