#include "barrier/certcheck.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "barrier/parser.hpp"
#include "sections.hpp"

namespace barrier {

using namespace detail;

namespace {

constexpr int kMaxJet = 4;

AvoidMode parse_mode(const Entry& e) {
  if (e.value == "backward") return AvoidMode::Backward;
  if (e.value == "forward_at") return AvoidMode::ForwardAt;
  if (e.value == "forward_all_time") return AvoidMode::ForwardAllTime;
  throw ParseError("unknown mode '" + e.value + "'", e.value_pos);
}

const char* mode_name(AvoidMode m) {
  switch (m) {
    case AvoidMode::Backward:
      return "backward";
    case AvoidMode::ForwardAt:
      return "forward_at";
    case AvoidMode::ForwardAllTime:
      return "forward_all_time";
  }
  return "?";
}

bool parse_units(const Entry& e) {
  if (e.value == "physical") return true;
  if (e.value == "normalized") return false;
  throw ParseError("units must be physical or normalized", e.value_pos);
}

SdpStatus parse_status(const Entry& e) {
  for (SdpStatus s : {SdpStatus::Optimal, SdpStatus::PrimalInfeasible, SdpStatus::DualInfeasible, SdpStatus::SlowProgress})
    if (e.value == to_string(s)) return s;
  throw ParseError("unknown status '" + e.value + "'", e.value_pos);
}

int top_jet(const Poly& p) {
  int top = -1;
  for (int k = 0; k <= kMaxJet; ++k)
    if (p.degree_in(2 + k) > 0) top = k;
  return top;
}

int state_degree(const Poly& p) {
  std::vector<bool> mask(p.ring()->size(), true);
  mask[0] = mask[1] = false;
  return p.degree_in(mask);
}

int tx_degree(const Poly& p) {
  std::vector<bool> mask(p.ring()->size(), false);
  mask[0] = mask[1] = true;
  return p.degree_in(mask);
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

Certificate load_certificate(const std::string& text) {
  std::vector<Section> secs = read_sections(text);
  if (secs.empty()) throw ParseError("empty certificate", 0);
  if (secs.front().name != "certificate") throw ParseError("expected [certificate] first", secs.front().pos);

  Certificate c;
  std::string tname = "t", xname = "x";
  double scale = 1.0;
  bool have_mode = false;
  int jet = -1, zeta = -1, kdeg = -1;
  for (const Entry& e : secs.front().entries) {
    if (e.key == "mode") {
      c.mode = parse_mode(e);
      have_mode = true;
    } else if (e.key == "vars") {
      auto v = split_list(e.value);
      if (v.size() != 2 || v[0].empty() || v[1].empty() || v[0] == v[1])
        throw ParseError("vars needs two distinct names (time, space)", e.value_pos);
      tname = v[0];
      xname = v[1];
    } else if (e.key == "time") {
      c.physical_time = parse_units(e);
    } else if (e.key == "space") {
      c.physical_space = parse_units(e);
    } else if (e.key == "value") {
      c.physical_value = parse_units(e);
    } else if (e.key == "scale") {
      scale = to_number(e);
    } else if (e.key == "gamma") {
      c.gamma = to_number(e);
    } else if (e.key == "parameter") {
      std::stringstream ss(e.value);
      std::string name, rest;
      ss >> name;
      std::getline(ss, rest);
      if (name.empty() || trim(rest).empty()) throw ParseError("parameter needs a name and a value", e.value_pos);
      c.parameter_name = name;
      Entry v{e.key, trim(rest), e.key_pos, e.value_pos + e.value.find(trim(rest)), {}};
      c.parameter = to_number(v);
    } else if (e.key == "breaks") {
      for (const auto& b : split_list(e.value)) c.breaks.push_back(to_number(Entry{e.key, b, e.key_pos, e.value_pos, {}}));
    } else if (e.key == "jet_order") {
      jet = to_int(e);
    } else if (e.key == "zeta_degree") {
      zeta = to_int(e);
    } else if (e.key == "kernel_degree") {
      kdeg = to_int(e);
    } else if (e.key == "multiplier_degree") {
      c.degrees.multiplier = to_int(e);
    } else if (e.key == "slack_degree") {
      c.degrees.slack = to_int(e);
    } else if (e.key == "margin") {
      c.margin = to_number(e);
    } else if (e.key == "status") {
      c.status = parse_status(e);
    } else if (e.key == "iterations") {
      c.iterations = to_int(e);
    } else {
      throw ParseError("unknown key '" + e.key + "'", e.key_pos);
    }
  }
  if (!have_mode) throw ParseError("missing mode", secs.front().pos);

  std::vector<std::string> names{tname, xname};
  for (int k = 0; k <= kMaxJet; ++k) names.push_back("u" + std::to_string(k));
  RingPtr pr = make_ring(names);
  RingPtr kr = kernel_ring(kMaxJet);
  auto poly = [&](const Entry& e) {
    try {
      Poly q = parse_poly(e.value, pr);
      Poly r(kr);
      for (const auto& [m, v] : q.terms()) r.add_term(m, v * scale);
      return r;
    } catch (const ParseError& pe) {
      std::string what = pe.what();
      auto cut = what.rfind(" at position");
      throw ParseError("in '" + e.key + "': " + what.substr(0, cut), e.at(pe.position()));
    } catch (const std::exception& ex) {
      throw ParseError("in '" + e.key + "': " + ex.what(), e.value_pos);
    }
  };

  std::vector<std::pair<int, Poly>> kernels;
  std::vector<std::pair<int, PolyMatrix>> matrices;
  std::vector<std::string> basis;
  std::map<int, std::map<int, Poly>> mult;
  std::map<int, double> nvals;
  for (std::size_t si = 1; si < secs.size(); ++si) {
    const Section& s = secs[si];
    const int idx = s.index < 0 ? 0 : s.index;
    if (s.name == "kernel") {
      for (const auto& [k, q] : kernels)
        if (k == idx) throw ParseError("duplicate kernel section", s.pos);
      const Entry* b = nullptr;
      const Entry* bas = nullptr;
      for (const Entry& e : s.entries) {
        if (e.key == "b") b = &e;
        else if (e.key == "basis") bas = &e;
      }
      if (b && bas) throw ParseError("kernel has both b and basis", s.pos);
      if (b) {
        if (s.entries.size() != 1) throw ParseError("unexpected entry next to b", s.entries[b == &s.entries[0] ? 1 : 0].key_pos);
        kernels.emplace_back(idx, poly(*b));
        continue;
      }
      if (!bas) throw ParseError("kernel needs b or basis", s.pos);
      std::vector<std::string> bnames = split_list(bas->value);
      for (const auto& n : bnames) {
        if (n.size() < 2 || n[0] != 'u' || kr->find(n) < 0)
          throw ParseError("basis entries must be jets u0..u" + std::to_string(kMaxJet), bas->value_pos);
      }
      if (!basis.empty() && basis != bnames) throw ParseError("all kernels must share one basis", bas->value_pos);
      basis = bnames;
      const int dim = static_cast<int>(bnames.size());
      PolyMatrix M(dim, kr);
      Poly bulk(kr);
      for (const Entry& e : s.entries) {
        if (&e == bas) continue;
        int i = -1, j = -1;
        if (e.key.size() == 3 && e.key[0] == 'M' && std::isdigit(e.key[1]) && std::isdigit(e.key[2])) {
          i = e.key[1] - '1';
          j = e.key[2] - '1';
        }
        if (i < 0 || j < 0 || i >= dim || j >= dim) throw ParseError("unknown matrix entry '" + e.key + "'", e.key_pos);
        M(i, j) = poly(e);
      }
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
          bulk += mul(mul(M(i, j), Poly::variable(kr, bnames[i])), Poly::variable(kr, bnames[j]));
      kernels.emplace_back(idx, bulk);
      matrices.emplace_back(idx, M);
    } else if (s.name == "multiplier") {
      for (const Entry& e : s.entries) {
        if (e.key == "n") {
          nvals[idx] = to_number(e);
        } else if (e.key.size() > 1 && e.key[0] == 'm' && std::all_of(e.key.begin() + 1, e.key.end(), ::isdigit)) {
          mult[idx][std::stoi(e.key.substr(1))] = poly(e);
        } else {
          throw ParseError("unknown multiplier entry '" + e.key + "'", e.key_pos);
        }
      }
    } else {
      throw ParseError("unknown section '" + s.name + "'", s.pos);
    }
  }
  if (kernels.empty()) throw ParseError("no kernel section", text.size());
  std::sort(kernels.begin(), kernels.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::sort(matrices.begin(), matrices.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < kernels.size(); ++i)
    if (kernels[i].first != static_cast<int>(i)) throw ParseError("kernel sections must be numbered 0..n-1", 0);

  int used = 0, sdeg = 0, tdeg = 0;
  for (const auto& [k, q] : kernels) {
    used = std::max(used, top_jet(q));
    sdeg = std::max(sdeg, state_degree(q));
    tdeg = std::max(tdeg, tx_degree(q));
  }
  if (jet >= 0 && jet < used) throw ParseError("jet_order is lower than the jets the kernel uses", 0);
  c.degrees.jet_order = std::max(jet, used);
  c.degrees.zeta = zeta >= 0 ? zeta : std::max(1, (sdeg + 1) / 2);
  c.degrees.kernel = kdeg >= 0 ? kdeg : tdeg;
  RingPtr out = kernel_ring(c.degrees.jet_order);
  for (const auto& [k, q] : kernels) c.kernel.push_back(change_ring(q, out));
  if (!matrices.empty()) {
    c.basis = basis;
    for (auto& [k, M] : matrices) {
      PolyMatrix R(M.dim(), out);
      for (int i = 0; i < M.dim(); ++i)
        for (int j = i; j < M.dim(); ++j) R(i, j) = change_ring(M(i, j), out);
      c.matrix.push_back(std::move(R));
    }
  }
  for (const auto& [set, per] : mult) {
    if (set != static_cast<int>(c.multipliers.size())) throw ParseError("multiplier sections must be numbered 0..n-1", 0);
    std::vector<Poly> v;
    for (const auto& [piece, q] : per) {
      if (piece != static_cast<int>(v.size())) throw ParseError("multiplier pieces must be numbered m0..", 0);
      v.push_back(change_ring(q, out));
    }
    c.multipliers.push_back(std::move(v));
    c.n.push_back(nvals.count(set) ? nvals[set] : 0.0);
  }
  return c;
}

std::string write_certificate(const Certificate& c) {
  std::ostringstream os;
  os << "[certificate]\n";
  os << "mode = " << mode_name(c.mode) << "\n";
  os << "vars = t, x\n";
  os << "time = " << (c.physical_time ? "physical" : "normalized") << "\n";
  os << "space = " << (c.physical_space ? "physical" : "normalized") << "\n";
  os << "value = " << (c.physical_value ? "physical" : "normalized") << "\n";
  os << "# scaling: x_phys = " << num(c.scaling.lo) << " + " << num(c.scaling.length) << " * x, t_phys = "
     << num(c.scaling.time) << " * t, u_phys = " << num(c.scaling.value) << " * u\n";
  if (c.gamma) os << "gamma = " << num(*c.gamma) << "\n";
  if (c.parameter) os << "parameter = " << (c.parameter_name.empty() ? "lambda" : c.parameter_name) << " " << num(*c.parameter) << "\n";
  if (!c.breaks.empty()) {
    os << "breaks = ";
    for (std::size_t i = 0; i < c.breaks.size(); ++i) os << (i ? ", " : "") << num(c.breaks[i]);
    os << "\n";
  }
  os << "jet_order = " << c.degrees.jet_order << "\n";
  os << "zeta_degree = " << c.degrees.zeta << "\n";
  os << "kernel_degree = " << c.degrees.kernel << "\n";
  if (c.degrees.multiplier >= 0) os << "multiplier_degree = " << c.degrees.multiplier << "\n";
  if (c.degrees.slack >= 0) os << "slack_degree = " << c.degrees.slack << "\n";
  os << "margin = " << num(c.margin) << "\n";
  os << "status = " << to_string(c.status) << "\n";
  os << "iterations = " << c.iterations << "\n";
  for (std::size_t k = 0; k < c.kernel.size(); ++k) {
    os << "\n[kernel " << k << "]\n";
    if (!c.matrix.empty() && k < c.matrix.size()) {
      os << "basis = ";
      for (std::size_t i = 0; i < c.basis.size(); ++i) os << (i ? ", " : "") << c.basis[i];
      os << "\n";
      const PolyMatrix& M = c.matrix[k];
      for (int i = 0; i < M.dim(); ++i)
        for (int j = i; j < M.dim(); ++j) os << "M" << i + 1 << j + 1 << " = " << to_string(M(i, j), 17) << "\n";
    } else {
      os << "b = " << to_string(c.kernel[k], 17) << "\n";
    }
  }
  for (std::size_t s = 0; s < c.multipliers.size(); ++s) {
    os << "\n[multiplier " << s << "]\n";
    for (std::size_t p = 0; p < c.multipliers[s].size(); ++p)
      os << "m" << p << " = " << to_string(c.multipliers[s][p], 17) << "\n";
    if (s < c.n.size()) os << "n = " << num(c.n[s]) << "\n";
  }
  return os.str();
}

namespace {

int piece_count(const ProblemSpec& p, const Certificate& c) {
  return static_cast<int>(normalized_spec(p, c.degrees, c.gamma.value_or(0.0)).breaks.size()) + 1;
}

}  // namespace

std::vector<Poly> normalized_kernel(const Certificate& c, const ProblemSpec& p) {
  if (c.kernel.empty()) throw std::invalid_argument("certificate has no kernel");
  const int pieces = piece_count(p, c);
  std::vector<Poly> ks = c.kernel;
  if (ks.size() == 1 && pieces > 1) ks.assign(pieces, c.kernel[0]);
  if (static_cast<int>(ks.size()) != pieces)
    throw std::invalid_argument("certificate has " + std::to_string(c.kernel.size()) + " kernels but the problem has " +
                                std::to_string(pieces) + " pieces");
  const Scaling s = scaling_of(p);
  for (Poly& q : ks) {
    const RingPtr& r = q.ring();
    if (c.physical_space) {
      q = substitute(q, 1, Poly::variable(r, "x") * s.length + Poly(r, s.lo));
      q = q * s.length;  // d(theta) = length dx
    }
    if (c.physical_time) q = substitute(q, 0, Poly::variable(r, "t") * s.time);
    for (int k = 0; k + 2 < r->size(); ++k) {
      double f = (c.physical_value ? s.value : 1.0) / (c.physical_space ? std::pow(s.length, k) : 1.0);
      if (f != 1.0 && q.degree_in(2 + k) > 0) q = substitute(q, 2 + k, Poly::variable(r, r->name(2 + k)) * f);
    }
  }
  return ks;
}

namespace {

// Dense evaluator for polynomials in t and x only.
struct TxPoly {
  std::vector<std::pair<int, int>> e;
  std::vector<double> c;

  TxPoly() = default;
  TxPoly(const Poly& p, int tv, int xv) {
    for (const auto& [m, v] : p.terms()) {
      e.emplace_back(tv >= 0 ? m[tv] : 0, xv >= 0 ? m[xv] : 0);
      c.push_back(v);
    }
  }
  double operator()(const std::vector<double>& tp, const std::vector<double>& xp) const {
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * tp[e[i].first] * xp[e[i].second];
    return s;
  }
  int tdeg() const {
    int d = 0;
    for (auto [a, b] : e) d = std::max(d, a);
    return d;
  }
  int xdeg() const {
    int d = 0;
    for (auto [a, b] : e) d = std::max(d, b);
    return d;
  }
};

struct BlockEval {
  TxPoly weight;
  std::vector<TxPoly> z;
  Eigen::MatrixXd G;
};

struct ConstraintEval {
  int dim = 0;
  std::vector<TxPoly> D;  // upper triangle, row major
  std::vector<BlockEval> blocks;
  bool has_t = false, has_x = false;
  std::pair<double, double> tr{0.0, 1.0}, xr{0.0, 1.0};
  int maxdeg = 0;
};

struct PointMin {
  double value = std::numeric_limits<double>::infinity();
  double t = 0.0, x = 0.0;
};

PointMin scan(const ConstraintEval& ce, int n, int threads) {
  const int nt = ce.has_t ? n : 1, nx = ce.has_x ? n : 1;
  auto coord = [n](std::pair<double, double> r, int i) { return n > 1 ? r.first + (r.second - r.first) * i / (n - 1) : r.first; };
  auto row = [&](int it, PointMin& best) {
    std::vector<double> tp(ce.maxdeg + 1), xp(ce.maxdeg + 1);
    const double t = ce.has_t ? coord(ce.tr, it) : 0.0;
    tp[0] = 1.0;
    for (int k = 1; k <= ce.maxdeg; ++k) tp[k] = tp[k - 1] * t;
    Eigen::MatrixXd Q(ce.dim, ce.dim);
    for (int ix = 0; ix < nx; ++ix) {
      const double x = ce.has_x ? coord(ce.xr, ix) : 0.0;
      xp[0] = 1.0;
      for (int k = 1; k <= ce.maxdeg; ++k) xp[k] = xp[k - 1] * x;
      int s = 0;
      for (int i = 0; i < ce.dim; ++i)
        for (int j = i; j < ce.dim; ++j, ++s) Q(i, j) = Q(j, i) = ce.D[s](tp, xp);
      for (const auto& b : ce.blocks) {
        const double w = b.weight(tp, xp);
        const int nz = static_cast<int>(b.z.size());
        Eigen::VectorXd zv(nz);
        for (int k = 0; k < nz; ++k) zv[k] = b.z[k](tp, xp);
        for (int i = 0; i < ce.dim; ++i)
          for (int j = i; j < ce.dim; ++j) {
            double v = w * zv.dot(b.G.block(i * nz, j * nz, nz, nz) * zv);
            Q(i, j) += v;
            if (i != j) Q(j, i) += v;
          }
      }
      double lam = ce.dim == 1 ? Q(0, 0)
                               : Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q, Eigen::EigenvaluesOnly).eigenvalues()[0];
      if (lam < best.value) best = {lam, t, x};
    }
  };
  threads = std::max(1, std::min(threads, nt));
  std::vector<PointMin> part(threads);
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      for (int it = w; it < nt; it += threads) row(it, part[w]);
    });
  for (auto& th : pool) th.join();
  // Min reduction; ties resolved by the first worker for a stable report.
  PointMin best;
  for (const auto& p : part)
    if (p.value < best.value) best = p;
  return best;
}

}  // namespace

CheckReport check_certificate(const ProblemSpec& p, const Certificate& c, const CheckOptions& opt) {
  if (!(opt.tol >= 0)) throw std::invalid_argument("tolerance must be nonnegative");
  if (opt.grid < 2) throw std::invalid_argument("grid needs at least two points per axis");
  if (p.orientation == TimeKind::Backward && !c.gamma) throw std::invalid_argument("certificate for a backward problem needs gamma");

  CheckReport rep;
  Degrees d = c.degrees;
  AvoidSpec spec = normalized_spec(p, d, c.gamma.value_or(0.0));
  if (spec.mode != c.mode)
    throw std::invalid_argument(std::string("certificate mode ") + mode_name(c.mode) + " does not match the problem (" +
                                mode_name(spec.mode) + ")");
  std::vector<Poly> ks = normalized_kernel(c, p);
  for (const Poly& q : ks) rep.scale = std::max(rep.scale, max_abs_coeff(q));
  rep.degenerate = !(rep.scale > 0);
  const double scale = rep.degenerate ? 1.0 : rep.scale;

  // The inequalities are homogeneous in B, so the re-check runs on B / scale
  // and every margin below is relative.
  for (Poly& q : ks) q = q * (1.0 / scale);
  spec.frozen_kernel = ks;
  // Capping the margin a little above the pass threshold keeps the optimum
  // away from the boundary of the Gram cones.
  spec.margin_cap = 10.0 * std::max(opt.tol, 1e-6);
  Assembly A = assemble_avoidance(spec);

  // Per-constraint shift so that the relaxation moves the evaluated integrand
  // matrices by at most tol on [0,1]^2.
  SosSdp shape = sos_to_sdp(A.prog);
  for (std::size_t ci = 0; ci < A.prog.constraints.size(); ++ci) {
    double zz = 0.0;
    for (const auto& g : shape.grams)
      if (g.constraint == static_cast<int>(ci)) zz += (g.weight == 0 ? 1.0 : 0.25) * g.z.size();
    A.prog.constraints[ci].shift = zz > 0 ? 0.5 * opt.tol / zz : 0.0;
  }
  // Same trace budget as synthesis: keeps the Gram matrices bounded, which
  // the interior-point iterates need to converge on these degenerate faces.
  A.prog.normalize_trace = true;
  SosSdp built;
  SosResult res = solve_sos(A.prog, opt.sdp, &built);
  rep.sos_status = res.status;
  const double s = res.z.empty() ? 0.0 : res.z[A.margin];
  rep.sos_margin = s;
  const bool solved = res.status == SdpStatus::Optimal || res.status == SdpStatus::SlowProgress;
  // The relaxation alone can lift the gap margin by up to tol / 2.
  rep.sos_feasible = solved && std::isfinite(s) && rep.sos_margin > opt.tol;

  const RingPtr& ring = A.prog.ring;
  const int tv = ring->find("t"), xv = ring->find("x");
  const int threads = opt.threads > 0 ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  rep.grid_margin = std::numeric_limits<double>::infinity();
  const Scaling sc = scaling_of(p);
  for (std::size_t ci = 0; ci < A.prog.constraints.size(); ++ci) {
    const SosConstraint& con = A.prog.constraints[ci];
    InequalityReport ir;
    ir.label = con.label;
    std::vector<std::size_t> blocks;
    for (std::size_t k = 0; k < built.grams.size(); ++k)
      if (built.grams[k].constraint == static_cast<int>(ci)) blocks.push_back(k);
    Poly pe = res.z.empty() ? Poly(ring) : evaluate_decisions(con.p, res.z);
    if (blocks.empty()) {
      ir.min_eig = -max_abs_coeff(pe);
    } else {
      const auto& eta = built.grams[blocks[0]].eta;
      Poly gram = gram_polynomial(built, res, static_cast<int>(ci), ring);
      // Coefficients on state monomials outside eta x eta cannot be carried by
      // any Gram matrix; their size is charged against the margin.
      std::set<Monomial, GradedLexLess> pairs;
      for (const auto& a : eta)
        for (const auto& b : eta) pairs.insert(monomial_product(a, b));
      Poly rep_part(ring);
      double unmatched = 0.0;
      for (const auto& [key, part] : split_by(pe, con.state_mask)) {
        if (pairs.count(key)) {
          for (const auto& [m, v] : part.terms()) rep_part.add_term(monomial_product(m, key), v);
        } else {
          unmatched = std::max(unmatched, max_abs_coeff(part));
        }
      }
      QuadLike<double> E = to_quadlike(rep_part, eta, con.state_mask);
      QuadLike<double> S = to_quadlike(gram, eta, con.state_mask);
      {
        ConstraintEval ce;
        ce.dim = static_cast<int>(eta.size());
        for (int i = 0; i < ce.dim; ++i)
          for (int j = i; j < ce.dim; ++j) ce.D.emplace_back(E.Q(i, j) - S.Q(i, j), tv, xv);
        for (std::size_t k : blocks) {
          const GramBlock& g = built.grams[k];
          BlockEval be;
          be.weight = TxPoly(g.weight_poly, tv, xv);
          for (const auto& m : g.z) {
            Poly zm(ring);
            zm.add_term(m, 1.0);
            be.z.emplace_back(zm, tv, xv);
          }
          be.G = res.grams[k];
          ce.blocks.push_back(std::move(be));
        }
        for (const auto& q : ce.D) ce.maxdeg = std::max({ce.maxdeg, q.tdeg(), q.xdeg()});
        for (const auto& b : ce.blocks) {
          ce.maxdeg = std::max({ce.maxdeg, b.weight.tdeg(), b.weight.xdeg()});
          for (const auto& z : b.z) ce.maxdeg = std::max({ce.maxdeg, z.tdeg(), z.xdeg()});
        }
        ce.has_t = tv >= 0 && (con.t_window || con.p.degree_in(tv) > 0);
        ce.has_x = xv >= 0 && (con.x_interval || con.p.degree_in(xv) > 0);
        if (con.t_window) ce.tr = *con.t_window;
        if (con.x_interval) ce.xr = *con.x_interval;
        PointMin m = scan(ce, opt.grid, threads);
        ir.min_eig = m.value - unmatched;
        ir.has_t = ce.has_t;
        ir.has_x = ce.has_x;
        ir.t = m.t * sc.time;
        ir.x = sc.lo + sc.length * m.x;
      }
    }
    if (ir.min_eig < rep.grid_margin) {
      rep.grid_margin = ir.min_eig;
      rep.worst = ir.label;
    }
    rep.inequalities.push_back(std::move(ir));
  }

  if (rep.degenerate) {
    rep.reason = "zero barrier: the gap inequality cannot hold";
  } else if (!rep.sos_feasible) {
    rep.reason = std::string("fixed-barrier SOS re-check failed (") + to_string(res.status) + ", gap margin " +
                 num(rep.sos_margin) + ")";
  } else if (rep.grid_margin < -opt.tol) {
    rep.reason = "grid margin " + num(rep.grid_margin) + " below -" + num(opt.tol) + " at " + rep.worst;
  }
  rep.pass = rep.reason.empty();
  return rep;
}

std::string format_report(const CheckReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << "kernel scale " << r.scale << "\n";
  os << "sos re-check: " << to_string(r.sos_status) << ", gap margin " << r.sos_margin
     << (r.sos_feasible ? " (feasible)" : " (not feasible)") << "\n";
  for (const auto& q : r.inequalities) {
    os << "  " << q.label << ": min eigenvalue " << q.min_eig;
    if (q.has_t || q.has_x) {
      os << " at";
      if (q.has_t) os << " t = " << q.t;
      if (q.has_x) os << " x = " << q.x;
    }
    os << "\n";
  }
  os << "grid margin " << r.grid_margin << " (" << r.worst << ")\n";
  os << (r.pass ? "PASS" : "FAIL");
  if (!r.pass) os << ": " << r.reason;
  os << "\n";
  return os.str();
}

}  // namespace barrier
