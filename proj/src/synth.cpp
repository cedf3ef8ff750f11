#include "barrier/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <sstream>
#include <stdexcept>

namespace barrier {

namespace {

constexpr int kMaxJet = 4;

std::vector<std::string> jet_names(const std::string& prefix) {
  std::vector<std::string> v;
  for (int k = 0; k <= kMaxJet; ++k) v.push_back(prefix + std::to_string(k));
  return v;
}

RingPtr ring_with(const std::string& t, const std::string& x) {
  std::vector<std::string> names{t, x};
  for (auto& n : jet_names("u")) names.push_back(n);
  return make_ring(names);
}

// Same exponents in a ring with the same layout.
Poly relabel(const Poly& p, const RingPtr& to) {
  Poly r(to);
  for (const auto& [m, c] : p.terms()) r.add_term(m, c);
  return r;
}

std::string str(const Poly& p) { return to_string(p, 17); }

int jet_order_of(const Poly& p) {
  int top = 0;
  for (int k = 0; k <= kMaxJet; ++k)
    if (p.degree_in(2 + k) > 0) top = k;
  return top;
}

class Normalizer {
 public:
  Normalizer(const ProblemSpec& p, const Scaling& s) : p_(p), s_(s) {
    if (p.space == "t" || p.space.empty()) throw std::invalid_argument("space variable must be named and differ from t");
    phys_ = ring_with("t", p.space);
    norm_ = ring_with("t", "x");
  }

  Poly parse(const std::string& text) const { return relabel(parse_poly(text, phys_, p_.constants), norm_); }

  // Physical literal in normalized coordinates; jets rescale by length^-k.
  Poly convert(const std::string& text, double time_scale) const {
    Poly q = parse(text);
    Poly x = Poly::variable(norm_, "x") * s_.length + Poly(norm_, s_.lo);
    q = substitute(q, 1, x);
    q = substitute(q, 0, Poly::variable(norm_, "t") * time_scale);
    for (int k = 1; k <= kMaxJet; ++k)
      if (q.degree_in(2 + k) > 0) q = substitute(q, 2 + k, Poly::variable(norm_, "u" + std::to_string(k)) * std::pow(s_.length, -k));
    return q;
  }

  const RingPtr& ring() const { return norm_; }

 private:
  const ProblemSpec& p_;
  Scaling s_;
  RingPtr phys_, norm_;
};

double sample_max(const Normalizer& nz, const std::string& text, double time_scale) {
  Poly q = nz.convert(text, time_scale);
  double m = 0.0;
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 20; ++j) {
      std::vector<double> pt(q.ring()->size(), 0.0);
      pt[0] = i / 20.0;
      pt[1] = j / 20.0;
      m = std::max(m, std::abs(eval(q, pt)));
    }
  return m;
}

void check_problem(const ProblemSpec& p) {
  if (!(p.lo < p.hi) || !std::isfinite(p.lo) || !std::isfinite(p.hi))
    throw std::invalid_argument("domain endpoints must be finite with left < right");
  if (p.orientation == TimeKind::Backward) {
    if (!(p.horizon > 0)) throw std::invalid_argument("horizon must be positive");
    double t0 = p.t0.value_or(0.0);
    if (t0 < 0 || t0 > p.horizon) throw std::invalid_argument("query time must lie in [0, T]");
  } else {
    if (p.rhs.empty()) throw std::invalid_argument("forward problem needs a right-hand side");
    if (p.t0 && !(*p.t0 > 0)) throw std::invalid_argument("forward query time must be positive");
    if (p.initial_set.empty() || p.unsafe_set.empty())
      throw std::invalid_argument("forward problem needs initial and unsafe sets");
  }
  for (double b : p.breaks)
    if (!(b > p.lo && b < p.hi)) throw std::invalid_argument("breakpoints must lie inside the domain");
}

void say(const SynthOptions& opt, const std::string& s) {
  if (opt.log) opt.log(s);
}

}  // namespace

RingPtr kernel_ring(int order) {
  std::vector<std::string> names{"t", "x"};
  for (int k = 0; k <= order; ++k) names.push_back("u" + std::to_string(k));
  return make_ring(names);
}

Scaling scaling_of(const ProblemSpec& p) {
  check_problem(p);
  Scaling s;
  s.lo = p.lo;
  s.length = p.hi - p.lo;
  if (p.orientation == TimeKind::Backward) {
    s.time = p.horizon;
    Normalizer nz(p, s);
    double v = std::max({sample_max(nz, p.f, s.time), sample_max(nz, p.left, s.time), sample_max(nz, p.right, s.time),
                         s.time * sample_max(nz, p.h, s.time)});
    s.value = v > 0 ? v : 1.0;
  } else {
    s.time = p.t0.value_or(1.0);
  }
  return s;
}

AvoidSpec normalized_spec(const ProblemSpec& p, const Degrees& d, double gamma) {
  Scaling s = scaling_of(p);
  Normalizer nz(p, s);
  const RingPtr& r = nz.ring();
  AvoidSpec a;
  a.jet_order = d.jet_order;
  a.zeta_degree = d.zeta;
  a.kernel_degree = d.kernel;
  a.multiplier_degree = d.multiplier;
  a.slack_degree = d.slack;
  for (double b : p.breaks) a.breaks.push_back((b - s.lo) / s.length);

  if (p.orientation == TimeKind::Backward) {
    a.mode = AvoidMode::Backward;
    a.kind = TimeKind::Backward;
    Poly u0 = Poly::variable(r, "u0"), u1 = Poly::variable(r, "u1"), u2 = Poly::variable(r, "u2");
    const double L = s.length, U = s.value, T = s.time;
    Poly rhs = mul(nz.convert(p.a, T), u2) * (1.0 / (L * L)) + mul(nz.convert(p.b, T), u1) * (1.0 / L) -
               mul(nz.convert(p.c, T), u0) + nz.convert(p.h, T) * (1.0 / U);
    rhs = rhs * T;
    if (jet_order_of(rhs) > 2 || rhs.degree_in(2) > 1) throw std::invalid_argument("backward dynamics must be linear");
    a.rhs = str(rhs);
    a.rhs_order = 2;
    a.bcs = {{"u0_L", str(nz.convert(p.left, T) * (1.0 / U))}, {"u0_R", str(nz.convert(p.right, T) * (1.0 / U))}};
    Poly f = substitute(nz.convert(p.f, T), 0, 1.0);
    if (jet_order_of(f) > 0 || f.degree_in(2) > 0) throw std::invalid_argument("terminal data must depend on x only");
    a.terminal = str(f * (1.0 / U));
    a.t0 = p.t0.value_or(0.0) / T;

    std::vector<double> pts{0.0};
    if (p.target == Target::Point) {
      double xi = (p.point - s.lo) / L;
      if (!(xi > 0 && xi < 1)) throw std::invalid_argument("point target must lie inside the domain");
      if (std::none_of(a.breaks.begin(), a.breaks.end(), [&](double b) { return std::abs(b - xi) < 1e-12; }))
        a.breaks.push_back(xi);
      std::sort(a.breaks.begin(), a.breaks.end());
      for (double b : a.breaks) pts.push_back(b);
      pts.push_back(1.0);
      // u(t0, xi) >= gamma written as int_0^xi ((gamma - u(t0,0)) / xi - u1) <= 0.
      double left = eval(substitute(nz.convert(p.left, T), 0, a.t0), std::vector<double>(r->size(), 0.0));
      Poly g = Poly(r, (gamma / U - left / U) / xi) - u1;
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) a.unsafe.push_back(pts[i + 1] <= xi + 1e-12 ? str(g) : "0");
    } else {
      std::sort(a.breaks.begin(), a.breaks.end());
      Poly g = Poly(r, gamma / U) - u0;
      for (std::size_t i = 0; i <= a.breaks.size(); ++i) a.unsafe.push_back(str(g));
    }
    return a;
  }

  a.mode = p.t0 ? AvoidMode::ForwardAt : AvoidMode::ForwardAllTime;
  a.kind = TimeKind::Forward;
  Poly rhs = nz.convert(p.rhs, s.time) * s.time;
  if (!p.t0 && rhs.degree_in(0) > 0) throw std::invalid_argument("all-time avoidance needs autonomous dynamics");
  a.rhs = str(rhs);
  a.rhs_order = jet_order_of(rhs);
  a.bcs = {{"u0_L", str(nz.convert(p.left, s.time))}, {"u0_R", str(nz.convert(p.right, s.time))}};
  std::sort(a.breaks.begin(), a.breaks.end());
  Poly g0 = nz.convert(p.initial_set, s.time) * s.length, gy = nz.convert(p.unsafe_set, s.time) * s.length;
  for (std::size_t i = 0; i <= a.breaks.size(); ++i) {
    a.initial.push_back(str(g0));
    a.unsafe.push_back(str(gy));
  }
  return a;
}

Probe probe(const ProblemSpec& p, const Degrees& d, double gamma, const SynthOptions& opt) {
  auto start = std::chrono::steady_clock::now();
  AvoidSpec spec = normalized_spec(p, d, gamma);
  Assembly A = assemble_avoidance(spec);
  SosResult r = solve_sos(A.prog, opt.sdp);
  Probe out;
  out.status = r.status;
  out.margin = r.z.empty() ? 0.0 : r.z[A.margin];
  bool solved = r.status == SdpStatus::Optimal || r.status == SdpStatus::SlowProgress;
  out.feasible = solved && std::isfinite(out.margin) && out.margin >= opt.eps;
  if (!out.feasible) return out;

  Certificate c;
  c.mode = spec.mode;
  c.scaling = scaling_of(p);
  c.breaks = spec.breaks;
  c.degrees = d;
  RingPtr kr = kernel_ring(d.jet_order);
  for (const auto& k : A.kernel) c.kernel.push_back(change_ring(prune(evaluate_decisions(k, r.z), 0.0), kr));
  for (const auto& m : A.multipliers) {
    std::vector<Poly> per;
    for (const auto& mp : m.m) per.push_back(change_ring(evaluate_decisions(mp, r.z), kr));
    c.multipliers.push_back(std::move(per));
    c.n.push_back(-r.z[m.n]);
  }
  if (p.orientation == TimeKind::Backward) c.gamma = gamma;
  c.margin = out.margin;
  c.status = r.status;
  c.iterations = r.iterations;
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.cert = std::move(c);
  return out;
}

namespace {

// Probes the points in parallel batches of opt.threads; results in order.
std::vector<Probe> probe_all(const std::function<Probe(double)>& f, const std::vector<double>& pts, int threads) {
  std::vector<Probe> out(pts.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < pts.size(); ++i) out[i] = f(pts[i]);
    return out;
  }
  std::vector<std::future<Probe>> fut;
  for (double v : pts) fut.push_back(std::async(std::launch::async, f, v));
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = fut[i].get();
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(8);
  os << v;
  return os.str();
}

}  // namespace

BoundResult bound_functional(const ProblemSpec& p, const Degrees& d, double gamma_lo, double gamma_hi,
                             double bisect_tol, const SynthOptions& opt) {
  if (p.orientation != TimeKind::Backward) throw std::invalid_argument("bound_functional needs a backward problem");
  if (!(gamma_lo < gamma_hi)) throw std::invalid_argument("gamma bracket must satisfy lo < hi");
  if (!(bisect_tol > 0)) throw std::invalid_argument("bisection tolerance must be positive");
  BoundResult res;
  auto run = [&](double g) {
    Probe pr = probe(p, d, g, opt);
    return pr;
  };
  auto record = [&](double g, const Probe& pr) {
    res.trace.emplace_back(g, pr.margin);
    say(opt, "gamma " + fmt(g) + " margin " + fmt(pr.margin) + " " + to_string(pr.status) +
                 (pr.feasible ? " feasible" : " infeasible"));
  };

  double width = gamma_hi - gamma_lo;
  Probe hi = run(gamma_hi);
  record(gamma_hi, hi);
  bool lo_known = false;
  for (int e = 0; !hi.feasible && e < opt.max_expand; ++e) {
    gamma_lo = gamma_hi;
    lo_known = true;
    gamma_hi += width;
    width *= 2;
    hi = run(gamma_hi);
    record(gamma_hi, hi);
  }
  if (!hi.feasible) {
    res.diagnostics = "no certificate up to gamma = " + fmt(gamma_hi) + " at kernel degree " + std::to_string(d.kernel);
    res.lower = gamma_hi;
    return res;
  }
  res.cert = hi.cert;
  if (!lo_known) {
    for (int e = 0; e <= opt.max_expand; ++e) {
      Probe lo = run(gamma_lo);
      record(gamma_lo, lo);
      if (!lo.feasible) break;
      gamma_hi = gamma_lo;
      res.cert = lo.cert;
      gamma_lo -= width;
      width *= 2;
    }
  }

  const int k = std::max(1, opt.threads);
  for (int it = 0; it < opt.max_iter && gamma_hi - gamma_lo > bisect_tol; ++it) {
    std::vector<double> pts;
    for (int i = 1; i <= k; ++i) pts.push_back(gamma_lo + (gamma_hi - gamma_lo) * i / (k + 1));
    auto probes = probe_all(run, pts, k);
    for (std::size_t i = 0; i < pts.size(); ++i) record(pts[i], probes[i]);
    // First feasible point from the left; the bracket shrinks to its left gap.
    std::size_t first = pts.size();
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (probes[i].feasible) {
        first = i;
        break;
      }
    if (first < pts.size()) {
      gamma_hi = pts[first];
      res.cert = probes[first].cert;
    }
    if (first > 0) gamma_lo = pts[first - 1];
  }
  res.verified = true;
  res.gamma = gamma_hi;
  res.lower = gamma_lo;
  return res;
}

std::optional<Certificate> verify_avoidance(const ProblemSpec& p, const Degrees& d, const SynthOptions& opt,
                                            Probe* detail) {
  if (p.orientation != TimeKind::Forward) throw std::invalid_argument("verify_avoidance needs a forward problem");
  Probe pr = probe(p, d, 0.0, opt);
  say(opt, "margin " + fmt(pr.margin) + " " + to_string(pr.status) + (pr.feasible ? " certified" : " unverified"));
  if (detail) *detail = pr;
  return pr.cert;
}

ParameterResult max_parameter(const std::function<ProblemSpec(double)>& family, double lo, double hi,
                              const Degrees& d, double tol, const SynthOptions& opt) {
  if (!(lo < hi) || !(tol > 0)) throw std::invalid_argument("parameter range must satisfy lo < hi and tol > 0");
  ParameterResult res;
  auto run = [&](double v) {
    ProblemSpec p = family(v);
    Probe pr = probe(p, d, 0.0, opt);
    if (pr.cert) pr.cert->parameter = v;
    return pr;
  };
  auto record = [&](double v, const Probe& pr) {
    res.trace.emplace_back(v, pr.margin);
    say(opt, "parameter " + fmt(v) + " margin " + fmt(pr.margin) + " " + to_string(pr.status) +
                 (pr.feasible ? " certified" : " unverified"));
  };
  Probe low = run(lo);
  record(lo, low);
  if (!low.feasible) {
    res.diagnostics = "infeasible at the low end of the range (" + fmt(lo) + ")";
    return res;
  }
  res.cert = low.cert;
  Probe top = run(hi);
  record(hi, top);
  if (top.feasible) {
    res.verified = true;
    res.value = hi;
    res.cert = top.cert;
    return res;
  }
  const int k = std::max(1, opt.threads);
  for (int it = 0; it < opt.max_iter && hi - lo > tol; ++it) {
    std::vector<double> pts;
    for (int i = 1; i <= k; ++i) pts.push_back(lo + (hi - lo) * i / (k + 1));
    auto probes = probe_all(run, pts, k);
    for (std::size_t i = 0; i < pts.size(); ++i) record(pts[i], probes[i]);
    // Last certified point; the bracket shrinks to its right gap.
    int last = -1;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (probes[i].feasible) last = static_cast<int>(i);
      else break;
    if (last >= 0) {
      lo = pts[last];
      res.cert = probes[last].cert;
    }
    if (last + 1 < static_cast<int>(pts.size())) hi = pts[last + 1];
  }
  res.verified = true;
  res.value = lo;
  return res;
}

}  // namespace barrier
