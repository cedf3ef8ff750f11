// End-to-end acceptance run: one PASS/FAIL line per criterion.  Always exits 0
// so that a failing criterion is reported rather than hidden behind ctest.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "barrier/certcheck.hpp"
#include "barrier/jetform.hpp"
#include "barrier/oracles.hpp"
#include "barrier/parser.hpp"
#include "barrier/problem_file.hpp"
#include "barrier/sosred.hpp"
#include "random_sdp.hpp"

using namespace barrier;

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(BARRIER_PROBLEMS_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ProblemFile problem(const std::string& name) { return parse_problem_file(slurp(name)); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(int n, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", n, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

void note(const std::string& s) {
  std::printf("  %s\n", s.c_str());
  std::fflush(stdout);
}

// Certificates produced along the way, audited under criterion 7.
struct Produced {
  std::string name;
  ProblemSpec spec;
  Certificate cert;
};
std::vector<Produced> produced;

void criterion1() {
  ProblemFile pf = problem("blackscholes.prob");
  auto t0 = std::chrono::steady_clock::now();
  BoundResult r = bound_functional(pf.spec, pf.degrees, pf.gamma_bracket->first, pf.gamma_bracket->second, pf.bisect_tol);
  double secs = elapsed(t0);
  if (r.cert) produced.push_back({"option average", pf.spec, *r.cert});
  bool ok = r.verified && r.gamma >= 18.227 && r.gamma <= 18.40 && secs <= 60;
  report(1, ok,
         r.verified ? "gamma* = " + fmt("%.4f", r.gamma) + " (window [18.227, 18.40]), " + fmt("%.1f", secs) + " s"
                    : "Unverified: " + r.diagnostics);
}

void criterion2() {
  double avg = bs_average_price(BsParams{});
  BsParams p;
  BackwardModel m;
  m.a = [p](double, double s) { return 0.5 * p.sigma * p.sigma * s * s; };
  m.b = [p](double, double s) { return p.r * s; };
  m.c = [p](double, double) { return p.r; };
  m.h = [](double, double) { return 0.0; };
  m.f = [p](double s) { return std::max(s - p.K, 0.0); };
  m.left = [](double) { return 0.0; };
  m.right = [p](double t) { return p.sbar - p.K * std::exp(-p.r * (p.T - t)); };
  m.hi = p.sbar;
  m.T = p.T;
  PdeGrid g = backward_pde_solve(m, GridConfig{400, 400, 2});
  double cn = g.at(0, 40.0), exact = black_scholes_call(0.0, 40.0, p.K, p.r, p.sigma, p.T);
  bool avg_ok = std::abs(avg - 18.227) <= 1e-3, cn_ok = std::abs(cn - exact) <= 1e-2;
  report(2, avg_ok && cn_ok,
         "average " + fmt("%.4f", avg) + " (target 18.227 +- 1e-3), CN(0,40) " + fmt("%.5f", cn) + " vs closed form " +
             fmt("%.5f", exact));
}

void criterion3() {
  ProblemFile pf = problem("reaction.prob");
  auto t0 = std::chrono::steady_clock::now();
  Probe detail;
  auto cert = verify_avoidance(with_parameter(pf.spec, "lambda", 1.19 * kPi2), pf.degrees, {}, &detail);
  if (cert) produced.push_back({"reaction 1.19 pi^2", with_parameter(pf.spec, "lambda", 1.19 * kPi2), *cert});
  const ProblemSpec base = pf.spec;
  ParameterResult r = max_parameter([&](double v) { return with_parameter(base, "lambda", v); }, kPi2, 1.3 * kPi2,
                                    pf.degrees, 0.005 * kPi2);
  if (r.cert) produced.push_back({"reaction lambda_max", with_parameter(base, "lambda", r.value), *r.cert});
  double secs = elapsed(t0);
  bool ok = cert.has_value() && r.verified && r.value >= 1.15 * kPi2 && secs <= 600;
  report(3, ok,
         std::string("1.19 pi^2 at degree 16: ") + (cert ? "certified" : "Unverified (margin " + fmt("%.2e", detail.margin) + ")") +
             ", line search over [pi^2, 1.3 pi^2]: " +
             (r.verified ? "lambda_max = " + fmt("%.4f", r.value / kPi2) + " pi^2" : "Unverified (" + r.diagnostics + ")") +
             ", " + fmt("%.1f", secs) + " s");
}

void criterion4() {
  ProblemFile pf = problem("reaction.prob");
  ForwardModel m = forward_model(with_parameter(pf.spec, "lambda", 1.2 * kPi2));
  bool ok = true;
  std::string detail = "max W1 norm over [0,2]:";
  for (const auto& text : pf.initial) {
    ExprPtr e = parse_expr(text);
    Constants vals;
    auto u0 = [&](double x) {
      vals["x"] = x;
      return eval_expr(e, vals);
    };
    Trajectory tr = forward_pde_solve(m, u0, ForwardConfig{200, 2.0, 0.01});
    double mx = 0.0;
    for (double v : tr.norm) mx = std::max(mx, v);
    ok = ok && mx < 6.0;
    detail += " " + fmt("%.4f", mx);
  }
  report(4, ok, detail + " (need < 6)");
}

void criterion5() {
  ProblemFile pf = problem("stochres.prob");
  BackwardModel m = backward_model(pf.spec);
  PdeGrid g = backward_pde_solve(m, GridConfig{pf.nx, pf.nt, 2});
  double pde = g.at(0, pf.spec.point);
  McConfig mc;
  mc.n_paths = pf.paths;
  mc.dt = pf.dt;
  mc.seed = pf.seed;
  mc.bridge = pf.bridge;
  McResult est = mc_functional(m, 0.0, pf.spec.point, mc);
  note("u(0,4): Crank-Nicolson " + fmt("%.3f", pde) + ", Monte Carlo " + fmt("%.3f", est.estimate) + " +- " +
       fmt("%.3f", est.std_error));
  auto t0 = std::chrono::steady_clock::now();
  BoundResult r = bound_functional(pf.spec, pf.degrees, 288.0, 294.0, 1.0);
  if (r.cert) produced.push_back({"fourth moment", pf.spec, *r.cert});
  bool dominates = r.verified && r.gamma >= est.estimate + 3 * est.std_error;
  bool tight = r.verified && r.gamma <= 1.10 * pde;
  bool agree = std::abs(est.estimate - pde) <= 0.01 * pde;
  report(5, dominates && tight && agree,
         (r.verified ? "gamma* = " + fmt("%.3f", r.gamma) : std::string("Unverified")) + " vs MC+3SE " +
             fmt("%.3f", est.estimate + 3 * est.std_error) + (dominates ? " (ok)" : " (violated)") + ", 1.10 x PDE " +
             fmt("%.3f", 1.10 * pde) + (tight ? " (ok)" : " (exceeded)") + ", MC/PDE gap " +
             fmt("%.2f", 100 * std::abs(est.estimate - pde) / pde) + "% (" + fmt("%.0f", elapsed(t0)) + " s bound)");
}

void criterion6() {
  CheckOptions opt;
  opt.tol = 1e-3;
  opt.grid = 200;
  ProblemFile ex1 = problem("blackscholes.prob"), ex2 = problem("stochres.prob"), ex3 = problem("reaction.prob");
  Certificate c1 = load_certificate(slurp("blackscholes_ref.cert"));
  Certificate c3 = load_certificate(slurp("reaction_ref.cert"));
  ProblemSpec p3 = with_parameter(ex3.spec, "lambda", *c3.parameter);
  CheckReport r1 = check_certificate(ex1.spec, c1, opt);
  CheckReport r3 = check_certificate(p3, c3, opt);

  auto zero_of = [](Certificate c) {
    for (auto& k : c.kernel) k = Poly(k.ring());
    c.matrix.clear();
    c.basis.clear();
    return c;
  };
  Certificate c2 = load_certificate(slurp("stochres_ref.cert"));
  bool z1 = !check_certificate(ex1.spec, zero_of(c1), opt).pass;
  bool z2 = !check_certificate(ex2.spec, zero_of(c2), opt).pass;
  bool z3 = !check_certificate(p3, zero_of(c3), opt).pass;
  report(6, r1.pass && r3.pass && z1 && z2 && z3,
         std::string("example 1 kernel ") + (r1.pass ? "pass" : "fail (" + r1.reason + ")") + ", example 3 kernel " +
             (r3.pass ? "pass" : "fail (" + r3.reason + ")") + ", zero barrier rejected on " +
             std::to_string(z1 + z2 + z3) + "/3 problems");
}

SosProgram single(const RingPtr& r, const std::string& p, std::optional<std::pair<double, double>> iv) {
  SosProgram prog;
  prog.ring = r;
  prog.constraints.push_back(SosConstraint{"c", lift(parse_poly(p, r)), std::vector<bool>(r->size(), false), iv, {}, 0.0});
  prog.normalize_trace = false;
  return prog;
}

void criterion7() {
  std::mt19937_64 rng(20240601);
  SdpOptions<double> opt;
  opt.tol = 1e-8;
  opt.max_iter = 100;
  int solved = 0;
  double worst_gap = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    SdpProblem<double> p = barrier::testing::random_instance(rng);
    SdpSolution<double> s = solve(p, opt);
    worst_gap = std::max(worst_gap, s.gap);
    solved += s.status == SdpStatus::Optimal && s.gap <= 1e-7;
  }
  auto r = make_ring({"t", "x"});
  bool interval = solve_sos(single(r, "x*(1-x)", std::pair{0.0, 1.0})).status == SdpStatus::Optimal;
  bool rejects = solve_sos(single(r, "-1", {})).status != SdpStatus::Optimal;

  int audited = 0, passed = 0;
  double worst = 0.0;
  for (const auto& pr : produced) {
    CheckReport rep = check_certificate(pr.spec, load_certificate(write_certificate(pr.cert)));
    ++audited;
    bool ok = rep.pass && rep.grid_margin >= -1e-6;
    passed += ok;
    worst = std::min(worst, rep.grid_margin);
    note("audit " + pr.name + ": " + (ok ? "pass" : "fail") + ", grid margin " + fmt("%.2e", rep.grid_margin));
  }
  report(7, solved == 50 && interval && rejects && passed == audited,
         std::to_string(solved) + "/50 random SDPs to gap <= 1e-7 (worst " + fmt("%.1e", worst_gap) + "), x(1-x) on [0,1] " +
             (interval ? "certified" : "not certified") + ", -1 " + (rejects ? "rejected" : "accepted") + ", " +
             std::to_string(passed) + "/" + std::to_string(audited) + " synthesized certificates pass the audit");
}

// Finite differences of B along a method-of-lines trajectory for one example.
// Corrects u near each pinned end so that the dynamics move u, and u_t, exactly as the boundary data
// does. Without this the trajectory starts with a boundary layer and finite differences of any
// functional involving u1 converge to the Lie derivative at order one half or not at all.
Poly compatible_state(const Poly& base, const Dynamics& dyn, const JetSpace& js, const Poly& left, const Poly& right,
                      double t0) {
  const RingPtr& r = js.ring();
  const int top = js.max_order(0);
  // First and second time derivatives of u, as jet polynomials.
  Poly td[2] = {dyn.time_derivative(), Poly(r)};
  {
    Poly d = td[0];
    std::vector<Poly> dx{td[0]};
    for (int k = 1; k <= 2; ++k) dx.push_back(total_derivative(dx.back(), js));
    td[1] = diff(d, js.t());
    for (int k = 0; k <= 2; ++k) td[1] = td[1] + mul(diff(d, js.jet(0, k)), dx[k]);
  }
  Poly x = Poly::variable(r, "x"), one(r, 1.0);
  auto pw = [&](const Poly& p, int n) {
    Poly q(r, 1.0);
    for (int i = 0; i < n; ++i) q = mul(q, p);
    return q;
  };
  // psi[end][k] perturbs only the highest jet that the k-th condition sees at that end.
  Poly psi[2][2] = {{mul(pw(x, 2), pw(one - x, 5)), mul(pw(x, 4), pw(one - x, 5))},
                    {mul(pw(x, 5), pw(one - x, 2)), mul(pw(x, 5), pw(one - x, 4))}};
  Poly data[2] = {left, right};
  auto mismatch = [&](const Poly& u, int end, int k) {
    std::vector<double> pt(r->size(), 0.0);
    pt[js.t()] = t0;
    pt[js.x()] = end;
    Poly d = u;
    for (int j = 0; j <= top; ++j) {
      pt[js.jet(0, j)] = eval(d, pt);
      d = diff(d, js.x());
    }
    Poly g = diff(data[end], js.t());
    if (k == 1) g = diff(g, js.t());
    return eval(td[k], pt) - eval(g, pt);
  };
  Poly u = base;
  for (int k = 0; k < 2; ++k)
    for (int end = 0; end < 2; ++end) {
      double m0 = mismatch(u, end, k), m1 = mismatch(u + psi[end][k], end, k);
      if (std::abs(m1 - m0) < 1e-12) continue;
      u = u + psi[end][k] * (-m0 / (m1 - m0));
    }
  return u;
}

bool lie_order(const std::string& name, const ProblemSpec& spec, const Degrees& d, std::string& detail) {
  AvoidSpec s = normalized_spec(spec, d, 0.0);
  JetSpace js({state_field("u", 4)});
  const RingPtr& r = js.ring();
  Dynamics dyn;
  dyn.kind = s.kind;
  dyn.rhs = parse_poly(s.rhs, r);
  RingPtr tr = make_ring({"t"});
  Poly left(r), right(r);
  for (const auto& [var, value] : s.bcs) {
    Poly v = parse_poly(value, r);
    if (var == "u0_L") left = v;
    if (var == "u0_R") right = v;
  }
  dyn.bcs = {pin(js, 0, 0, 0.0, left), pin(js, 0, 0, 1.0, right)};
  Poly x = Poly::variable(r, "x"), one(r, 1.0);
  Poly u = compatible_state(mul(left, one - x) + mul(right, x) + mul(mul(x, one - x), Poly(r, 0.5) + x * 0.3), dyn, js,
                            left, right, 0.4);
  Form B(r);
  B.bulk[0] = parse_poly("(1 + x + t*x^2)*u0^2 + 0.5*x*u0*u1 + 0.2*u1^2", r);
  // Steps are fractions of the time scale 1/max|d rhs/d(u0, u1, u2)| along the start state; the
  // asymptotic range starts far earlier for slow dynamics than for the stiff double well.
  double rate = 0.0;
  for (int i = 0; i <= 100; ++i) {
    std::vector<double> pt(r->size(), 0.0);
    pt[js.t()] = 0.4;
    pt[js.x()] = i / 100.0;
    Poly d = u;
    for (int k = 0; k <= 2; ++k) {
      pt[js.jet(0, k)] = eval(d, pt);
      d = diff(d, js.x());
    }
    double s = 0.0;
    for (int k = 0; k <= 2; ++k) s += std::abs(eval(diff(dyn.rhs, js.jet(0, k)), pt));
    rate = std::max(rate, s);
  }
  const double tau = 1.0 / rate;
  LieCheck lc = lie_derivative_fd(B, dyn, js, u, 0.4, {tau / 128, tau / 256, tau / 512, tau / 1024});
  detail += " " + name + " tau " + fmt("%.3g", tau);
  bool ok = true;
  detail += " orders";
  for (double o : lc.order) {
    ok = ok && o >= 0.8 && o <= 1.2;
    detail += " " + fmt("%.3f", o);
  }
  return ok;
}

void criterion8() {
  std::string detail;
  ProblemFile ex1 = problem("blackscholes.prob"), ex2 = problem("stochres.prob"), ex3 = problem("reaction.prob");
  bool a = lie_order("ex1", ex1.spec, ex1.degrees, detail);
  bool b = lie_order("ex2", ex2.spec, ex2.degrees, detail);
  bool c = lie_order("ex3", ex3.spec, ex3.degrees, detail);
  report(8, a && b && c, "observed order in [0.8, 1.2]:" + detail);
}

void guarded(int n, const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(n, false, std::string("error: ") + e.what());
  }
}

}  // namespace

// With arguments, runs only the listed criteria (for example "acceptance 5 7").
int main(int argc, char** argv) {
  std::vector<bool> want(9, argc == 1);
  for (int i = 1; i < argc; ++i) {
    int n = std::atoi(argv[i]);
    if (n >= 1 && n <= 8) want[n] = true;
  }
  auto t0 = std::chrono::steady_clock::now();
  const std::pair<int, void (*)()> order[] = {{2, criterion2}, {4, criterion4}, {8, criterion8}, {6, criterion6},
                                              {1, criterion1}, {3, criterion3}, {5, criterion5}, {7, criterion7}};
  for (auto [n, f] : order)
    if (want[n]) guarded(n, f);
  std::printf("acceptance run finished in %.0f s\n", elapsed(t0));
  return 0;
}
