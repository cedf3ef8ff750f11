// barrier-cli: bound, avoid, oracle and check commands over problem files.
// Exit codes: 0 success, 1 usage or parse error, 2 verification negative.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "barrier/certcheck.hpp"
#include "barrier/oracles.hpp"
#include "barrier/parser.hpp"
#include "barrier/problem_file.hpp"

using namespace barrier;

namespace {

constexpr int kOk = 0, kUsage = 1, kNegative = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
  if (!out) throw UsageError("cannot write " + path);
}

// Line and column for a parse error inside a file.
std::string where(const std::string& path, const std::string& text, std::size_t pos) {
  pos = std::min(pos, text.size());
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < pos; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return path + ":" + std::to_string(line) + ":" + std::to_string(col);
}

std::string strip_position(const std::string& what) {
  auto at = what.rfind(" at position ");
  return at == std::string::npos ? what : what.substr(0, at);
}

ProblemFile load_problem(const std::string& path) {
  std::string text = read_file(path);
  try {
    return parse_problem_file(text);
  } catch (const ParseError& e) {
    throw UsageError(where(path, text, e.position()) + ": " + strip_position(e.what()));
  }
}

Certificate load_cert(const std::string& path) {
  std::string text = read_file(path);
  try {
    return load_certificate(text);
  } catch (const ParseError& e) {
    throw UsageError(where(path, text, e.position()) + ": " + strip_position(e.what()));
  }
}

double number(const std::string& text, const Constants& c, const std::string& flag) {
  try {
    return eval_expr(parse_expr(text), c);
  } catch (const std::exception&) {
    throw UsageError(flag + ": bad number '" + text + "'");
  }
}

std::pair<double, double> pair_of(const std::string& text, char sep, const Constants& c, const std::string& flag) {
  auto at = text.find(sep);
  if (at == std::string::npos) throw UsageError(flag + " expects lo" + std::string(1, sep) + "hi");
  return {number(text.substr(0, at), c, flag), number(text.substr(at + 1), c, flag)};
}

std::string num(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string stem_of(const std::string& path) { return std::filesystem::path(path).stem().string(); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Common {
  std::string problem;
  int degree = -1;
  std::string out;
  std::vector<std::string> set;
  bool verbose = false;
};

void apply_overrides(ProblemFile& pf, const Common& c) {
  for (const auto& kv : c.set) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects name=value");
    std::string name = kv.substr(0, eq);
    if (!pf.spec.constants.count(name)) throw UsageError("--set: unknown parameter '" + name + "'");
    pf.spec.constants[name] = number(kv.substr(eq + 1), pf.spec.constants, "--set");
  }
  if (c.degree >= 0) {
    if (c.degree < 1) throw UsageError("--degree must be positive");
    pf.degrees.kernel = c.degree;
  }
}

SynthOptions synth_options(const ProblemFile& pf, bool verbose) {
  SynthOptions o;
  o.eps = pf.eps;
  if (verbose) o.log = [](const std::string& s) { std::cerr << s << "\n"; };
  return o;
}

// Independent audit of a fresh certificate; returns true on pass.
bool audit(const ProblemSpec& p, const Certificate& c) {
  CheckReport rep = check_certificate(p, load_certificate(write_certificate(c)));
  std::cout << "audit: " << (rep.pass ? "PASS" : "FAIL") << " (grid margin " << num(rep.grid_margin, 3) << ")\n";
  if (!rep.pass) std::cout << "audit reason: " << rep.reason << "\n";
  return rep.pass;
}

int cmd_bound(const Common& c, const std::string& bracket, double bisect_tol, bool no_audit) {
  ProblemFile pf = load_problem(c.problem);
  apply_overrides(pf, c);
  if (pf.spec.orientation != TimeKind::Backward) throw UsageError("bound needs a backward problem");
  auto br = pf.gamma_bracket.value_or(std::pair{0.0, 1.0});
  if (!bracket.empty()) br = pair_of(bracket, ',', pf.spec.constants, "--gamma-bracket");
  if (!(br.first < br.second)) throw UsageError("--gamma-bracket needs lo < hi");
  double tol = bisect_tol > 0 ? bisect_tol : pf.bisect_tol;

  auto t0 = std::chrono::steady_clock::now();
  BoundResult r = bound_functional(pf.spec, pf.degrees, br.first, br.second, tol, synth_options(pf, c.verbose));
  std::cerr << "bound: " << r.trace.size() << " probes in " << num(seconds_since(t0), 3) << " s\n";
  std::cout << "problem: " << c.problem << " (backward, degree " << pf.degrees.kernel << ")\n";
  if (!r.verified) {
    std::cout << "Unverified: " << r.diagnostics << "\n";
    return kNegative;
  }
  std::cout << "gamma* = " << num(r.gamma, 8) << "\n";
  std::cout << "bracket: [" << num(r.lower, 8) << ", " << num(r.gamma, 8) << "], " << r.trace.size() << " probes\n";
  std::string out = c.out.empty() ? stem_of(c.problem) + ".cert" : c.out;
  write_file(out, write_certificate(*r.cert));
  std::cout << "certificate: " << out << "\n";
  if (!no_audit && !audit(pf.spec, *r.cert)) return kNegative;
  return kOk;
}

int cmd_avoid(const Common& c, const std::string& search, double bisect_tol, bool no_audit) {
  ProblemFile pf = load_problem(c.problem);
  apply_overrides(pf, c);
  if (pf.spec.orientation != TimeKind::Forward) throw UsageError("avoid needs a forward problem");
  SynthOptions opt = synth_options(pf, c.verbose);
  std::cout << "problem: " << c.problem << " (forward, " << (pf.spec.t0 ? "t0 = " + num(*pf.spec.t0) : "all time")
            << ", degree " << pf.degrees.kernel << ")\n";
  std::string out = c.out.empty() ? stem_of(c.problem) + ".cert" : c.out;
  auto t0 = std::chrono::steady_clock::now();

  if (!search.empty() || pf.param_range) {
    if (pf.param.empty()) throw UsageError("parameter search needs [solver] param");
    auto range = pf.param_range.value_or(std::pair{0.0, 0.0});
    if (!search.empty()) range = pair_of(search, ':', pf.spec.constants, "--param-search");
    if (!(range.first < range.second)) throw UsageError("--param-search needs lo < hi");
    double tol = bisect_tol > 0 ? bisect_tol : (pf.param_tol > 0 ? pf.param_tol : 0.01 * (range.second - range.first));
    const std::string name = pf.param;
    const ProblemSpec base = pf.spec;
    auto family = [&](double v) { return with_parameter(base, name, v); };
    ParameterResult r = max_parameter(family, range.first, range.second, pf.degrees, tol, opt);
    std::cerr << "param-search: " << r.trace.size() << " probes in " << num(seconds_since(t0), 3) << " s\n";
    if (!r.verified) {
      std::cout << "Unverified: " << r.diagnostics << "\n";
      return kNegative;
    }
    const double pi2 = std::numbers::pi * std::numbers::pi;
    std::cout << name << "_max >= " << num(r.value, 8) << " (" << num(r.value / pi2, 4) << " pi^2)\n";
    r.cert->parameter_name = name;
    write_file(out, write_certificate(*r.cert));
    std::cout << "certificate: " << out << "\n";
    if (!no_audit && !audit(family(r.value), *r.cert)) return kNegative;
    return kOk;
  }

  Probe detail;
  auto cert = verify_avoidance(pf.spec, pf.degrees, opt, &detail);
  std::cerr << "avoid: " << num(seconds_since(t0), 3) << " s\n";
  if (!cert) {
    std::cout << "Unverified: no certificate (margin " << num(detail.margin, 3) << ", " << to_string(detail.status)
              << ")\n";
    return kNegative;
  }
  if (!pf.param.empty()) {
    cert->parameter = pf.spec.constants.at(pf.param);
    cert->parameter_name = pf.param;
  }
  std::cout << "certificate found (margin " << num(cert->margin, 3) << ")\n";
  write_file(out, write_certificate(*cert));
  std::cout << "certificate: " << out << "\n";
  if (!no_audit && !audit(pf.spec, *cert)) return kNegative;
  return kOk;
}

std::string csv_row(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += num(v[i], 10);
  }
  return s + "\n";
}

int cmd_oracle(const Common& c, const std::string& grid, long paths, double dt, long long seed) {
  ProblemFile pf = load_problem(c.problem);
  apply_overrides(pf, c);
  if (!grid.empty()) {
    auto [nx, nt] = pair_of(grid, ',', {}, "--grid");
    if (!(nx >= 8 && nt >= 8) || nx != std::floor(nx) || nt != std::floor(nt))
      throw UsageError("--grid needs integers nx,nt >= 8");
    pf.nx = static_cast<int>(nx);
    pf.nt = static_cast<int>(nt);
  }
  if (paths > 0) pf.paths = paths;
  if (dt > 0) pf.dt = dt;
  if (seed >= 0) pf.seed = static_cast<std::uint64_t>(seed);
  std::string out = c.out.empty() ? stem_of(c.problem) + ".csv" : c.out;
  const ProblemSpec& p = pf.spec;
  std::string csv;

  if (p.orientation == TimeKind::Backward) {
    BackwardModel m = backward_model(p, pf.payoff);
    PdeGrid g = backward_pde_solve(m, GridConfig{pf.nx, pf.nt, 2});
    auto functional = [&](int k) {
      if (p.target == Target::Point) return g.at(k, p.point);
      const auto& u = g.u[k];
      const double h = g.x[1] - g.x[0];
      double s = 0.0;
      if (u.size() % 2 == 1) {
        s = simpson(u, h);
      } else {
        for (std::size_t i = 0; i + 1 < u.size(); ++i) s += 0.5 * h * (u[i] + u[i + 1]);
      }
      return s / (p.hi - p.lo);
    };
    const std::string label = p.target == Target::Point ? "u(0," + num(p.point) + ")" : "average";
    csv = "t," + (p.target == Target::Point ? "u_at_" + num(p.point) : std::string("average")) + "\n";
    for (std::size_t k = 0; k < g.t.size(); ++k) csv += csv_row({g.t[k], functional(static_cast<int>(k))});
    std::cout << label << " = " << num(functional(0), 8) << " (Crank-Nicolson, grid " << pf.nx << "x" << pf.nt
              << ")\n";
    double x0 = pf.mc_x.value_or(p.target == Target::Point ? p.point : 0.5 * (p.lo + p.hi));
    McConfig mc;
    mc.n_paths = pf.paths;
    mc.dt = pf.dt;
    mc.seed = pf.seed;
    mc.bridge = pf.bridge;
    McResult r = mc_functional(m, 0.0, x0, mc);
    std::cout << "monte carlo u(0," << num(x0) << ") = " << num(r.estimate, 8) << " +- " << num(r.std_error, 3) << " ("
              << r.paths << " paths, dt " << num(pf.dt) << (pf.bridge ? ", bridge" : "") << ")\n";
    std::cout << "crank-nicolson u(0," << num(x0) << ") = " << num(g.at(0, x0), 8) << "\n";
  } else {
    if (pf.initial.empty()) throw UsageError("forward oracle needs [oracle] initial conditions");
    ForwardModel m = forward_model(p);
    std::vector<Trajectory> runs;
    for (const auto& text : pf.initial) {
      ExprPtr e = parse_expr(text);
      Constants vals = p.constants;
      auto u0 = [&, e](double x) mutable {
        vals[p.space] = x;
        return eval_expr(e, vals);
      };
      runs.push_back(forward_pde_solve(m, u0, ForwardConfig{pf.nx, pf.t_end, pf.out_dt}));
    }
    csv = "t";
    for (std::size_t i = 0; i < runs.size(); ++i) csv += ",w1_ic" + std::to_string(i + 1);
    csv += "\n";
    std::size_t n = runs.front().t.size();
    for (const auto& r : runs) n = std::min(n, r.t.size());
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> row{runs.front().t[k]};
      for (const auto& r : runs) row.push_back(r.norm[k]);
      csv += csv_row(row);
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
      double mx = 0.0;
      for (double v : runs[i].norm) mx = std::max(mx, v);
      std::cout << "ic" << i + 1 << " " << pf.initial[i] << ": W1 norm " << num(runs[i].norm.front(), 6) << " -> "
                << num(runs[i].norm.back(), 6) << ", max " << num(mx, 6) << " over [0, " << num(pf.t_end) << "]\n";
    }
  }
  write_file(out, csv);
  std::cout << "csv: " << out << "\n";
  return kOk;
}

int cmd_check(const std::string& problem, const std::string& cert_path, double tol, int grid) {
  ProblemFile pf = load_problem(problem);
  Certificate cert = load_cert(cert_path);
  ProblemSpec p = pf.spec;
  if (cert.parameter) {
    std::string name = cert.parameter_name.empty() ? pf.param : cert.parameter_name;
    if (name.empty() || !p.constants.count(name))
      throw UsageError("certificate parameter '" + name + "' is not a problem parameter");
    p = with_parameter(p, name, *cert.parameter);
  }
  CheckOptions opt;
  opt.tol = tol;
  opt.grid = grid;
  CheckReport rep;
  try {
    rep = check_certificate(p, cert, opt);
  } catch (const std::invalid_argument& e) {
    throw UsageError(cert_path + ": " + e.what());
  }
  std::cout << format_report(rep);
  return rep.pass ? kOk : kNegative;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Barrier functional bounds and safety certificates for PDEs"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("problem", common.problem, "problem file")->required();
    sub->add_option("--degree", common.degree, "kernel degree (overrides [solver] degree)");
    sub->add_option("--out", common.out, "output path (certificate or CSV)");
    sub->add_option("--set", common.set, "override a parameter, name=value (repeatable)");
    sub->add_flag("-v,--verbose", common.verbose, "log every probe to stderr");
  };

  std::string bracket, search, grid;
  double bisect_tol = 0.0;
  bool no_audit = false;
  auto* bound = app.add_subcommand("bound", "smallest certified bound gamma* on the functional");
  add_common(bound);
  bound->add_option("--gamma-bracket", bracket, "initial bracket lo,hi (expanded when needed)");
  bound->add_option("--bisect-tol", bisect_tol, "stop when the bracket is narrower than this");
  bound->add_flag("--no-audit", no_audit, "skip the certificate check after synthesis");

  auto* avoid = app.add_subcommand("avoid", "certify that trajectories avoid the unsafe set");
  add_common(avoid);
  avoid->add_option("--param-search", search, "largest certified parameter in lo:hi");
  avoid->add_option("--bisect-tol", bisect_tol, "parameter tolerance for --param-search");
  avoid->add_flag("--no-audit", no_audit, "skip the certificate check after synthesis");

  long paths = 0;
  double dt = 0.0;
  long long seed = -1;
  auto* oracle = app.add_subcommand(
      "oracle",
      "numerical reference values; CSV columns are t,average or t,u_at_X (backward) and t,w1_ic1,... (forward)");
  add_common(oracle);
  oracle->add_option("--grid", grid, "nx,nt for Crank-Nicolson (nx also sets the forward grid)");
  oracle->add_option("--paths", paths, "Monte Carlo paths");
  oracle->add_option("--dt", dt, "Monte Carlo time step");
  oracle->add_option("--seed", seed, "Monte Carlo seed");

  std::string cert_path;
  double tol = 1e-6;
  int check_grid = 200;
  auto* check = app.add_subcommand("check", "verify a certificate against a problem");
  check->add_option("problem", common.problem, "problem file")->required();
  check->add_option("certificate", cert_path, "certificate file")->required();
  check->add_option("--tol", tol, "relative tolerance");
  check->add_option("--grid", check_grid, "grid points per axis")->check(CLI::Range(8, 4000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*bound) return cmd_bound(common, bracket, bisect_tol, no_audit);
    if (*avoid) return cmd_avoid(common, search, bisect_tol, no_audit);
    if (*oracle) return cmd_oracle(common, grid, paths, dt, seed);
    if (*check) return cmd_check(common.problem, cert_path, tol, check_grid);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
