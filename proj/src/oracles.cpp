#include "barrier/oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "barrier/parser.hpp"

namespace barrier {

namespace {

// Dense evaluator for a polynomial in a few chosen ring variables.
class Compiled {
 public:
  Compiled() = default;
  Compiled(const Poly& p, const std::vector<int>& vars) : n_(static_cast<int>(vars.size())) {
    for (const auto& [m, c] : p.terms()) {
      Term t;
      t.c = c;
      t.e.assign(n_, 0);
      int used = 0;
      for (int k = 0; k < n_; ++k) {
        t.e[k] = m[vars[k]];
        used += t.e[k];
      }
      if (used != m.deg)
        throw std::invalid_argument("polynomial " + to_string(p) + " uses variables outside the evaluation set");
      terms_.push_back(std::move(t));
    }
  }

  double operator()(const double* v) const {
    double s = 0.0;
    for (const auto& t : terms_) {
      double m = t.c;
      for (int k = 0; k < n_; ++k)
        for (int j = 0; j < t.e[k]; ++j) m *= v[k];
      s += m;
    }
    return s;
  }

  double operator()(std::initializer_list<double> v) const { return (*this)(v.begin()); }

 private:
  struct Term {
    double c = 0.0;
    std::vector<int> e;
  };
  std::vector<Term> terms_;
  int n_ = 0;
};

std::function<double(double, double)> fn2(const Poly& p) {
  Compiled c(p, {0, 1});
  return [c](double t, double x) { return c({t, x}); };
}

std::function<double(double)> fn1(const Poly& p, int var) {
  Compiled c(p, {var});
  return [c](double t) { return c({t}); };
}

void thomas(std::vector<double>& lo, std::vector<double>& di, std::vector<double>& up, std::vector<double>& rhs) {
  const std::size_t n = di.size();
  for (std::size_t i = 1; i < n; ++i) {
    double w = lo[i] / di[i - 1];
    di[i] -= w * up[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= di[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - up[i] * rhs[i + 1]) / di[i];
}

// Method of lines with central differences and Dirichlet data.  dir = +1
// integrates du/dt = rhs forward in t, dir = -1 integrates -du/dt = rhs
// backward in t.
class Mol {
 public:
  Mol(const Poly& rhs, const std::vector<int>& vars, std::function<double(double)> left,
      std::function<double(double)> right, double lo, double hi, int nx, double dir)
      : f_(rhs, vars),
        d2_(diff(rhs, vars[4]), vars),
        d1_(diff(rhs, vars[3]), vars),
        d0_(diff(rhs, vars[2]), vars),
        left_(std::move(left)),
        right_(std::move(right)),
        dir_(dir),
        dx_((hi - lo) / nx) {
    if (nx < 8) throw std::invalid_argument("grid needs nx >= 8");
    for (int i = 0; i <= nx; ++i) x_.push_back(lo + i * dx_);
  }

  const std::vector<double>& x() const { return x_; }

  void set_boundary(double t, std::vector<double>& U) const {
    U.front() = left_(t);
    U.back() = right_(t);
  }

  void eval(double t, const std::vector<double>& U, std::vector<double>& dU) const {
    const std::size_t n = U.size();
    dU.assign(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      double u1 = (U[i + 1] - U[i - 1]) / (2 * dx_);
      double u2 = (U[i + 1] - 2 * U[i] + U[i - 1]) / (dx_ * dx_);
      dU[i] = dir_ * f_({t, x_[i], U[i], u1, u2});
    }
  }

  double stable_dt(double t, const std::vector<double>& U) const {
    double D = 1e-12, V = 1e-12, R = 1e-12;
    for (std::size_t i = 1; i + 1 < U.size(); ++i) {
      double u1 = (U[i + 1] - U[i - 1]) / (2 * dx_);
      double u2 = (U[i + 1] - 2 * U[i] + U[i - 1]) / (dx_ * dx_);
      double v[5] = {t, x_[i], U[i], u1, u2};
      D = std::max(D, std::abs(d2_(v)));
      V = std::max(V, std::abs(d1_(v)));
      R = std::max(R, std::abs(d0_(v)));
    }
    return std::min({0.5 * dx_ * dx_ / D, dx_ / V, 0.5 / R});
  }

  // Advances by span >= 0 in the direction of the dynamics with RK4.
  void advance(double& t, std::vector<double>& U, double span) const {
    std::vector<double> k1, k2, k3, k4, tmp(U.size());
    double done = 0.0;
    while (done < span * (1 - 1e-14)) {
      double dt = std::min(stable_dt(t, U), span - done);
      int n = 1;
      if (span - done > dt) n = static_cast<int>(std::ceil((span - done) / dt - 1e-9));
      dt = (span - done) / n;
      dt = std::min(dt, stable_dt(t, U));
      auto stage = [&](double tt, const std::vector<double>& base, const std::vector<double>& k, double w) {
        for (std::size_t i = 0; i < U.size(); ++i) tmp[i] = base[i] + w * k[i];
        set_boundary(tt, tmp);
        return tmp;
      };
      double s = dir_ * dt;
      eval(t, U, k1);
      std::vector<double> y2 = stage(t + s / 2, U, k1, s / 2);
      eval(t + s / 2, y2, k2);
      std::vector<double> y3 = stage(t + s / 2, U, k2, s / 2);
      eval(t + s / 2, y3, k3);
      std::vector<double> y4 = stage(t + s, U, k3, s);
      eval(t + s, y4, k4);
      for (std::size_t i = 0; i < U.size(); ++i) U[i] += s / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
      t += s;
      done += dt;
      set_boundary(t, U);
      for (double v : U)
        if (!std::isfinite(v) || std::abs(v) > 1e12) {
          std::ostringstream os;
          os << "method of lines blew up at t = " << t;
          throw std::runtime_error(os.str());
        }
    }
  }

 private:
  Compiled f_, d2_, d1_, d0_;
  std::function<double(double)> left_, right_;
  double dir_;
  double dx_;
  std::vector<double> x_;
};

// Derivative arrays 0..order by repeated second-order differencing.
std::vector<std::vector<double>> jets_on_grid(const std::vector<double>& U, double dx, int order) {
  std::vector<std::vector<double>> d{U};
  const std::size_t n = U.size();
  for (int k = 1; k <= order; ++k) {
    const auto& p = d.back();
    std::vector<double> q(n);
    for (std::size_t i = 1; i + 1 < n; ++i) q[i] = (p[i + 1] - p[i - 1]) / (2 * dx);
    q[0] = (-3 * p[0] + 4 * p[1] - p[2]) / (2 * dx);
    q[n - 1] = (3 * p[n - 1] - 4 * p[n - 2] + p[n - 3]) / (2 * dx);
    d.push_back(std::move(q));
  }
  return d;
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double black_scholes_call(double t, double s, double K, double r, double sigma, double T) {
  if (t > T) throw std::invalid_argument("black_scholes_call: t > T");
  if (s < 0 || !(sigma > 0)) throw std::invalid_argument("black_scholes_call: needs s >= 0 and sigma > 0");
  if (s == 0.0) return 0.0;
  double tau = T - t;
  if (tau == 0.0) return std::max(s - K, 0.0);
  double st = sigma * std::sqrt(tau);
  double d1 = (std::log(s / K) + (r + 0.5 * sigma * sigma) * tau) / st;
  double d2 = d1 - st;
  return s * normal_cdf(d1) - K * std::exp(-r * tau) * normal_cdf(d2);
}

double binomial_call(double t, double s, double K, double r, double sigma, double T, int steps) {
  double tau = T - t;
  if (tau <= 0) return std::max(s - K, 0.0);
  double dt = tau / steps;
  double u = std::exp(sigma * std::sqrt(dt)), d = 1 / u;
  double q = (std::exp(r * dt) - d) / (u - d), disc = std::exp(-r * dt);
  std::vector<double> v(steps + 1);
  for (int i = 0; i <= steps; ++i) v[i] = std::max(s * std::pow(u, i) * std::pow(d, steps - i) - K, 0.0);
  for (int n = steps; n > 0; --n)
    for (int i = 0; i < n; ++i) v[i] = disc * (q * v[i + 1] + (1 - q) * v[i]);
  return v[0];
}

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n < 2 || n % 2) throw std::invalid_argument("simpson needs an even panel count");
  double h = (b - a) / n, s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3;
}

double simpson(const std::vector<double>& y, double h) {
  if (y.size() < 3 || y.size() % 2 == 0) throw std::invalid_argument("simpson needs an odd sample count");
  double s = y.front() + y.back();
  for (std::size_t i = 1; i + 1 < y.size(); ++i) s += (i % 2 ? 4.0 : 2.0) * y[i];
  return s * h / 3;
}

double bs_average_price(const BsParams& p, int points, double tol) {
  if (!(p.sbar > 0)) throw std::invalid_argument("bs_average_price: sbar must be positive");
  auto f = [&](double s) { return black_scholes_call(0.0, s, p.K, p.r, p.sigma, p.T); };
  int n = std::max(2, points + points % 2);
  double prev = simpson(f, 0.0, p.sbar, n) / p.sbar;
  for (int it = 0; it < 30; ++it) {
    n *= 2;
    double cur = simpson(f, 0.0, p.sbar, n) / p.sbar;
    if (std::abs(cur - prev) < tol) return cur;
    prev = cur;
  }
  return prev;
}

BackwardModel backward_model(const ProblemSpec& p, const std::string& payoff) {
  RingPtr r = make_ring({"t", p.space});
  auto P = [&](const std::string& s) { return parse_poly(s, r, p.constants); };
  BackwardModel m;
  m.a = fn2(P(p.a));
  m.b = fn2(P(p.b));
  m.c = fn2(P(p.c));
  m.h = fn2(P(p.h));
  m.left = fn1(P(p.left), 0);
  m.right = fn1(P(p.right), 0);
  m.lo = p.lo;
  m.hi = p.hi;
  m.T = p.horizon;
  if (payoff.empty()) {
    Poly f = substitute(P(p.f), 0, p.horizon);
    m.f = fn1(f, 1);
  } else {
    ExprPtr e = parse_expr(payoff);
    Constants vals = p.constants;
    std::string name = p.space;
    vals[name] = 0.0;
    eval_expr(e, vals);  // surfaces unknown symbols early
    m.f = [e, vals, name](double x) mutable {
      vals[name] = x;
      return eval_expr(e, vals);
    };
  }
  return m;
}

McResult mc_functional(const BackwardModel& m, double t0, double x0, const McConfig& cfg) {
  if (cfg.n_paths < 1 || !(cfg.dt > 0)) throw std::invalid_argument("mc_functional: needs n_paths >= 1 and dt > 0");
  if (t0 > m.T) throw std::invalid_argument("mc_functional: start time after the horizon");
  for (int i = 0; i <= 50; ++i)
    for (int j = 0; j <= 50; ++j) {
      double t = t0 + (m.T - t0) * i / 50, x = m.lo + (m.hi - m.lo) * j / 50;
      if (m.a(t, x) < -1e-12) throw std::invalid_argument("mc_functional: diffusion coefficient a is negative");
    }
  const long steps = std::max<long>(1, std::lround(std::ceil((m.T - t0) / cfg.dt - 1e-9)));
  const double dt = (m.T - t0) / steps, sq = std::sqrt(dt);
  std::vector<double> value(cfg.n_paths);

  auto path = [&](long idx) {
    long stream = cfg.antithetic ? idx / 2 : idx;
    double sign = cfg.antithetic && (idx % 2) ? -1.0 : 1.0;
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> N(0.0, 1.0);
    double x = x0, t = t0, disc = 1.0, run = 0.0;
    double cx = m.c(t, x), hx = m.h(t, x);
    for (long k = 0; k < steps; ++k) {
      double dw = sign * sq * N(rng);
      double xn = x + m.b(t, x) * dt + std::sqrt(std::max(2.0 * m.a(t, x), 0.0)) * dw;
      double tn = t0 + (k + 1) * dt;
      if (!std::isfinite(xn) || std::abs(xn) > 1e100) {
        std::ostringstream os;
        os << "mc_functional: path " << idx << " overflowed at t = " << tn << "; reduce dt";
        throw std::runtime_error(os.str());
      }
      bool out_lo = xn <= m.lo, out_hi = xn >= m.hi;
      if (cfg.bridge && !out_lo && !out_hi) {
        double s2 = 2.0 * m.a(t, x) * dt;
        if (s2 > 0) {
          std::uniform_real_distribution<double> U01(0.0, 1.0);
          out_hi = U01(rng) < std::exp(-2.0 * (m.hi - x) * (m.hi - xn) / s2);
          out_lo = !out_hi && U01(rng) < std::exp(-2.0 * (x - m.lo) * (xn - m.lo) / s2);
        }
      }
      if (out_lo || out_hi) xn = out_lo ? m.lo : m.hi;
      double cn = m.c(tn, xn), hn = m.h(tn, xn);
      double dn = disc * std::exp(-0.5 * (cx + cn) * dt);
      run += 0.5 * dt * (disc * hx + dn * hn);
      disc = dn;
      x = xn;
      t = tn;
      cx = cn;
      hx = hn;
      if (out_lo) return run + disc * m.left(t);
      if (out_hi) return run + disc * m.right(t);
    }
    return run + disc * m.f(x);
  };

  int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = static_cast<int>(std::min<long>(threads, cfg.n_paths));
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](int w) {
    try {
      for (long i = w; i < cfg.n_paths; i += threads) value[i] = path(i);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Antithetic pairs are averaged first so the error reflects pair variance.
  std::vector<double> samples;
  if (cfg.antithetic) {
    for (long i = 0; i + 1 < cfg.n_paths; i += 2) samples.push_back(0.5 * (value[i] + value[i + 1]));
    if (cfg.n_paths % 2) samples.push_back(value.back());
  } else {
    samples = value;
  }
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= samples.size();
  double var = 0.0;
  for (double v : samples) var += (v - mean) * (v - mean);
  McResult r;
  r.estimate = mean;
  r.std_error = samples.size() > 1 ? std::sqrt(var / (samples.size() - 1) / samples.size()) : 0.0;
  r.paths = cfg.n_paths;
  return r;
}

double PdeGrid::at(int k, double xq) const {
  const auto& row = u.at(k);
  if (xq <= x.front()) return row.front();
  if (xq >= x.back()) return row.back();
  double h = x[1] - x[0];
  std::size_t i = std::min(static_cast<std::size_t>((xq - x.front()) / h), x.size() - 2);
  double w = (xq - x[i]) / h;
  return (1 - w) * row[i] + w * row[i + 1];
}

PdeGrid backward_pde_solve(const BackwardModel& m, const GridConfig& g) {
  if (g.nx < 8 || g.nt < 8) throw std::invalid_argument("backward_pde_solve: nx and nt must be >= 8");
  const int nx = g.nx, nt = g.nt;
  const double dx = (m.hi - m.lo) / nx, dt = m.T / nt;
  PdeGrid out;
  for (int i = 0; i <= nx; ++i) out.x.push_back(m.lo + i * dx);
  for (int k = 0; k <= nt; ++k) out.t.push_back(k * dt);
  out.u.assign(nt + 1, std::vector<double>(nx + 1));
  auto& last = out.u[nt];
  for (int i = 0; i <= nx; ++i) last[i] = m.f(out.x[i]);
  last[0] = m.left(m.T);
  last[nx] = m.right(m.T);
  double scale = 1.0;
  for (double v : last) scale = std::max(scale, std::abs(v));

  // L u = a u'' + b u' - c u at time t as (lower, diag, upper) per node.
  auto op = [&](double t, int i, double& l, double& d, double& u) {
    double x = out.x[i], a = m.a(t, x), b = m.b(t, x), c = m.c(t, x);
    l = a / (dx * dx) - b / (2 * dx);
    d = -2 * a / (dx * dx) - c;
    u = a / (dx * dx) + b / (2 * dx);
  };
  // One theta step from t_hi down to t_lo.
  auto step = [&](const std::vector<double>& U, double t_hi, double t_lo, double theta) {
    const double h = t_hi - t_lo;
    std::vector<double> lo(nx + 1, 0.0), di(nx + 1, 1.0), up(nx + 1, 0.0), rhs(nx + 1);
    rhs[0] = m.left(t_lo);
    rhs[nx] = m.right(t_lo);
    for (int i = 1; i < nx; ++i) {
      double l, d, u;
      op(t_hi, i, l, d, u);
      double explicit_part = U[i] + (1 - theta) * h * (l * U[i - 1] + d * U[i] + u * U[i + 1]);
      double src = h * (theta * m.h(t_lo, out.x[i]) + (1 - theta) * m.h(t_hi, out.x[i]));
      op(t_lo, i, l, d, u);
      lo[i] = -theta * h * l;
      di[i] = 1 - theta * h * d;
      up[i] = -theta * h * u;
      rhs[i] = explicit_part + src;
    }
    thomas(lo, di, up, rhs);
    return rhs;
  };
  for (int k = nt; k > 0; --k) {
    const double th = out.t[k], tl = out.t[k - 1];
    std::vector<double> U = out.u[k];
    if (nt - k < g.rannacher) {
      U = step(U, th, 0.5 * (th + tl), 1.0);
      U = step(U, 0.5 * (th + tl), tl, 1.0);
    } else {
      U = step(U, th, tl, 0.5);
    }
    for (double v : U)
      if (!std::isfinite(v) || std::abs(v) > 1e6 * scale) {
        std::ostringstream os;
        os << "backward_pde_solve: unstable at t = " << tl;
        throw std::runtime_error(os.str());
      }
    out.u[k - 1] = std::move(U);
  }
  return out;
}

ForwardModel forward_model(const ProblemSpec& p) {
  RingPtr r = make_ring({"t", p.space, "u0", "u1", "u2"});
  ForwardModel m;
  m.rhs = parse_poly(p.rhs, r, p.constants);
  RingPtr rt = make_ring({"t"});
  m.left = fn1(parse_poly(p.left, rt, p.constants), 0);
  m.right = fn1(parse_poly(p.right, rt, p.constants), 0);
  m.lo = p.lo;
  m.hi = p.hi;
  return m;
}

double w1_norm(const std::vector<double>& x, const std::vector<double>& u) {
  auto d = jets_on_grid(u, x[1] - x[0], 1);
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    double a = u[i] * u[i] + d[1][i] * d[1][i], b = u[i + 1] * u[i + 1] + d[1][i + 1] * d[1][i + 1];
    s += 0.5 * (x[i + 1] - x[i]) * (a + b);
  }
  return std::sqrt(s);
}

Trajectory forward_pde_solve(const ForwardModel& m, const std::function<double(double)>& u0, const ForwardConfig& c) {
  if (!(c.out_dt > 0) || c.t_end < 0) throw std::invalid_argument("forward_pde_solve: bad output times");
  Mol mol(m.rhs, {0, 1, 2, 3, 4}, m.left, m.right, m.lo, m.hi, c.nx, 1.0);
  std::vector<double> U;
  for (double x : mol.x()) U.push_back(u0(x));
  double t = 0.0;
  mol.set_boundary(t, U);
  Trajectory tr;
  tr.t.push_back(0.0);
  tr.norm.push_back(w1_norm(mol.x(), U));
  const long n = std::lround(std::ceil(c.t_end / c.out_dt - 1e-9));
  for (long k = 1; k <= n; ++k) {
    double target = std::min(c.t_end, k * c.out_dt);
    mol.advance(t, U, target - t);
    t = target;
    tr.t.push_back(t);
    tr.norm.push_back(w1_norm(mol.x(), U));
  }
  tr.x = mol.x();
  tr.u = U;
  return tr;
}

LieCheck lie_derivative_fd(const Form& B, const Dynamics& dyn, const JetSpace& js, const Poly& u_start, double t_start,
                           const std::vector<double>& steps, int nx) {
  const int F = dyn.field;
  std::vector<int> vars{js.t(), js.x(), js.jet(F, 0), js.jet(F, 1), js.jet(F, 2)};
  std::function<double(double)> left, right;
  for (const auto& r : dyn.bcs) {
    if (r.coeffs.size() != 1) continue;
    auto [v, w] = r.coeffs[0];
    auto b = js.boundary_of(v);
    if (!b || b->first != F || b->second != 0) continue;
    Compiled val(r.value, {js.t()});
    auto fn = [val, w](double t) { return val({t}) / w; };
    (js.boundary_point(v) == 0.0 ? left : right) = fn;
  }
  if (!left || !right) throw std::invalid_argument("lie_derivative_fd needs Dirichlet data at both ends");
  const double dir = dyn.kind == TimeKind::Forward ? 1.0 : -1.0;
  Mol mol(dyn.rhs, vars, left, right, 0.0, 1.0, nx, dir);
  const double dx = 1.0 / nx;

  int order = 0;
  for (const auto& p : B.bulk)
    for (int k = 0; k <= js.max_order(F); ++k)
      if (p.degree_in(js.jet(F, k)) > 0) order = std::max(order, k);
  std::vector<int> piece_node;
  for (double b : B.breaks) {
    double pos = b * nx;
    if (std::abs(pos - std::round(pos)) > 1e-9) throw std::invalid_argument("breakpoints must fall on grid nodes");
    piece_node.push_back(static_cast<int>(std::lround(pos)));
  }
  auto value = [&](double t, const std::vector<double>& U) {
    auto d = jets_on_grid(U, dx, order);
    std::vector<double> pt(js.ring()->size(), 0.0);
    pt[js.t()] = t;
    double s = 0.0;
    for (int p = 0; p < B.pieces(); ++p) {
      std::vector<double> vals;
      for (int i = piece_node[p]; i <= piece_node[p + 1]; ++i) {
        pt[js.x()] = mol.x()[i];
        for (int k = 0; k <= order; ++k) pt[js.jet(F, k)] = d[k][i];
        vals.push_back(eval(B.bulk[p], pt));
      }
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) s += 0.5 * dx * (vals[i] + vals[i + 1]);
    }
    for (int v = 0; v < js.ring()->size(); ++v) {
      auto b = js.boundary_of(v);
      if (!b) continue;
      if (b->first != F) throw std::invalid_argument("lie_derivative_fd: boundary terms of other fields");
      pt[v] = d.size() > static_cast<std::size_t>(b->second)
                  ? d[b->second][static_cast<int>(std::lround(js.boundary_point(v) * nx))]
                  : 0.0;
    }
    pt[js.x()] = 0.0;
    return s + eval(B.boundary, pt) + eval(B.scalar, pt);
  };

  Form dB = lie_derivative(B, dyn, js);
  LieCheck out;
  out.exact = evaluate(dB, js, {{F, u_start}}, t_start);
  std::vector<double> U0;
  std::vector<double> pt(js.ring()->size(), 0.0);
  pt[js.t()] = t_start;
  for (double x : mol.x()) {
    pt[js.x()] = x;
    U0.push_back(eval(u_start, pt));
  }
  const double B0 = value(t_start, U0);
  for (double h : steps) {
    std::vector<double> U = U0;
    double t = t_start;
    mol.advance(t, U, h);
    double fd = dir * (value(t, U) - B0) / h;
    out.steps.push_back(h);
    out.error.push_back(std::abs(fd - out.exact));
  }
  for (std::size_t i = 1; i < out.steps.size(); ++i)
    out.order.push_back(std::log(out.error[i - 1] / out.error[i]) / std::log(out.steps[i - 1] / out.steps[i]));
  return out;
}

}  // namespace barrier
