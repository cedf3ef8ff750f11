#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "barrier/jetform.hpp"
#include "barrier/synth.hpp"

namespace barrier {

double normal_cdf(double x);

// European call under Black-Scholes at time t <= T.
double black_scholes_call(double t, double s, double K, double r, double sigma, double T);

// Cox-Ross-Rubinstein tree for the same call.
double binomial_call(double t, double s, double K, double r, double sigma, double T, int steps = 4000);

// Composite Simpson rule with n (even) panels.
double simpson(const std::function<double(double)>& f, double a, double b, int n);

// Simpson over uniformly spaced samples (odd count).
double simpson(const std::vector<double>& y, double h);

struct BsParams {
  double K = 40.0, r = 0.1, sigma = 0.2, T = 0.5, sbar = 100.0;
};

// (1/sbar) int_0^sbar u(0,s) ds, halving the panel width until successive
// estimates differ by less than tol.
double bs_average_price(const BsParams& p, int points = 16, double tol = 1e-4);

// Numeric callbacks for a backward problem in physical units:
// -du/dt = a u'' + b u' - c u + h on (lo, hi), u(T) = f, u(t,lo) = left, u(t,hi) = right.
struct BackwardModel {
  std::function<double(double, double)> a, b, c, h;
  std::function<double(double)> f, left, right;
  double lo = 0.0, hi = 1.0, T = 1.0;
};

// payoff, when given, replaces the polynomial terminal data (for example
// "pos(s - 40)").
BackwardModel backward_model(const ProblemSpec& p, const std::string& payoff = {});

struct McConfig {
  long n_paths = 10000;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  bool antithetic = false;
  // Kills a path inside a step with the Brownian-bridge crossing probability.
  // Off by default: plain per-step monitoring.
  bool bridge = false;
  int threads = 0;  // 0: hardware concurrency
};

struct McResult {
  double estimate = 0.0;
  double std_error = 0.0;
  long paths = 0;
};

// Euler-Maruyama estimate of E[int_t^tau e^{-int c} h + e^{-int c} Psi] from
// X(t) = x, with Psi the boundary data at the exit time tau <= T or f at T.
McResult mc_functional(const BackwardModel& m, double t, double x, const McConfig& cfg);

struct GridConfig {
  int nx = 200;
  int nt = 200;
  int rannacher = 2;  // leading CN steps done as two implicit Euler half steps
};

struct PdeGrid {
  std::vector<double> t, x;
  std::vector<std::vector<double>> u;  // u[k][i] = u(t[k], x[i])

  // Linear interpolation in x at time node k.
  double at(int k, double x) const;
};

// Crank-Nicolson march from T down to 0.
PdeGrid backward_pde_solve(const BackwardModel& m, const GridConfig& g);

// du/dt = rhs(t, x, u0, u1, u2) with Dirichlet data.
struct ForwardModel {
  Poly rhs;  // over t, x, u0, u1, u2
  std::function<double(double)> left, right;
  double lo = 0.0, hi = 1.0;
};

ForwardModel forward_model(const ProblemSpec& p);

struct ForwardConfig {
  int nx = 100;
  double t_end = 2.0;
  double out_dt = 0.01;
};

struct Trajectory {
  std::vector<double> t, norm;  // W1 norm per output time
  std::vector<double> x, u;     // final profile
};

Trajectory forward_pde_solve(const ForwardModel& m, const std::function<double(double)>& u0, const ForwardConfig& c);

// (int u^2 + u_x^2)^(1/2) by the trapezoid rule with central differences.
double w1_norm(const std::vector<double>& x, const std::vector<double>& u);

// Forward differences of B along a method-of-lines trajectory started at
// u_start against the evaluated Lie derivative at t_start.
struct LieCheck {
  double exact = 0.0;
  std::vector<double> steps, error, order;
};

LieCheck lie_derivative_fd(const Form& B, const Dynamics& dyn, const JetSpace& js, const Poly& u_start, double t_start,
                           const std::vector<double>& steps, int nx = 400);

}  // namespace barrier
