#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "barrier/synth.hpp"

namespace barrier {

// Problem files are INI-style sectioned text.  '#' starts a comment, keys are
// "name = value", and values may use any name from [parameters]:
//
//   [problem]     orientation = backward | forward, space = s, domain = 0, 100,
//                 horizon = 0.5, t0 = 1 (forward; omit for all time), breaks = ...
//   [parameters]  K = 40, lambda = 1.19*pi^2, ...
//   [dynamics]    a, b, c, h (backward: -u_t = a u'' + b u' - c u + h)
//                 rhs (forward: u_t = rhs over t, space, u0, u1, u2)
//   [boundary]    left, right (Dirichlet data, functions of t)
//   [terminal]    f
//   [initial_set] g (U0 = {int g <= 0})
//   [target]      kind = average | point, at = 4 (backward); unsafe = ... (forward)
//   [solver]      degree, jet_order, zeta, multiplier_degree, slack_degree, eps,
//                 gamma_bracket = lo, hi, bisect_tol, param = name,
//                 param_range = lo, hi, param_tol
//   [oracle]      paths, dt, seed, bridge, grid = nx, nt, x (Monte Carlo start),
//                 payoff (numeric terminal data override), initial (repeatable,
//                 forward initial conditions), t_end, out_dt
struct ProblemFile {
  ProblemSpec spec;
  Degrees degrees;
  double eps = 1e-4;
  std::optional<std::pair<double, double>> gamma_bracket;
  double bisect_tol = 1e-3;
  std::string param;
  std::optional<std::pair<double, double>> param_range;
  double param_tol = 0.0;  // 0: one percent of the range

  long paths = 10000;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  bool bridge = false;
  int nx = 200, nt = 200;
  std::optional<double> mc_x;
  std::string payoff;
  std::vector<std::string> initial;
  double t_end = 2.0, out_dt = 0.01;
};

// Throws ParseError (offset into text) for syntax, unknown keys, missing
// sections and literals that do not parse in the declared variables.
ProblemFile parse_problem_file(const std::string& text);

// spec with the named parameter set to value.
ProblemSpec with_parameter(const ProblemSpec& spec, const std::string& name, double value);

}  // namespace barrier
