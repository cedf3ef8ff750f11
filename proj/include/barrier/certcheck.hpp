#pragma once

#include <string>
#include <vector>

#include "barrier/synth.hpp"

namespace barrier {

// Certificate files are sectioned plain text:
//
//   [certificate]
//   mode = backward | forward_at | forward_all_time
//   vars = t, theta            # names used for time and space below
//   time = physical            # or normalized (default), likewise space, value
//   scale = 1e-4               # multiplies every kernel entry
//   gamma = 18.23
//   [kernel]                   # one section per piece, or one for all
//   b = -705.7 + 717.7*t       # bulk kernel over t, theta, u0, u1, ...
//
// A kernel may instead be given as basis = u0, u1 with entries M11, M12, M22
// (the bulk is then basis^T M basis).  Errors carry the offset into the text.
Certificate load_certificate(const std::string& text);

std::string write_certificate(const Certificate& c);

// Kernel in the normalized coordinates of p (one polynomial per piece).
std::vector<Poly> normalized_kernel(const Certificate& c, const ProblemSpec& p);

struct CheckOptions {
  int grid = 200;     // points per axis
  double tol = 1e-6;  // relative to the largest kernel coefficient
  int threads = 0;    // 0: hardware concurrency
  SdpOptions<double> sdp;
};

struct InequalityReport {
  std::string label;
  double min_eig = 0.0;  // relative, minimized over the grid
  double t = 0.0, x = 0.0;  // physical location of the minimum
  bool has_t = false, has_x = false;
};

struct CheckReport {
  std::vector<InequalityReport> inequalities;
  double grid_margin = 0.0;
  std::string worst;
  double scale = 0.0;  // largest normalized kernel coefficient
  bool degenerate = false;
  SdpStatus sos_status = SdpStatus::SlowProgress;
  double sos_margin = 0.0;  // re-solved gap margin, relative
  bool sos_feasible = false;
  bool pass = false;
  std::string reason;
};

// Freezes the barrier, re-solves for multipliers and slacks with every Gram
// block relaxed by tol, then evaluates the integrand matrices of each
// inequality on a grid.  Passes when the gap margin is positive and the grid
// minimum eigenvalue is at least -tol.
CheckReport check_certificate(const ProblemSpec& p, const Certificate& c, const CheckOptions& opt = {});

std::string format_report(const CheckReport& r);

}  // namespace barrier
