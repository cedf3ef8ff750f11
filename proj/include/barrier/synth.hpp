#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "barrier/parser.hpp"
#include "barrier/sosred.hpp"

namespace barrier {

enum class Target { Average, Point };

// Physical problem data.  Literals use t, the space variable and, for forward
// dynamics, the jets u0, u1, u2 of the state with respect to that variable.
struct ProblemSpec {
  TimeKind orientation = TimeKind::Backward;
  std::string space = "x";
  double lo = 0.0, hi = 1.0;
  double horizon = 1.0;       // T (backward)
  std::optional<double> t0;   // query time; forward without t0 means all time
  std::vector<double> breaks;  // interior breakpoints in physical units
  Constants constants;

  // Backward: -du/dt = a u'' + b u' - c u + h, u(T) = f.
  std::string a = "0", b = "0", c = "0", h = "0", f = "0";
  Target target = Target::Average;
  double point = 0.0;

  // Forward: du/dt = rhs with U0 = {int initial_set <= 0}, Y = {int unsafe_set <= 0}.
  std::string rhs;
  std::string initial_set, unsafe_set;

  // Dirichlet data u(t, lo) = left(t), u(t, hi) = right(t).
  std::string left = "0", right = "0";
};

// x_phys = lo + length * x, t_phys = time * tau, u_phys = value * u.
struct Scaling {
  double lo = 0.0, length = 1.0, time = 1.0, value = 1.0;
};

Scaling scaling_of(const ProblemSpec& p);

struct Degrees {
  int kernel = 6;
  int jet_order = 0;
  int zeta = 1;
  int multiplier = -1;  // -1: same as kernel
  int slack = -1;
};

// Normalized synthesis data for a backward problem at bound gamma, or for a
// forward problem (gamma ignored).
AvoidSpec normalized_spec(const ProblemSpec& p, const Degrees& d, double gamma = 0.0);

struct Certificate {
  AvoidMode mode = AvoidMode::Backward;
  Scaling scaling;
  std::vector<double> breaks;  // normalized interior breakpoints
  Degrees degrees;
  std::vector<Poly> kernel;    // per piece over t, x, u0.. in normalized units
  // Set when the kernel was read as basis^T M basis (one matrix per piece).
  std::vector<std::string> basis;
  std::vector<PolyMatrix> matrix;
  // Units of a loaded kernel; synthesized kernels are fully normalized.
  bool physical_time = false, physical_space = false, physical_value = false;
  std::vector<std::vector<Poly>> multipliers;  // per set, per piece
  std::vector<double> n;                        // per set, <= 0
  std::optional<double> gamma;
  std::optional<double> parameter;
  std::string parameter_name;
  double margin = 0.0;
  SdpStatus status = SdpStatus::SlowProgress;
  int iterations = 0;
  double seconds = 0.0;
};

// Ring t, x, u0..u_order used for stored kernels.
RingPtr kernel_ring(int order);

struct SynthOptions {
  double eps = 1e-4;      // probe feasible iff the margin reaches eps
  int max_iter = 20;      // bisection rounds
  int max_expand = 6;     // bracket expansions
  int threads = 1;        // speculative probes per round
  SdpOptions<double> sdp;
  std::function<void(const std::string&)> log;
};

struct Probe {
  bool feasible = false;
  double margin = 0.0;
  SdpStatus status = SdpStatus::SlowProgress;
  std::optional<Certificate> cert;
};

Probe probe(const ProblemSpec& p, const Degrees& d, double gamma, const SynthOptions& opt);

struct BoundResult {
  bool verified = false;
  double gamma = 0.0;  // smallest certified bound
  double lower = 0.0;  // largest rejected bound
  std::optional<Certificate> cert;
  std::vector<std::pair<double, double>> trace;  // (gamma, margin) per probe
  std::string diagnostics;
};

BoundResult bound_functional(const ProblemSpec& p, const Degrees& d, double gamma_lo, double gamma_hi,
                             double bisect_tol, const SynthOptions& opt = {});

std::optional<Certificate> verify_avoidance(const ProblemSpec& p, const Degrees& d, const SynthOptions& opt = {},
                                            Probe* detail = nullptr);

struct ParameterResult {
  bool verified = false;
  double value = 0.0;
  std::optional<Certificate> cert;
  std::vector<std::pair<double, double>> trace;
  std::string diagnostics;
};

// Largest parameter in [lo, hi] (to tol) for which family(parameter) is
// certified, assuming feasibility is downward closed.
ParameterResult max_parameter(const std::function<ProblemSpec(double)>& family, double lo, double hi,
                              const Degrees& d, double tol, const SynthOptions& opt = {});

}  // namespace barrier
