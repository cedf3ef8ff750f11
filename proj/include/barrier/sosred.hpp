#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "barrier/affine.hpp"
#include "barrier/jetform.hpp"
#include "barrier/polynomial.hpp"
#include "barrier/sdp.hpp"

namespace barrier {

enum class DecisionKind { Free, Nonneg };

// Registry of scalar decision variables referenced by AffineExpr ids.
class DecisionSpace {
 public:
  int add(DecisionKind kind, std::string label);
  int size() const { return static_cast<int>(kinds_.size()); }
  DecisionKind kind(int id) const { return kinds_[id]; }
  const std::string& label(int id) const { return labels_[id]; }

 private:
  std::vector<DecisionKind> kinds_;
  std::vector<std::string> labels_;
};

// Polynomial in vars of total degree <= degree with one fresh decision per
// monomial, times the fixed factor.
AffinePoly unknown_poly(DecisionSpace& ds, const RingPtr& ring, const std::vector<int>& vars, int degree,
                        const std::string& label, const Poly& factor = {});

// eta^T Q eta with eta a list of monomials in the state variables and Q a
// symmetric matrix of polynomials in the remaining variables.
template <typename C>
struct QuadLike {
  std::vector<Monomial> eta;
  SymPolyMatrix<C> Q;
};

// Gram embedding of p over eta, splitting each coefficient evenly over all
// (i,j) with eta_i eta_j equal to its state monomial.  Throws when a state
// monomial of p is not a product of two entries of eta.
template <typename C>
QuadLike<C> to_quadlike(const Polynomial<C>& p, const std::vector<Monomial>& eta, const std::vector<bool>& state_mask);

template <typename C>
Polynomial<C> expand(const QuadLike<C>& q, const RingPtr& ring);

// eta^T P eta for a symmetric matrix of decision polynomials.
AffinePoly quadratic(const std::vector<Monomial>& eta, const SymPolyMatrix<AffineExpr>& P, const RingPtr& ring);

SymPolyMatrix<AffineExpr> unknown_matrix(DecisionSpace& ds, const RingPtr& ring, int dim, const std::vector<int>& vars,
                                         int degree, const std::string& label);

// Adds the identity int_a^b D_x(S) dx - [S]_a^b = 0 to piece `piece` of form.
void add_ibp_slack(AffineForm& form, int piece, const AffinePoly& S, const JetSpace& js);

// Set {u : sum_i int_{piece i} g_i dx <= 0} for one field.
struct IntegralSet {
  std::vector<Poly> g;  // one integrand per piece, in the jets of `field`
  int field = 0;
};

struct MultiplierIds {
  std::vector<AffinePoly> m;  // per piece
  int n = -1;                 // decision id of -n (stored nonnegative)
  int aux_field = -1;
};

// Adds int m (dv - g) dx - n v(1) with n <= 0 for each set, using the aux
// fields listed in aux (one per set).  v(0) = 0 is returned as relations.
std::vector<MultiplierIds> attach_multipliers(AffineForm& form, const std::vector<IntegralSet>& sets,
                                              const std::vector<int>& aux, DecisionSpace& ds, int m_degree,
                                              const JetSpace& js, std::vector<BoundaryRelation>* aux_bcs);

// p >= 0 for all values of the state variables (flagged in state_mask), all
// x in x_interval and all t in t_window (when given).
struct SosConstraint {
  std::string label;
  AffinePoly p;
  std::vector<bool> state_mask;
  std::optional<std::pair<double, double>> x_interval;
  std::optional<std::pair<double, double>> t_window;
  // Certifies p + shift * sum_w w b^T b instead of p (Gram >= -shift I).
  double shift = 0.0;
};

struct SosProgram {
  RingPtr ring;
  DecisionSpace vars;
  std::vector<SosConstraint> constraints;
  std::vector<AffineExpr> equalities;  // each == 0
  AffineExpr objective;                // maximized
  // sum of Gram traces <= trace_budget (total Gram dimension when <= 0);
  // keeps margin maximizations bounded.
  bool normalize_trace = true;
  double trace_budget = 0.0;
};

struct GramBlock {
  int constraint = 0;
  int weight = 0;  // 0: plain, 1: x interval weight, 2: t window weight
  std::vector<Monomial> basis;  // eta[i / z.size()] * z[i % z.size()]
  std::vector<Monomial> eta, z;  // state and (t,x) factors
  int sdp_block = 0;
  Poly weight_poly;
};

struct SosSdp {
  SdpProblem<double> sdp;
  std::vector<std::pair<int, int>> slot;  // decision id -> (block, index)
  std::vector<GramBlock> grams;
  int total_gram_dim = 0;
};

SosSdp sos_to_sdp(const SosProgram& prog);

struct SosResult {
  SdpStatus status = SdpStatus::SlowProgress;
  std::vector<double> z;
  double objective = 0.0;
  std::vector<Eigen::MatrixXd> grams;  // aligned with SosSdp::grams
  SdpSolution<double> raw;
  int iterations = 0;
};

SosResult solve_sos(const SosProgram& prog, const SdpOptions<double>& opt = {}, SosSdp* built = nullptr);

// Reconstructs sum_w w * basis^T G basis for one constraint (for audits).
Poly gram_polynomial(const SosSdp& s, const SosResult& r, int constraint, const RingPtr& ring);

// Barrier synthesis program for one of the avoidance theorems.
enum class AvoidMode {
  Backward,        // B(t0,u) - B(T,f) > 0 on Y, dB/dt >= 0 on [t0,T]
  ForwardAt,       // B(t0,u) - B(0,w) > 0 on Y x U0, dB/dt <= 0 on [0,t0]
  ForwardAllTime,  // time-free B, B(u) - B(w) > 0 on Y x U0, dB/dt <= 0
};

// Problem data on the normalized domain x in [0,1], tau in [0,1].
struct AvoidSpec {
  AvoidMode mode = AvoidMode::Backward;
  std::vector<double> breaks;  // interior breakpoints
  // Dynamics of the state field "u" written in jets named u0, u1, ... and
  // t, x; boundary relations written with names u0_L, u1_R, ...
  std::string rhs;
  TimeKind kind = TimeKind::Backward;
  std::vector<std::pair<std::string, std::string>> bcs;  // boundary var name -> value(t)
  std::string terminal;                                  // Backward: u(1,x)
  std::vector<std::string> unsafe;   // per piece, Y = {int g <= 0}, jets of u
  std::vector<std::string> initial;  // per piece, U0 = {int g <= 0}, jets of u
  double t0 = 0.0;                   // Backward: gap time (normalized)

  int jet_order = 0;       // zeta uses u0..u_J
  int zeta_degree = 1;     // zeta = monomials of degree <= zeta_degree
  int kernel_degree = 6;   // (t,x) degree of barrier coefficients
  int multiplier_degree = -1;  // default: kernel_degree
  int slack_degree = -1;       // default: kernel_degree
  int rhs_order = 2;

  // When set, the barrier is fixed to these polynomials (one per piece, over
  // variables named t, x, u0, u1, ...) and only multipliers and slacks are
  // solved for.  The margin is then capped at margin_cap and every constraint
  // is relaxed by shift.
  std::vector<Poly> frozen_kernel;
  double shift = 0.0;
  double margin_cap = 1.0;
};

struct Assembly {
  explicit Assembly(JetSpace space) : js(std::move(space)) {}
  JetSpace js;
  Dynamics dyn;
  SosProgram prog;
  std::vector<AffinePoly> kernel;  // barrier bulk per piece
  int margin = -1;                 // decision id of s
  std::vector<MultiplierIds> multipliers;
  std::vector<BoundaryRelation> state_bcs;  // for u (and w when present)
};

Assembly assemble_avoidance(const AvoidSpec& spec);

}  // namespace barrier
