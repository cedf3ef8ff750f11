#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "barrier/parser.hpp"
#include "barrier/sosred.hpp"

namespace barrier {
namespace {

Monomial mono(const RingPtr& r, const std::string& s) {
  Poly p = parse_poly(s, r);
  return p.terms().begin()->first;
}

std::vector<bool> mask(const RingPtr& r, const std::vector<std::string>& names) {
  std::vector<bool> m(r->size(), false);
  for (const auto& n : names) m[r->index(n)] = true;
  return m;
}

TEST(QuadLikeTest, Examples) {
  auto r = make_ring({"t", "x", "u0", "u1"});
  auto sm = mask(r, {"u0", "u1"});
  std::vector<Monomial> z1{mono(r, "1"), mono(r, "u0"), mono(r, "u1")};
  auto q = to_quadlike(parse_poly("u0^2", r), z1, sm);
  EXPECT_DOUBLE_EQ(q.Q(1, 1).constant_term(), 1.0);
  EXPECT_TRUE(q.Q(0, 0).is_zero());
  EXPECT_TRUE(q.Q(1, 2).is_zero());

  auto q2 = to_quadlike(parse_poly("u0*u1", r), z1, sm);
  EXPECT_DOUBLE_EQ(q2.Q(1, 2).constant_term(), 0.5);
  EXPECT_DOUBLE_EQ(q2.Q(2, 1).constant_term(), 0.5);

  std::vector<Monomial> z2{mono(r, "1"),     mono(r, "u0"),    mono(r, "u1"),
                           mono(r, "u0^2"), mono(r, "u0*u1"), mono(r, "u1^2")};
  auto q3 = to_quadlike(parse_poly("x*u0^4", r), z2, sm);
  Poly x = parse_poly("x", r);
  EXPECT_LE(max_abs_coeff(q3.Q(3, 3) - x), 1e-15);

  EXPECT_THROW(to_quadlike(parse_poly("u0^3", r), z1, sm), std::invalid_argument);
}

TEST(QuadLikeTest, RoundTrip) {
  auto r = make_ring({"t", "x", "u0", "u1", "u2"});
  auto sm = mask(r, {"u0", "u1", "u2"});
  std::vector<Monomial> eta = monomial_exponents(r, {2, 3, 4}, 2);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    Poly p(r);
    for (const auto& a : eta)
      for (const auto& b : eta)
        if (U(rng) > 0.3) {
          Monomial m = monomial_product(a, b);
          m.set(1, trial % 3);
          m.set(0, trial % 2);
          p.add_term(m, U(rng));
        }
    auto q = to_quadlike(p, eta, sm);
    EXPECT_LE(max_abs_coeff(expand(q, r) - p), 1e-10);
  }
}

// Value of int_0^1 D_x(S) - [S] for concrete u.
double slack_value(const JetSpace& js, const AffinePoly& S, const Poly& u) {
  AffineForm f(js.ring());
  add_ibp_slack(f, 0, S, js);
  Form g = evaluate_decisions(f, {});
  return evaluate(g, js, {{0, u}}, 0.0);
}

TEST(IbpSlackTest, Examples) {
  JetSpace js({state_field("u", 3)});
  const RingPtr& r = js.ring();
  std::vector<Monomial> eta{mono(r, "u0")};
  SymPolyMatrix<AffineExpr> P(1, r);
  P(0, 0) = lift(parse_poly("1", r));
  AffineForm f(r);
  add_ibp_slack(f, 0, quadratic(eta, P, r), js);
  Poly bulk = evaluate_decisions(f.bulk[0], {});
  EXPECT_LE(max_abs_coeff(bulk - parse_poly("2*u0*u1", r)), 1e-15);
  EXPECT_LE(max_abs_coeff(evaluate_decisions(f.boundary, {}) - parse_poly("u0_L^2 - u0_R^2", r)), 1e-15);

  SymPolyMatrix<AffineExpr> Z(1, r);
  AffineForm f0(r);
  add_ibp_slack(f0, 0, quadratic(eta, Z, r), js);
  EXPECT_TRUE(f0.bulk[0].is_zero());
  EXPECT_TRUE(f0.boundary.is_zero());

  P(0, 0) = lift(parse_poly("x", r));
  AffineForm f1(r);
  add_ibp_slack(f1, 0, quadratic(eta, P, r), js);
  EXPECT_LE(max_abs_coeff(evaluate_decisions(f1.bulk[0], {}) - parse_poly("u0^2 + 2*x*u0*u1", r)), 1e-15);
  for (const char* u : {"1 + x^3", "x*(2-x)"}) {
    EXPECT_NEAR(slack_value(js, quadratic(eta, P, r), parse_poly(u, r)), 0.0, 1e-12);
  }
}

SosProgram single(const RingPtr& r, const std::string& p, std::optional<std::pair<double, double>> iv = {}) {
  SosProgram prog;
  prog.ring = r;
  prog.constraints.push_back(SosConstraint{"c", lift(parse_poly(p, r)), std::vector<bool>(r->size(), false), iv, {}, 0.0});
  prog.normalize_trace = false;
  return prog;
}

TEST(SosSdpTest, PerfectSquare) {
  auto r = make_ring({"t", "x"});
  SosSdp built;
  SosResult res = solve_sos(single(r, "x^2 + 2*x + 1"), {}, &built);
  ASSERT_EQ(res.status, SdpStatus::Optimal);
  ASSERT_EQ(res.grams.size(), 1u);
  ASSERT_EQ(res.grams[0].rows(), 2);
  EXPECT_NEAR(res.grams[0](0, 0), 1.0, 1e-7);
  EXPECT_NEAR(res.grams[0](0, 1), 1.0, 1e-7);
  EXPECT_NEAR(res.grams[0](1, 1), 1.0, 1e-7);
}

TEST(SosSdpTest, IntervalWeight) {
  auto r = make_ring({"t", "x"});
  SosSdp built;
  SosResult res = solve_sos(single(r, "x*(1-x)", std::pair{0.0, 1.0}), {}, &built);
  ASSERT_EQ(res.status, SdpStatus::Optimal);
  ASSERT_EQ(res.grams.size(), 2u);
  EXPECT_LE(res.grams[0].cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR(res.grams[1](0, 0), 1.0, 1e-6);
  Poly back = gram_polynomial(built, res, 0, r);
  EXPECT_LE(max_abs_coeff(back - parse_poly("x*(1-x)", r)), 1e-6);
  for (int i = 0; i <= 200; ++i) {
    double x = i / 200.0;
    double q0 = 0, q1 = res.grams[1](0, 0);
    Eigen::Vector2d z(1, x);
    q0 = z.dot(res.grams[0] * z);
    EXPECT_GE(q0 + x * (1 - x) * q1, -1e-7);
  }
}

TEST(SosSdpTest, NegativeConstantRejected) {
  auto r = make_ring({"t", "x"});
  SosResult res = solve_sos(single(r, "-1"));
  EXPECT_EQ(res.status, SdpStatus::PrimalInfeasible);
  SosResult res2 = solve_sos(single(r, "x^2 - 1"));
  EXPECT_NE(res2.status, SdpStatus::Optimal);
  SosResult res3 = solve_sos(single(r, "x - 2", std::pair{0.0, 1.0}));
  EXPECT_NE(res3.status, SdpStatus::Optimal);
}

TEST(SosSdpTest, StateBasisPrunesLinearTerms) {
  // 1 + x^2 u^2 - u is not nonnegative for all u near x = 0 beyond u > 1, so
  // no certificate exists; with u^2 added it is.
  auto r = make_ring({"t", "x", "u"});
  SosProgram p = single(r, "1 + u^2 - u");
  p.constraints[0].state_mask = mask(r, {"u"});
  EXPECT_EQ(solve_sos(p).status, SdpStatus::Optimal);
  SosProgram q = single(r, "1 + x^2*u^2 - u");
  q.constraints[0].state_mask = mask(r, {"u"});
  EXPECT_NE(solve_sos(q).status, SdpStatus::Optimal);
}

TEST(SosSdpTest, MarginMaximization) {
  // maximize s with x^2 - s*x + 1 >= 0  ->  s = 2.
  auto r = make_ring({"t", "x"});
  SosProgram p;
  p.ring = r;
  int s = p.vars.add(DecisionKind::Free, "s");
  AffinePoly poly = lift(parse_poly("x^2 + 1", r));
  poly -= mul(AffinePoly(r, AffineExpr::var(s)), parse_poly("x", r));
  p.constraints.push_back(SosConstraint{"c", poly, std::vector<bool>(r->size(), false), {}, {}, 0.0});
  p.objective = AffineExpr::var(s);
  p.normalize_trace = false;
  SosResult res = solve_sos(p);
  ASSERT_EQ(res.status, SdpStatus::Optimal);
  EXPECT_NEAR(res.z[s], 2.0, 1e-6);
}

AvoidSpec heat_spec(double gamma_sq) {
  AvoidSpec s;
  s.mode = AvoidMode::ForwardAllTime;
  s.kind = TimeKind::Forward;
  s.rhs = "u2";
  s.bcs = {{"u0_L", "0"}, {"u0_R", "0"}};
  s.unsafe = {std::to_string(gamma_sq) + " - u0^2"};
  s.initial = {"u1^2 - 1"};
  s.jet_order = 1;
  s.zeta_degree = 1;
  // Degree 4 slack certifies int u1^2 >= c int u^2 for c well above 2.
  s.kernel_degree = 4;
  return s;
}

double margin_of(const AvoidSpec& spec) {
  Assembly a = assemble_avoidance(spec);
  SosResult r = solve_sos(a.prog);
  return r.z[a.margin];
}

TEST(AssembleTest, HeatAllTime) {
  EXPECT_GT(margin_of(heat_spec(0.5)), 1e-4);
  EXPECT_LT(margin_of(heat_spec(0.05)), 1e-4);
}

TEST(AssembleTest, StaticSeparatedLevels) {
  AvoidSpec s;
  s.mode = AvoidMode::ForwardAllTime;
  s.kind = TimeKind::Forward;
  s.rhs = "0";
  s.unsafe = {"4 - u0^2"};
  s.initial = {"u0^2 - 1"};
  s.jet_order = 0;
  s.kernel_degree = 0;
  s.rhs_order = 0;
  Assembly a = assemble_avoidance(s);
  SosResult r = solve_sos(a.prog);
  EXPECT_GT(r.z[a.margin], 1e-4);
  // Overlapping sets cannot be separated.
  s.unsafe = {"0.5 - u0^2"};
  EXPECT_LT(margin_of(s), 1e-4);
}

TEST(AssembleTest, MultiplierSign) {
  Assembly a = assemble_avoidance(heat_spec(0.5));
  SosResult r = solve_sos(a.prog);
  for (const auto& m : a.multipliers) EXPECT_GE(r.z[m.n], -1e-9);  // stored as -n
}

TEST(AssembleTest, ModeMismatch) {
  AvoidSpec s = heat_spec(0.5);
  s.kind = TimeKind::Backward;
  EXPECT_THROW(assemble_avoidance(s), std::invalid_argument);
}

}  // namespace
}  // namespace barrier
