#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "barrier/jetform.hpp"
#include "barrier/parser.hpp"

namespace barrier {
namespace {

struct Heat {
  JetSpace js{{state_field("u", 6)}};
  Dynamics dyn;
  Heat() {
    dyn.kind = TimeKind::Forward;
    dyn.field = 0;
    dyn.rhs = P("u2");
    dyn.bcs = {pin(js, 0, 0, 0.0, Poly(js.ring())), pin(js, 0, 0, 1.0, Poly(js.ring()))};
  }
  Poly P(const std::string& s) const { return parse_poly(s, js.ring()); }
};

void expect_same(const Poly& a, const Poly& b, double tol = 1e-12) {
  EXPECT_LE(max_abs_coeff(a - b), tol) << to_string(a) << " vs " << to_string(b);
}

// Smooth polynomial state of degree <= 6 in x, affine in t, vanishing at 0 and 1
// when dirichlet is set.
Poly random_state(const JetSpace& js, std::mt19937& rng, bool dirichlet) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const RingPtr& r = js.ring();
  Poly x = Poly::variable(r, "x"), t = Poly::variable(r, "t");
  Poly u(r);
  int top = dirichlet ? 4 : 6;
  for (int k = 0; k <= top; ++k) u += mul(Poly(r, U(rng)) + t * U(rng), pow(x, k));
  if (dirichlet) u = mul(mul(u, x), Poly(r, 1.0) - x);
  return u;
}

TEST(JetTest, SpaceLayout) {
  JetSpace js({state_field("u", 2), aux_field(1)}, {0.8});
  EXPECT_EQ(js.ring()->name(0), "t");
  EXPECT_EQ(js.ring()->name(1), "x");
  EXPECT_EQ(js.ring()->name(js.jet("u", 2)), "u2");
  EXPECT_EQ(js.ring()->name(js.jet("v1", 1)), "dv1");
  EXPECT_EQ(js.points().size(), 3u);
  EXPECT_EQ(js.ring()->name(js.boundary(0, 1, 0.8)), "u1_B1");
  EXPECT_EQ(js.ring()->name(js.boundary(0, 0, 1.0)), "u0_R");
  EXPECT_THROW(js.boundary(0, 0, 0.5), std::invalid_argument);
  EXPECT_THROW(js.jet(0, 3), std::out_of_range);
  auto b = js.boundary_of(js.boundary(1, 0, 0.0));
  ASSERT_TRUE(b.has_value());
  EXPECT_EQ(b->first, 1);
  EXPECT_FALSE(js.jet_of(js.t()).has_value());
}

TEST(JetTest, HeatDissipation) {
  Heat h;
  Form B(h.js.ring());
  B.bulk[0] = h.P("u1^2");
  Form dB = lie_derivative(B, h.dyn, h.js);
  expect_same(dB.bulk[0], h.P("2*u1*u3"));
  Form r = apply_bcs(integrate_by_parts(dB, 2, h.js), derived_relations(h.dyn, h.js), h.js);
  expect_same(r.bulk[0], h.P("-2*u2^2"));
  EXPECT_TRUE(r.boundary.is_zero()) << to_string(r.boundary);
}

TEST(JetTest, ConstantKernel) {
  Heat h;
  Form B(h.js.ring());
  B.bulk[0] = h.P("3");
  Form dB = lie_derivative(B, h.dyn, h.js);
  EXPECT_TRUE(dB.bulk[0].is_zero());
}

TEST(JetTest, LinearGrowth) {
  Heat h;
  Dynamics d = h.dyn;
  d.rhs = h.P("2*u0");  // lambda = 2
  Form B(h.js.ring());
  B.bulk[0] = h.P("(1+t^2)*u0^2");
  Form dB = lie_derivative(B, d, h.js);
  expect_same(dB.bulk[0], h.P("(2*t + 4*(1+t^2))*u0^2"));
}

TEST(JetTest, BackwardOrientation) {
  Heat h;
  Dynamics d = h.dyn;
  d.kind = TimeKind::Backward;
  d.rhs = h.P("u2");  // -du/dt = u2
  Form B(h.js.ring());
  B.bulk[0] = h.P("u0");
  expect_same(lie_derivative(B, d, h.js).bulk[0], h.P("-u2"));
}

TEST(JetTest, IbpIdentities) {
  Heat h;
  Form f(h.js.ring());
  f.bulk[0] = h.P("u0*u2");
  Form g = integrate_by_parts(f, 1, h.js);
  expect_same(g.bulk[0], h.P("-u1^2"));
  expect_same(g.boundary, h.P("u0_R*u1_R - u0_L*u1_L"));

  Form k(h.js.ring());
  k.bulk[0] = h.P("u1^2");
  IbpReport rep;
  Form k2 = integrate_by_parts(k, 1, h.js, &rep);
  expect_same(k2.bulk[0], k.bulk[0]);
  EXPECT_TRUE(rep.reached);

  Form c(h.js.ring());
  c.bulk[0] = h.P("2*u0*u0*u1");
  Form c2 = integrate_by_parts(c, 0, h.js);
  EXPECT_TRUE(c2.bulk[0].is_zero());
  expect_same(c2.boundary, h.P("2/3*u0_R^3 - 2/3*u0_L^3"));
}

TEST(JetTest, IbpReportsUnreachable) {
  Heat h;
  Form f(h.js.ring());
  f.bulk[0] = h.P("u2^2");
  IbpReport rep;
  Form g = integrate_by_parts(f, 1, h.js, &rep);
  EXPECT_FALSE(rep.reached);
  EXPECT_EQ(rep.remaining_order[0], 2);
  expect_same(g.bulk[0], f.bulk[0]);
}

TEST(JetTest, ApplyBcsExamples) {
  Heat h;
  Form f(h.js.ring());
  f.boundary = h.P("u0_R*u1_R - u0_L*u1_L");
  EXPECT_TRUE(apply_bcs(f, h.dyn.bcs, h.js).boundary.is_zero());

  Form g(h.js.ring());
  g.boundary = h.P("u0_R^2 - u0_L^2");
  std::vector<BoundaryRelation> bc{pin(h.js, 0, 0, 1.0, h.P("625"))};
  Form g2 = apply_bcs(g, bc, h.js);
  expect_same(g2.boundary, h.P("390625 - u0_L^2"), 1e-6);
  Form g3 = apply_bcs(g2, bc, h.js);
  expect_same(g3.boundary, g2.boundary);

  Form none(h.js.ring());
  none.bulk[0] = h.P("u0^2");
  expect_same(apply_bcs(none, bc, h.js).bulk[0], none.bulk[0]);

  std::vector<BoundaryRelation> bad{pin(h.js, 0, 0, 1.0, h.P("1")), pin(h.js, 0, 0, 1.0, h.P("2"))};
  EXPECT_THROW(apply_bcs(g, bad, h.js), std::invalid_argument);
}

TEST(JetTest, LinearCombinationBcs) {
  Heat h;
  // Robin-type u1(0) = 2 u0(0) + t and u0(1) = u0(0).
  std::vector<BoundaryRelation> bc{
      BoundaryRelation{{{h.js.boundary(0, 1, 0.0), 1.0}, {h.js.boundary(0, 0, 0.0), -2.0}}, h.P("t")},
      BoundaryRelation{{{h.js.boundary(0, 0, 1.0), 1.0}, {h.js.boundary(0, 0, 0.0), -1.0}}, Poly(h.js.ring())}};
  Form f(h.js.ring());
  f.boundary = h.P("u1_L + u0_R");
  Form g = apply_bcs(f, bc, h.js);
  EXPECT_EQ(g.boundary.degree_in(h.js.boundary_mask()), 1);
  Form g2 = apply_bcs(g, bc, h.js);
  expect_same(g.boundary, g2.boundary);
}

TEST(JetTest, DerivedRelations) {
  Heat h;
  auto rel = derived_relations(h.dyn, h.js);
  ASSERT_EQ(rel.size(), 4u);  // u2 = 0 at both ends
  Form f(h.js.ring());
  f.boundary = h.P("u2_L + u2_R*u1_R");
  EXPECT_TRUE(apply_bcs(f, rel, h.js).boundary.is_zero());
}

TEST(JetTest, PointEvaluation) {
  Heat h;
  Dynamics d = h.dyn;
  d.bcs = {pin(h.js, 0, 0, 0.0, Poly(h.js.ring()))};
  JetSpace js2({state_field("u", 2)}, {0.8});
  Dynamics d2;
  d2.rhs = parse_poly("u2", js2.ring());
  d2.bcs = {pin(js2, 0, 0, 0.0, Poly(js2.ring()))};
  Form f = point_eval_functional(0.8, d2, js2);
  ASSERT_EQ(f.pieces(), 2);
  EXPECT_DOUBLE_EQ(f.breaks[1], 0.8);
  Poly u = parse_poly("x^2", js2.ring());
  EXPECT_NEAR(evaluate(f, js2, {{0, u}}, 0.0), 0.64, 1e-12);

  Form one = point_eval_functional(1.0, d, h.js);
  EXPECT_NEAR(evaluate(one, h.js, {{0, h.P("x^3 + 2*x")}}, 0.0), 3.0, 1e-12);
  Form zero = point_eval_functional(0.0, d, h.js);
  EXPECT_TRUE(zero.bulk[0].is_zero());
  EXPECT_TRUE(zero.scalar.is_zero());

  Dynamics free = d;
  free.bcs.clear();
  EXPECT_THROW(point_eval_functional(0.5, free, h.js), std::invalid_argument);
}

TEST(JetTest, AnchoredAtRightEnd) {
  JetSpace js({state_field("u", 2)}, {0.25});
  Dynamics d;
  d.rhs = parse_poly("u2", js.ring());
  d.bcs = {pin(js, 0, 0, 1.0, parse_poly("1", js.ring()))};
  Form f = point_eval_functional(0.25, d, js);
  // u = 1 + (x-1)*x satisfies u(1) = 1; u(0.25) = 1 - 0.1875.
  EXPECT_NEAR(evaluate(f, js, {{0, parse_poly("1 + (x-1)*x", js.ring())}}, 0.0), 0.8125, 1e-12);
}

TEST(JetTest, RandomStateEquivalence) {
  Heat h;
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const std::vector<std::string> kernels = {"u0*u2", "x*u1*u3 + t*u0^2*u2", "u0^2*u1*u2", "(1+x^2)*u1*u2^2",
                                            "u0*u1*u4"};
  for (int trial = 0; trial < 20; ++trial) {
    Form f(h.js.ring());
    f.bulk[0] = h.P(kernels[trial % kernels.size()]) * (1.0 + U(rng));
    Poly u = random_state(h.js, rng, true);
    double t = 0.5 * (1.0 + U(rng));
    double before = evaluate(f, h.js, {{0, u}}, t);
    Form g = integrate_by_parts(f, 1, h.js);
    double mid = evaluate(g, h.js, {{0, u}}, t);
    Form k = apply_bcs(g, h.dyn.bcs, h.js);
    double after = evaluate(k, h.js, {{0, u}}, t);
    double scale = std::max(1.0, std::abs(before));
    EXPECT_NEAR(mid, before, 1e-9 * scale) << trial;
    EXPECT_NEAR(after, before, 1e-9 * scale) << trial;
    Form k2 = apply_bcs(k, h.dyn.bcs, h.js);
    expect_same(k2.boundary, k.boundary);
  }
}

TEST(JetTest, LieDerivativeMatchesExactFlow) {
  // u(t,x) = exp(-pi^2 t) sin(pi x) solves the heat equation; approximate it by
  // its Taylor polynomial is not exact, so use u = exp(lambda t) * p(x) for
  // the linear growth dynamics instead and compare with a finite difference.
  Heat h;
  Dynamics d = h.dyn;
  d.rhs = h.P("3*u0");
  Form B(h.js.ring());
  B.bulk[0] = h.P("(1+x)*u0^2 + t*u1^2");
  Form dB = lie_derivative(B, d, h.js);
  Poly p = h.P("x*(1-x)*(2+x)");
  auto state = [&](double t) { return p * std::exp(3.0 * t); };
  double t0 = 0.3, delta = 1e-5;
  double fd = (evaluate(B, h.js, {{0, state(t0 + delta)}}, t0 + delta) -
               evaluate(B, h.js, {{0, state(t0 - delta)}}, t0 - delta)) /
              (2 * delta);
  double exact = evaluate(dB, h.js, {{0, state(t0)}}, t0);
  EXPECT_NEAR(fd, exact, 1e-5 * std::abs(exact));
}

TEST(JetTest, FormAlgebra) {
  Heat h;
  Form a(h.js.ring());
  a.bulk[0] = h.P("u0");
  Form b(h.js.ring(), {0.0, 0.5, 1.0});
  b.bulk[1] = h.P("u0");
  Form s = a + b;
  ASSERT_EQ(s.pieces(), 2);
  Poly u = h.P("1");
  EXPECT_NEAR(evaluate(s, h.js, {{0, u}}, 0.0), 1.5, 1e-14);
  AffineForm af = lift(s);
  af.scalar += AffinePoly(h.js.ring(), AffineExpr::var(0, 2.0));
  Form back = evaluate_decisions(af, {0.25});
  EXPECT_NEAR(evaluate(back, h.js, {{0, u}}, 0.0), 2.0, 1e-14);
}

}  // namespace
}  // namespace barrier
