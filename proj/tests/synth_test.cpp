#include <gtest/gtest.h>

#include "barrier/certcheck.hpp"
#include "barrier/synth.hpp"

namespace barrier {
namespace {

ProblemSpec zero_functional() {
  ProblemSpec p;
  p.a = "x^2/2";
  return p;
}

ProblemSpec heat_family(double k) {
  ProblemSpec p;
  p.orientation = TimeKind::Forward;
  p.constants["k"] = k;
  p.rhs = "u2 - k*u0";
  p.initial_set = "u0^2 - 1";
  p.unsafe_set = "4 - u0^2";
  return p;
}

TEST(BoundTest, ZeroFunctionalBoundsNearZero) {
  Degrees d;
  d.kernel = 2;
  BoundResult r = bound_functional(zero_functional(), d, 0.0, 1.0, 1e-2);
  ASSERT_TRUE(r.verified) << r.diagnostics;
  EXPECT_GE(r.gamma, 0.0);
  EXPECT_LE(r.gamma, 0.05);
  ASSERT_TRUE(r.cert.has_value());
  EXPECT_TRUE(check_certificate(zero_functional(), *r.cert).pass);
}

TEST(BoundTest, BracketNeverInverts) {
  Degrees d;
  d.kernel = 2;
  BoundResult r = bound_functional(zero_functional(), d, 0.0, 1.0, 1e-2);
  double lo = -1e300, hi = 1e300;
  for (auto [g, m] : r.trace) {
    (m >= SynthOptions{}.eps ? hi : lo) = g;
    EXPECT_LT(lo, hi);
  }
}

TEST(BoundTest, RejectsForwardProblems) {
  EXPECT_THROW(bound_functional(heat_family(0.0), Degrees{}, 0.0, 1.0, 0.1), std::invalid_argument);
}

TEST(AvoidTest, IntersectingSetsAreUnverified) {
  ProblemSpec p = heat_family(0.0);
  p.unsafe_set = "u0^2 + u1^2 - 4";  // W1 ball of radius 2 contains U0
  Degrees d;
  d.kernel = 2;
  d.jet_order = 1;
  EXPECT_FALSE(verify_avoidance(p, d).has_value());
}

TEST(AvoidTest, DissipativeHeatIsCertified) {
  Degrees d;
  d.kernel = 2;
  Probe detail;
  auto cert = verify_avoidance(heat_family(1.0), d, {}, &detail);
  ASSERT_TRUE(cert.has_value()) << detail.margin;
  EXPECT_TRUE(check_certificate(heat_family(1.0), load_certificate(write_certificate(*cert))).pass);
}

TEST(ParameterTest, LowEndMustBeFeasible) {
  Degrees d;
  d.kernel = 2;
  auto family = [](double k) {
    ProblemSpec p = heat_family(0.0);
    p.rhs = "u2 + " + std::to_string(k) + "*u0";
    p.unsafe_set = "u0^2 + u1^2 - 4";
    return p;
  };
  ParameterResult r = max_parameter(family, 0.0, 1.0, d, 0.1);
  EXPECT_FALSE(r.verified);
  EXPECT_FALSE(r.diagnostics.empty());
}

}  // namespace
}  // namespace barrier
