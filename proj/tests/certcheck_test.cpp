#include <gtest/gtest.h>

#include <fstream>
#include <numbers>
#include <sstream>

#include "barrier/certcheck.hpp"
#include "barrier/parser.hpp"

namespace barrier {
namespace {

std::string problem_path(const std::string& name) { return std::string(BARRIER_PROBLEMS_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double coeff_of(const Poly& p, const std::string& mono) {
  return p.coeff(parse_poly(mono, p.ring()).terms().begin()->first);
}

ProblemSpec option_problem() {
  ProblemSpec p;
  p.space = "s";
  p.hi = 100;
  p.horizon = 0.5;
  p.a = "0.5*0.2^2*s^2";
  p.b = "0.1*s";
  p.c = "0.1";
  p.f = "s - 40";
  p.right = "100";
  return p;
}

TEST(LoadCertificateTest, ScaledConstant) {
  Certificate c = load_certificate("[certificate]\nmode = backward\nscale = 1e-4\n[kernel]\nb = -705.7\n");
  ASSERT_EQ(c.kernel.size(), 1u);
  EXPECT_NEAR(c.kernel[0].constant_term(), -0.07057, 1e-12);
  Certificate d = load_certificate("[certificate]\nmode = backward\n[kernel]\nb = 1e-4*(-705.7)\n");
  EXPECT_NEAR(d.kernel[0].constant_term(), -0.07057, 1e-12);
}

TEST(LoadCertificateTest, EmptyTextIsAnError) {
  try {
    load_certificate("");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 0u);
  }
  EXPECT_THROW(load_certificate("   \n# only a comment\n"), ParseError);
}

TEST(LoadCertificateTest, ErrorPositionPointsIntoText) {
  const std::string text = "[certificate]\nmode = backward\n[kernel]\nb = 1 + * u0^2\n";
  try {
    load_certificate(text);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_GE(e.position(), text.find("1 +"));
    EXPECT_LT(e.position(), text.size());
  }
}

TEST(LoadCertificateTest, MatrixKernel) {
  Certificate c = load_certificate(slurp(problem_path("reaction_ref.cert")));
  ASSERT_EQ(c.matrix.size(), 1u);
  EXPECT_EQ(c.matrix[0].dim(), 2);
  EXPECT_NEAR(coeff_of(c.matrix[0](1, 1), "x^16"), -1.607e-4, 1e-12);
  EXPECT_NEAR(coeff_of(c.matrix[0](0, 0), "x^16"), -12.96e-4, 1e-12);
  ASSERT_TRUE(c.parameter.has_value());
  EXPECT_NEAR(*c.parameter, 1.195 * std::numbers::pi * std::numbers::pi, 1e-12);
}

TEST(LoadCertificateTest, ReferenceKernelsParse) {
  Certificate c = load_certificate(slurp(problem_path("blackscholes_ref.cert")));
  ASSERT_EQ(c.kernel.size(), 1u);
  EXPECT_NEAR(coeff_of(c.kernel[0], "u0^2"), -0.07057, 1e-12);
  EXPECT_TRUE(c.physical_time);
  Certificate d = load_certificate(slurp(problem_path("stochres_ref.cert")));
  EXPECT_NEAR(coeff_of(d.kernel[0], "u0^2"), -1.895e-4, 1e-12);
}

TEST(LoadCertificateTest, RoundTrip) {
  Certificate c = load_certificate(
      "[certificate]\nmode = backward\ngamma = 17.5\nbreaks = 0.8\n[kernel 0]\nb = (1 - x + 2*t*x^2)*u0^2 + u0\n"
      "[kernel 1]\nb = 3*u0^2\n");
  Certificate d = load_certificate(write_certificate(c));
  ASSERT_EQ(d.kernel.size(), 2u);
  for (int i = 0; i < 2; ++i) EXPECT_TRUE((d.kernel[i] - c.kernel[i]).is_zero());
  EXPECT_EQ(d.breaks, c.breaks);
  EXPECT_EQ(*d.gamma, 17.5);
  EXPECT_EQ(write_certificate(d), write_certificate(c));
}

TEST(CheckCertificateTest, SynthesizedPassesAndZeroFails) {
  ProblemSpec p = option_problem();
  Degrees d;
  d.kernel = 6;
  Probe pr = probe(p, d, 20.0, {});
  ASSERT_TRUE(pr.feasible);
  ASSERT_TRUE(pr.cert.has_value());
  Certificate c = load_certificate(write_certificate(*pr.cert));
  CheckReport rep = check_certificate(p, c);
  EXPECT_TRUE(rep.pass) << format_report(rep);
  EXPECT_GE(rep.grid_margin, -1e-6);

  Certificate z = c;
  for (auto& k : z.kernel) k = Poly(k.ring());
  CheckReport zr = check_certificate(p, z);
  EXPECT_FALSE(zr.pass);
  EXPECT_TRUE(zr.degenerate);
}

TEST(CheckCertificateTest, GridDensityDrift) {
  ProblemSpec p = option_problem();
  Degrees d;
  d.kernel = 6;
  Probe pr = probe(p, d, 20.0, {});
  ASSERT_TRUE(pr.cert.has_value());
  CheckOptions o;
  o.grid = 100;
  CheckReport a = check_certificate(p, *pr.cert, o);
  o.grid = 200;
  CheckReport b = check_certificate(p, *pr.cert, o);
  for (std::size_t i = 0; i < a.inequalities.size(); ++i) {
    double x = a.inequalities[i].min_eig, y = b.inequalities[i].min_eig;
    EXPECT_LE(std::abs(x - y), 0.1 * std::max(std::abs(x), std::abs(y)) + 1e-6) << a.inequalities[i].label;
  }
}

}  // namespace
}  // namespace barrier
