#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "barrier/problem_file.hpp"

namespace barrier {
namespace {

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(BARRIER_PROBLEMS_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t error_pos(const std::string& text) {
  try {
    parse_problem_file(text);
  } catch (const ParseError& e) {
    return e.position();
  }
  ADD_FAILURE() << "expected a parse error";
  return 0;
}

TEST(ProblemFileTest, ShippedFilesParse) {
  ProblemFile bs = parse_problem_file(slurp("blackscholes.prob"));
  EXPECT_EQ(bs.spec.orientation, TimeKind::Backward);
  EXPECT_EQ(bs.spec.space, "s");
  EXPECT_EQ(bs.spec.hi, 100.0);
  EXPECT_EQ(bs.spec.horizon, 0.5);
  EXPECT_EQ(bs.spec.constants.at("K"), 40.0);
  EXPECT_EQ(bs.degrees.kernel, 6);

  ProblemFile sr = parse_problem_file(slurp("stochres.prob"));
  EXPECT_EQ(sr.spec.target, Target::Point);
  EXPECT_EQ(sr.spec.point, 4.0);
  EXPECT_EQ(sr.degrees.kernel, 8);
  EXPECT_TRUE(sr.bridge);

  ProblemFile re = parse_problem_file(slurp("reaction.prob"));
  EXPECT_EQ(re.spec.orientation, TimeKind::Forward);
  EXPECT_FALSE(re.spec.t0.has_value());
  EXPECT_EQ(re.param, "lambda");
  EXPECT_EQ(re.initial.size(), 4u);
  EXPECT_NEAR(re.spec.constants.at("lambda"), 1.19 * std::numbers::pi * std::numbers::pi, 1e-12);
}

TEST(ProblemFileTest, MissingTerminalIsAnError) {
  std::string text = slurp("blackscholes.prob");
  auto at = text.find("[terminal]");
  text.erase(at, text.find("[target]") - at);
  EXPECT_THROW(parse_problem_file(text), ParseError);
}

TEST(ProblemFileTest, Validation) {
  const std::string head = "[problem]\norientation = backward\nhorizon = 1\n";
  EXPECT_THROW(parse_problem_file(""), ParseError);
  EXPECT_THROW(parse_problem_file(head + "domain = 1, 0\n[dynamics]\na = 1\n[terminal]\nf = x\n"), ParseError);
  EXPECT_THROW(parse_problem_file(head + "domain = 0, inf\n[dynamics]\na = 1\n[terminal]\nf = x\n"), ParseError);
  EXPECT_NO_THROW(parse_problem_file(head + "domain = 0, 1\n[dynamics]\na = 1\n[terminal]\nf = x\n"));
  std::string bad = head + "domain = 0, 1\n[dynamics]\na = 1 + y\n[terminal]\nf = x\n";
  EXPECT_EQ(error_pos(bad), bad.find("y\n"));
  std::string unknown = head + "domain = 0, 1\ncolour = red\n";
  EXPECT_EQ(error_pos(unknown), unknown.find("colour"));
}

TEST(ProblemFileTest, ParametersAndOverrides) {
  ProblemFile pf = parse_problem_file(
      "[problem]\norientation = forward\ndomain = 0, 1\n[parameters]\nk = 2\nm = k^2\n[dynamics]\nrhs = u2 - m*u0\n"
      "[initial_set]\ng = u0^2 - 1\n[target]\nunsafe = 4 - u0^2\n");
  EXPECT_EQ(pf.spec.constants.at("m"), 4.0);
  EXPECT_EQ(with_parameter(pf.spec, "m", 7.0).constants.at("m"), 7.0);
}

}  // namespace
}  // namespace barrier
