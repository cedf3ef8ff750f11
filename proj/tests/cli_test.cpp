#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace {

namespace fs = std::filesystem;

const std::string kProblems = BARRIER_PROBLEMS_DIR;
const std::string kData = BARRIER_TEST_DATA_DIR;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("barrier_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Exit status of the CLI; stdout goes to out_, stderr to err_.
  int run(const std::string& args) {
    std::string cmd = std::string("\"") + BARRIER_CLI + "\" " + args + " > \"" + (dir_ / "out").string() + "\" 2> \"" +
                      (dir_ / "err").string() + "\"";
    int st = std::system(cmd.c_str());
    out_ = slurp(dir_ / "out");
    err_ = slurp(dir_ / "err");
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
  std::string out_, err_;
};

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("bound"), 1);
  EXPECT_EQ(run("bound " + path("missing.prob")), 1);
  EXPECT_EQ(run("frobnicate x"), 1);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(CliTest, MissingTerminalSection) {
  std::string text = slurp(kProblems + "/blackscholes.prob");
  auto at = text.find("[terminal]");
  text.erase(at, text.find("[target]") - at);
  std::ofstream(path("no_terminal.prob")) << text;
  EXPECT_EQ(run("bound " + path("no_terminal.prob")), 1);
  EXPECT_NE(err_.find("[terminal]"), std::string::npos) << err_;
}

TEST_F(CliTest, ParseErrorsCarryLineAndColumn) {
  std::ofstream(path("bad.prob")) << "[problem]\norientation = backward\ndomain = 0, 1\nhorizon = 1\n"
                                     "[dynamics]\na = 1 + y\n[terminal]\nf = x\n";
  EXPECT_EQ(run("bound " + path("bad.prob")), 1);
  EXPECT_NE(err_.find("bad.prob:6:9"), std::string::npos) << err_;
}

TEST_F(CliTest, ZeroCertificateFails) {
  EXPECT_EQ(run("check " + kProblems + "/blackscholes.prob " + kData + "/zero.cert"), 2);
  EXPECT_NE(out_.find("FAIL"), std::string::npos);
}

TEST_F(CliTest, IntersectingSetsAreUnverified) {
  EXPECT_EQ(run("avoid " + kData + "/intersecting.prob --out " + path("c.cert")), 2);
  EXPECT_NE(out_.find("Unverified"), std::string::npos);
}

TEST_F(CliTest, AvoidWritesCertificateThatChecks) {
  ASSERT_EQ(run("avoid " + kData + "/dissipative.prob --out " + path("d.cert")), 0) << out_ << err_;
  EXPECT_NE(out_.find("certificate: " + path("d.cert")), std::string::npos);
  EXPECT_NE(out_.find("audit: PASS"), std::string::npos);
  EXPECT_EQ(run("check " + kData + "/dissipative.prob " + path("d.cert")), 0) << out_;
}

TEST_F(CliTest, ParameterSearch) {
  ASSERT_EQ(run("avoid " + kData + "/dissipative.prob --param-search 0:2 --bisect-tol 0.5 --out " + path("p.cert")), 0)
      << out_ << err_;
  EXPECT_NE(out_.find("k_max >= "), std::string::npos);
}

TEST_F(CliTest, OracleCsvIsReproducible) {
  const std::string args = "oracle " + kProblems + "/blackscholes.prob --grid 40,40 --paths 400 --seed 3 --out ";
  ASSERT_EQ(run(args + path("a.csv")), 0) << err_;
  std::string first = out_;
  ASSERT_EQ(run(args + path("b.csv")), 0);
  std::string a = slurp(path("a.csv")), b = slurp(path("b.csv"));
  EXPECT_EQ(a, b);
  EXPECT_EQ(first.substr(0, first.find("csv:")), out_.substr(0, out_.find("csv:")));
  EXPECT_EQ(a.rfind("t,average\n", 0), 0u);
  EXPECT_EQ(a.find('\r'), std::string::npos);
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 42);
}

TEST_F(CliTest, ForwardOracleSeries) {
  ASSERT_EQ(run("oracle " + kProblems + "/reaction.prob --grid 40,40 --out " + path("r.csv")), 0) << err_;
  std::string csv = slurp(path("r.csv"));
  EXPECT_EQ(csv.rfind("t,w1_ic1,w1_ic2,w1_ic3,w1_ic4\n", 0), 0u);
}

}  // namespace
