#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "barrier/sdp.hpp"
#include "random_sdp.hpp"

namespace barrier {
namespace {

using barrier::testing::random_instance;

using E = SdpEntry<double>;

TEST(SdpTest, NonnegativeScalar) {
  // min y s.t. y >= 0 as a 1x1 LMI.
  auto p = from_lmi<double>({{1, BlockKind::Psd}}, {1.0}, {{{0, 0, 0, 1.0}}}, {});
  auto s = solve(p);
  ASSERT_EQ(s.status, SdpStatus::Optimal);
  EXPECT_NEAR(s.y(0), 0.0, 1e-7);
}

TEST(SdpTest, MaxEigenvalue) {
  // min y s.t. y I - diag(1,2) psd.
  auto p = from_lmi<double>({{2, BlockKind::Psd}}, {1.0}, {{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}},
                            {{0, 0, 0, 1.0}, {0, 1, 1, 2.0}});
  auto s = solve(p);
  ASSERT_EQ(s.status, SdpStatus::Optimal);
  EXPECT_NEAR(s.y(0), 2.0, 1e-7);
}

TEST(SdpTest, DeterminantCondition) {
  // [[1,y],[y,1]] psd, minimize -y.
  auto p = from_lmi<double>({{2, BlockKind::Psd}}, {-1.0}, {{{0, 0, 1, 1.0}}}, {{0, 0, 0, -1.0}, {0, 1, 1, -1.0}});
  auto s = solve(p);
  ASSERT_EQ(s.status, SdpStatus::Optimal);
  EXPECT_NEAR(s.y(0), 1.0, 1e-6);
}

TEST(SdpTest, ResidualsOfOptimalAndPerturbed) {
  auto p = from_lmi<double>({{2, BlockKind::Psd}}, {1.0}, {{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}},
                            {{0, 0, 0, 1.0}, {0, 1, 1, 2.0}});
  auto s = solve(p);
  auto r = residuals(p, s);
  EXPECT_LE(r.primal, 1e-8);
  EXPECT_LE(r.dual, 1e-8);
  EXPECT_LE(r.gap, 1e-8);
  auto bad = s;
  bad.y(0) += 1e-2;
  auto rb = residuals(p, bad);
  EXPECT_GT(rb.gap, 1e-3);
  EXPECT_GT(rb.dual, 1e-3);
}

TEST(SdpTest, InfeasibleDetected) {
  // x = -1 with x in a 1x1 psd block.
  SdpProblem<double> p;
  p.add_block(1, BlockKind::Psd);
  p.add_constraint(-1.0);
  p.A[0].push_back({0, 0, 0, 1.0});
  auto s = solve(p);
  EXPECT_EQ(s.status, SdpStatus::PrimalInfeasible);
  auto r = residuals(p, s);
  EXPECT_LT(r.farkas, 1e-6);
}

TEST(SdpTest, UnboundedDetected) {
  // min -x s.t. x - z = 0, x >= 0, z >= 0 : unbounded primal.
  SdpProblem<double> p;
  p.add_block(2, BlockKind::Nonneg);
  p.C.push_back({0, 0, 0, -1.0});
  p.add_constraint(0.0);
  p.A[0].push_back({0, 0, 0, 1.0});
  p.A[0].push_back({0, 1, 1, -1.0});
  auto s = solve(p);
  EXPECT_EQ(s.status, SdpStatus::DualInfeasible);
}

TEST(SdpTest, FreeAndNonnegBlocks) {
  // min f  s.t.  f - x = 1, x >= 0 (nonneg), f free: optimum f = 1.
  SdpProblem<double> p;
  int fb = p.add_block(1, BlockKind::Free);
  int nb = p.add_block(1, BlockKind::Nonneg);
  p.C.push_back({fb, 0, 0, 1.0});
  p.add_constraint(1.0);
  p.A[0].push_back({fb, 0, 0, 1.0});
  p.A[0].push_back({nb, 0, 0, -1.0});
  auto s = solve(p);
  ASSERT_EQ(s.status, SdpStatus::Optimal);
  EXPECT_NEAR(s.X[fb](0, 0), 1.0, 1e-7);
}

TEST(SdpTest, FiftyRandomFeasibleInstances) {
  std::mt19937_64 rng(20240601);
  SdpOptions<double> opt;
  opt.tol = 1e-8;
  opt.max_iter = 100;
  for (int trial = 0; trial < 50; ++trial) {
    auto p = random_instance(rng);
    auto s = solve(p, opt);
    EXPECT_EQ(s.status, SdpStatus::Optimal) << "trial " << trial;
    EXPECT_LE(s.gap, 1e-7) << "trial " << trial;
    EXPECT_LE(s.iterations, 100);
    auto r = residuals(p, s);
    EXPECT_LE(r.primal, 10 * opt.tol);
    EXPECT_LE(r.dual, 10 * opt.tol);
    for (std::size_t k = 0; k < p.blocks.size(); ++k) {
      if (p.blocks[k].kind != BlockKind::Psd) continue;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.X[k]);
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
    }
  }
}

TEST(SdpTest, Deterministic) {
  std::mt19937_64 rng(3);
  auto p = random_instance(rng);
  auto a = solve(p), b = solve(p);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.y, b.y);
}

TEST(SdpTest, TextRoundTrip) {
  std::mt19937_64 rng(9);
  auto p = random_instance(rng);
  std::stringstream ss;
  write_sdp(ss, p);
  auto q = read_sdp(ss);
  ASSERT_EQ(q.num_constraints(), p.num_constraints());
  auto a = solve(p), b = solve(q);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_NEAR(a.primal_objective, b.primal_objective, 1e-9 * (1 + std::abs(a.primal_objective)));
  std::stringstream bad("sdp\nblocks 1\ncone 3\n");
  EXPECT_THROW(read_sdp(bad), std::runtime_error);
}

TEST(SdpTest, LongDoubleInstantiation) {
  auto p = from_lmi<long double>({{2, BlockKind::Psd}}, {1.0L}, {{{0, 0, 0, 1.0L}, {0, 1, 1, 1.0L}}},
                                 {{0, 0, 0, 1.0L}, {0, 1, 1, 2.0L}});
  auto s = solve(p);
  ASSERT_EQ(s.status, SdpStatus::Optimal);
  EXPECT_NEAR(static_cast<double>(s.y(0)), 2.0, 1e-7);
}

}  // namespace
}  // namespace barrier
