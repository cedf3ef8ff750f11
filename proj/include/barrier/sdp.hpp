#pragma once

// Primal-dual interior-point solver for block SDPs.
//
// Stored form (primal):  min <C,X>  s.t.  <A_i,X> = b_i,  X in K
// Dual:                  max b'y    s.t.  C - sum_i y_i A_i = S in K*
// K is a product of psd blocks, nonnegative orthants and free blocks
// (S is identically zero on free blocks).

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace barrier {

enum class BlockKind { Psd, Nonneg, Free };

struct BlockSpec {
  int size = 0;
  BlockKind kind = BlockKind::Psd;
};

// One stored entry of a symmetric block matrix.  For psd blocks row <= col and
// an off-diagonal entry stands for both (row,col) and (col,row).  For nonneg and
// free blocks only row is used (col == row).
template <typename Scalar>
struct SdpEntry {
  int block = 0;
  int row = 0;
  int col = 0;
  Scalar value = 0;
};

template <typename Scalar>
struct SdpProblem {
  std::vector<BlockSpec> blocks;
  std::vector<SdpEntry<Scalar>> C;
  std::vector<std::vector<SdpEntry<Scalar>>> A;
  std::vector<Scalar> b;

  int num_constraints() const { return static_cast<int>(A.size()); }

  int add_block(int size, BlockKind kind) {
    if (size <= 0) throw std::invalid_argument("block size must be positive");
    blocks.push_back({size, kind});
    return static_cast<int>(blocks.size()) - 1;
  }
  int add_constraint(Scalar rhs) {
    A.emplace_back();
    b.push_back(rhs);
    return num_constraints() - 1;
  }
  void validate() const;
};

enum class SdpStatus { Optimal, PrimalInfeasible, DualInfeasible, SlowProgress };

const char* to_string(SdpStatus s);

template <typename Scalar>
struct SdpSolution {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  SdpStatus status = SdpStatus::SlowProgress;
  Vec y;
  std::vector<Mat> X;  // psd: n x n; nonneg/free: n x 1
  std::vector<Mat> S;
  Scalar primal_objective = 0;
  Scalar dual_objective = 0;
  Scalar gap = 0;  // relative duality gap
  Scalar primal_residual = 0;
  Scalar dual_residual = 0;
  int iterations = 0;
};

template <typename Scalar>
struct SdpOptions {
  Scalar tol = Scalar(1e-8);
  int max_iter = 100;
  Scalar step_fraction = Scalar(0.98);
  bool verbose = false;
};

template <typename Scalar>
struct SdpResiduals {
  Scalar primal = 0;   // ||A(X) - b|| / (1 + ||b||)
  Scalar dual = 0;     // ||C - A*(y) - S|| / (1 + ||C||)
  Scalar gap = 0;      // |<C,X> - b'y| / (1 + |<C,X>| + |b'y|)
  Scalar farkas = 0;   // infeasibility certificate residual (0 when not applicable)
};

template <typename Scalar>
SdpResiduals<Scalar> residuals(const SdpProblem<Scalar>& p, const SdpSolution<Scalar>& sol);

template <typename Scalar>
SdpSolution<Scalar> solve(const SdpProblem<Scalar>& p, const SdpOptions<Scalar>& opt = {});

// Builds  min c'y  s.t.  sum_j y_j F_j - F0  in K  (the LMI form) as a stored
// problem: constraint j gets A_j = -F_j, C = -F0, b = -c.  The solution's y is
// then the LMI variable.
template <typename Scalar>
SdpProblem<Scalar> from_lmi(const std::vector<BlockSpec>& blocks, const std::vector<Scalar>& c,
                            const std::vector<std::vector<SdpEntry<Scalar>>>& F,
                            const std::vector<SdpEntry<Scalar>>& F0);

void write_sdp(std::ostream& os, const SdpProblem<double>& p);
SdpProblem<double> read_sdp(std::istream& is);

}  // namespace barrier

#include "barrier/sdp_impl.hpp"
