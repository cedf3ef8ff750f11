#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <random>
#include <vector>

#include "barrier/sdp.hpp"

namespace barrier::testing {

inline Eigen::MatrixXd random_pd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd R(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) R(i, j) = g(rng);
  return R * R.transpose() / n + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

// Reverse-engineered instance: X0, S0 interior, y0 arbitrary, so (X0, y0, S0)
// is feasible for both sides and the optimum is finite.
inline SdpProblem<double> random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nblocks(1, 3), bsize(1, 30), coin(0, 3);
  std::normal_distribution<double> g;
  SdpProblem<double> p;
  std::vector<Eigen::MatrixXd> X0, S0;
  int nb = nblocks(rng);
  int dim = 0;
  for (int k = 0; k < nb; ++k) {
    int n = bsize(rng);
    if (coin(rng) == 0) {
      p.add_block(n, BlockKind::Nonneg);
      Eigen::VectorXd x(n), s(n);
      for (int i = 0; i < n; ++i) {
        x(i) = 0.1 + std::abs(g(rng));
        s(i) = 0.1 + std::abs(g(rng));
      }
      X0.push_back(x);
      S0.push_back(s);
      dim += n;
    } else {
      p.add_block(n, BlockKind::Psd);
      X0.push_back(random_pd(n, rng));
      S0.push_back(random_pd(n, rng));
      dim += n * (n + 1) / 2;
    }
  }
  int m = std::uniform_int_distribution<int>(1, std::min(200, dim))(rng);
  Eigen::VectorXd y0(m);
  for (int i = 0; i < m; ++i) y0(i) = g(rng);
  std::vector<Eigen::MatrixXd> C = S0;
  for (int i = 0; i < m; ++i) {
    double bi = 0;
    auto& row = p.A.emplace_back();
    for (int k = 0; k < nb; ++k) {
      int n = p.blocks[k].size;
      bool psd = p.blocks[k].kind == BlockKind::Psd;
      for (int r = 0; r < n; ++r)
        for (int c = psd ? r : r; c < (psd ? n : r + 1); ++c) {
          if (coin(rng) != 0) continue;  // about a quarter of entries present
          double v = g(rng);
          row.push_back({k, r, c, v});
          if (psd) {
            bi += v * (r == c ? X0[k](r, r) : 2 * X0[k](r, c));
            C[k](r, c) += y0(i) * v;
            if (r != c) C[k](c, r) += y0(i) * v;
          } else {
            bi += v * X0[k](r, 0);
            C[k](r, 0) += y0(i) * v;
          }
        }
    }
    p.b.push_back(bi);
  }
  for (int k = 0; k < nb; ++k) {
    int n = p.blocks[k].size;
    bool psd = p.blocks[k].kind == BlockKind::Psd;
    for (int r = 0; r < n; ++r)
      for (int c = r; c < (psd ? n : r + 1); ++c)
        if (C[k](r, psd ? c : 0) != 0.0) p.C.push_back({k, r, c, C[k](r, psd ? c : 0)});
  }
  return p;
}

}  // namespace barrier::testing
