#pragma once

// Implementation details of the interior-point solver declared in sdp.hpp.
// NT scaling, Mehrotra predictor-corrector, augmented system for free blocks.

#include <cstdio>

namespace barrier {

namespace sdp_detail {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct Ent {
  int r, c;
  Scalar v;
};

// <A, M> for A given by stored entries (off-diagonals counted twice).
template <typename Scalar>
Scalar inner(const std::vector<Ent<Scalar>>& a, const Mat<Scalar>& M) {
  Scalar s = 0;
  for (const auto& e : a) s += e.v * (e.r == e.c ? M(e.r, e.r) : M(e.r, e.c) + M(e.c, e.r));
  return s;
}

template <typename Scalar>
void add_to(Mat<Scalar>& M, const std::vector<Ent<Scalar>>& a, Scalar alpha) {
  for (const auto& e : a) {
    M(e.r, e.c) += alpha * e.v;
    if (e.r != e.c) M(e.c, e.r) += alpha * e.v;
  }
}

// tr(E_e W E_f W) for elementary symmetric matrices.
template <typename Scalar>
Scalar trace_ewew(const Ent<Scalar>& e, const Ent<Scalar>& f, const Mat<Scalar>& W) {
  int a = e.r, b = e.c, c = f.r, d = f.c;
  if (a == b && c == d) return W(a, c) * W(a, c);
  if (a == b) return 2 * W(a, c) * W(a, d);
  if (c == d) return 2 * W(a, c) * W(b, c);
  return 2 * (W(b, c) * W(a, d) + W(b, d) * W(a, c));
}

template <typename Scalar>
struct PsdBlock {
  int orig = 0;
  int n = 0;
  Mat<Scalar> C;
  std::vector<int> cons;
  std::vector<std::vector<Ent<Scalar>>> ent;  // aligned with cons
  std::vector<int> slot_of;                   // constraint -> index in cons, or -1
  bool dense_path = false;
};

template <typename Scalar>
struct Prepared {
  int m = 0;
  std::vector<int> rows;  // active original rows
  Vec<Scalar> b;
  Vec<Scalar> row_scale;
  std::vector<PsdBlock<Scalar>> psd;
  int L = 0, F = 0;
  Vec<Scalar> c_lin, c_free;
  std::vector<std::vector<std::pair<int, Scalar>>> lin_cols, free_cols;  // per variable: (row, a)
  std::vector<std::pair<int, int>> lin_map, free_map;                    // orig (block, offset)
  bool trivially_infeasible = false;
};

template <typename Scalar>
Prepared<Scalar> prepare(const SdpProblem<Scalar>& p) {
  using std::abs;
  using std::sqrt;
  Prepared<Scalar> P;
  const int nb = static_cast<int>(p.blocks.size());
  std::vector<int> kind_index(nb, -1), offset(nb, 0);
  for (int k = 0; k < nb; ++k) {
    const auto& bs = p.blocks[k];
    if (bs.kind == BlockKind::Psd) {
      kind_index[k] = static_cast<int>(P.psd.size());
      PsdBlock<Scalar> blk;
      blk.orig = k;
      blk.n = bs.size;
      blk.C = Mat<Scalar>::Zero(bs.size, bs.size);
      P.psd.push_back(std::move(blk));
    } else if (bs.kind == BlockKind::Nonneg) {
      offset[k] = P.L;
      for (int i = 0; i < bs.size; ++i) P.lin_map.emplace_back(k, i);
      P.L += bs.size;
    } else {
      offset[k] = P.F;
      for (int i = 0; i < bs.size; ++i) P.free_map.emplace_back(k, i);
      P.F += bs.size;
    }
  }
  P.c_lin = Vec<Scalar>::Zero(P.L);
  P.c_free = Vec<Scalar>::Zero(P.F);
  for (const auto& e : p.C) {
    const auto kind = p.blocks[e.block].kind;
    if (kind == BlockKind::Psd) {
      auto& M = P.psd[kind_index[e.block]].C;
      M(e.row, e.col) += e.value;
      if (e.row != e.col) M(e.col, e.row) += e.value;
    } else if (kind == BlockKind::Nonneg) {
      P.c_lin(offset[e.block] + e.row) += e.value;
    } else {
      P.c_free(offset[e.block] + e.row) += e.value;
    }
  }

  // Row norms, empty-row handling.
  const int m0 = p.num_constraints();
  std::vector<Scalar> norm2(m0, Scalar(0));
  for (int i = 0; i < m0; ++i)
    for (const auto& e : p.A[i])
      norm2[i] += e.value * e.value * (p.blocks[e.block].kind == BlockKind::Psd && e.row != e.col ? 2 : 1);
  std::vector<int> new_index(m0, -1);
  std::vector<Scalar> bs;
  std::vector<Scalar> scales;
  for (int i = 0; i < m0; ++i) {
    if (norm2[i] == Scalar(0)) {
      if (abs(p.b[i]) > Scalar(1e-12)) P.trivially_infeasible = true;
      continue;
    }
    new_index[i] = static_cast<int>(P.rows.size());
    P.rows.push_back(i);
    Scalar s = Scalar(1) / sqrt(norm2[i]);
    scales.push_back(s);
    bs.push_back(p.b[i] * s);
  }
  P.m = static_cast<int>(P.rows.size());
  P.b = Vec<Scalar>::Map(bs.data(), P.m);
  P.row_scale = Vec<Scalar>::Map(scales.data(), P.m);
  P.lin_cols.assign(P.L, {});
  P.free_cols.assign(P.F, {});
  for (auto& blk : P.psd) blk.slot_of.assign(P.m, -1);

  for (int i0 = 0; i0 < m0; ++i0) {
    int i = new_index[i0];
    if (i < 0) continue;
    Scalar s = P.row_scale(i);
    for (const auto& e : p.A[i0]) {
      const auto kind = p.blocks[e.block].kind;
      if (kind == BlockKind::Psd) {
        auto& blk = P.psd[kind_index[e.block]];
        int slot = blk.slot_of[i];
        if (slot < 0) {
          slot = static_cast<int>(blk.cons.size());
          blk.slot_of[i] = slot;
          blk.cons.push_back(i);
          blk.ent.emplace_back();
        }
        int r = std::min(e.row, e.col), c = std::max(e.row, e.col);
        blk.ent[slot].push_back({r, c, e.value * s});
      } else if (kind == BlockKind::Nonneg) {
        P.lin_cols[offset[e.block] + e.row].emplace_back(i, e.value * s);
      } else {
        P.free_cols[offset[e.block] + e.row].emplace_back(i, e.value * s);
      }
    }
  }
  // Cost model for the Schur complement: pairwise entry products versus one
  // dense W A W product per constraint.
  for (auto& blk : P.psd) {
    double nnz = 0;
    for (const auto& e : blk.ent) nnz += static_cast<double>(e.size());
    double sparse_cost = nnz * nnz / 2;
    double n = blk.n;
    double dense_cost = static_cast<double>(blk.cons.size()) * (4 * n * n * n) + nnz * blk.cons.size() / 2;
    blk.dense_path = dense_cost < sparse_cost;
  }
  return P;
}

template <typename Scalar>
struct State {
  std::vector<Mat<Scalar>> X, S;
  Vec<Scalar> xl, sl, xf, y;
};

template <typename Scalar>
struct Scaling {
  Mat<Scalar> Lx, Ls, G, Ginv, W;
  Vec<Scalar> d;
};

template <typename Scalar>
struct Direction {
  std::vector<Mat<Scalar>> dX, dS;
  Vec<Scalar> dxl, dsl, dxf, dy;
};

template <typename Scalar>
Scalar max_step_psd(const Mat<Scalar>& L, const Mat<Scalar>& D) {
  Mat<Scalar> M1 = L.template triangularView<Eigen::Lower>().solve(D);
  Mat<Scalar> M2 = L.template triangularView<Eigen::Lower>().solve(M1.transpose());
  M2 = (M2 + M2.transpose()) / 2;
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(M2, Eigen::EigenvaluesOnly);
  Scalar lmin = es.eigenvalues().minCoeff();
  return lmin < 0 ? Scalar(-1) / lmin : std::numeric_limits<Scalar>::infinity();
}

template <typename Scalar>
Scalar max_step_lin(const Vec<Scalar>& x, const Vec<Scalar>& dx) {
  Scalar a = std::numeric_limits<Scalar>::infinity();
  for (int i = 0; i < x.size(); ++i)
    if (dx(i) < 0) a = std::min(a, -x(i) / dx(i));
  return a;
}

template <typename Scalar>
class Solver {
 public:
  Solver(const SdpProblem<Scalar>& p, const SdpOptions<Scalar>& opt) : p_(p), opt_(opt), P_(prepare(p)) {}

  SdpSolution<Scalar> run();

 private:
  Vec<Scalar> apply_A(const std::vector<Mat<Scalar>>& X, const Vec<Scalar>& xl, const Vec<Scalar>& xf) const {
    Vec<Scalar> r = Vec<Scalar>::Zero(P_.m);
    for (std::size_t k = 0; k < P_.psd.size(); ++k) {
      const auto& blk = P_.psd[k];
      for (std::size_t q = 0; q < blk.cons.size(); ++q) r(blk.cons[q]) += inner(blk.ent[q], X[k]);
    }
    for (int l = 0; l < P_.L; ++l)
      for (const auto& [i, a] : P_.lin_cols[l]) r(i) += a * xl(l);
    for (int l = 0; l < P_.F; ++l)
      for (const auto& [i, a] : P_.free_cols[l]) r(i) += a * xf(l);
    return r;
  }

  // A*(y) per block.
  void apply_At(const Vec<Scalar>& y, std::vector<Mat<Scalar>>& out, Vec<Scalar>& lin, Vec<Scalar>& fr) const {
    out.resize(P_.psd.size());
    for (std::size_t k = 0; k < P_.psd.size(); ++k) {
      const auto& blk = P_.psd[k];
      out[k] = Mat<Scalar>::Zero(blk.n, blk.n);
      for (std::size_t q = 0; q < blk.cons.size(); ++q) add_to(out[k], blk.ent[q], y(blk.cons[q]));
    }
    lin = Vec<Scalar>::Zero(P_.L);
    for (int l = 0; l < P_.L; ++l)
      for (const auto& [i, a] : P_.lin_cols[l]) lin(l) += a * y(i);
    fr = Vec<Scalar>::Zero(P_.F);
    for (int l = 0; l < P_.F; ++l)
      for (const auto& [i, a] : P_.free_cols[l]) fr(l) += a * y(i);
  }

  bool compute_scaling(const State<Scalar>& s);
  void build_system();
  Vec<Scalar> solve_system(const Vec<Scalar>& rhs) const;
  void direction(const State<Scalar>& s, const std::vector<Mat<Scalar>>& Rc, const Vec<Scalar>& rc_lin,
                 Direction<Scalar>& d) const;

  const SdpProblem<Scalar>& p_;
  SdpOptions<Scalar> opt_;
  Prepared<Scalar> P_;

  // Per-iteration data.
  std::vector<Scaling<Scalar>> sc_;
  Vec<Scalar> dlin_;  // x/s for nonneg
  Vec<Scalar> rp_;
  std::vector<Mat<Scalar>> Rd_;
  Vec<Scalar> rd_lin_, rd_free_;
  Mat<Scalar> K_;
  Eigen::PartialPivLU<Mat<Scalar>> lu_;
};

template <typename Scalar>
bool Solver<Scalar>::compute_scaling(const State<Scalar>& s) {
  sc_.resize(P_.psd.size());
  for (std::size_t k = 0; k < P_.psd.size(); ++k) {
    Eigen::LLT<Mat<Scalar>> lx(s.X[k]), ls(s.S[k]);
    if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
    auto& c = sc_[k];
    c.Lx = lx.matrixL();
    c.Ls = ls.matrixL();
    Mat<Scalar> M = c.Ls.transpose() * c.Lx;
    Eigen::BDCSVD<Mat<Scalar>> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    c.d = svd.singularValues();
    if (c.d.minCoeff() <= 0) return false;
    const Mat<Scalar>& V = svd.matrixV();
    Vec<Scalar> dm = c.d.array().rsqrt();
    Vec<Scalar> dp = c.d.array().sqrt();
    c.G = c.Lx * V * dm.asDiagonal();
    Mat<Scalar> Z = c.Lx.transpose().template triangularView<Eigen::Upper>().solve(V * dp.asDiagonal());
    c.Ginv = Z.transpose();
    c.W = c.G * c.G.transpose();
  }
  dlin_ = s.xl.cwiseQuotient(s.sl);
  return true;
}

template <typename Scalar>
void Solver<Scalar>::build_system() {
  const int m = P_.m, F = P_.F;
  Mat<Scalar> H = Mat<Scalar>::Zero(m, m);
  for (std::size_t k = 0; k < P_.psd.size(); ++k) {
    const auto& blk = P_.psd[k];
    const Mat<Scalar>& W = sc_[k].W;
    const int nc = static_cast<int>(blk.cons.size());
    if (blk.dense_path) {
      Mat<Scalar> A = Mat<Scalar>::Zero(blk.n, blk.n);
      for (int q = 0; q < nc; ++q) {
        A.setZero();
        add_to(A, blk.ent[q], Scalar(1));
        Mat<Scalar> M = W * A * W;
        for (int p = 0; p <= q; ++p) {
          Scalar v = inner(blk.ent[p], M);
          H(blk.cons[p], blk.cons[q]) += v;
          if (p != q) H(blk.cons[q], blk.cons[p]) += v;
        }
      }
    } else {
      for (int p = 0; p < nc; ++p) {
        for (int q = p; q < nc; ++q) {
          Scalar v = 0;
          for (const auto& e : blk.ent[p])
            for (const auto& f : blk.ent[q]) v += e.v * f.v * trace_ewew(e, f, W);
          H(blk.cons[p], blk.cons[q]) += v;
          if (p != q) H(blk.cons[q], blk.cons[p]) += v;
        }
      }
    }
  }
  for (int l = 0; l < P_.L; ++l) {
    const auto& col = P_.lin_cols[l];
    for (const auto& [i, a] : col)
      for (const auto& [j, b] : col) H(i, j) += a * b * dlin_(l);
  }
  Scalar scale = Scalar(1);
  for (int i = 0; i < m; ++i) scale = std::max(scale, H(i, i));
  const Scalar delta = Scalar(1e-14) * scale;
  K_ = Mat<Scalar>::Zero(m + F, m + F);
  K_.topLeftCorner(m, m) = H;
  for (int l = 0; l < F; ++l)
    for (const auto& [i, a] : P_.free_cols[l]) {
      K_(i, m + l) += a;
      K_(m + l, i) += a;
    }
  Mat<Scalar> Kreg = K_;
  for (int i = 0; i < m; ++i) Kreg(i, i) += delta;
  for (int l = 0; l < F; ++l) Kreg(m + l, m + l) -= delta;
  lu_.compute(Kreg);
}

template <typename Scalar>
Vec<Scalar> Solver<Scalar>::solve_system(const Vec<Scalar>& rhs) const {
  Vec<Scalar> x = lu_.solve(rhs);
  // Iterative refinement against the unregularized matrix.
  for (int it = 0; it < 3; ++it) {
    Vec<Scalar> r = rhs - K_ * x;
    Vec<Scalar> dx = lu_.solve(r);
    if (!dx.allFinite()) break;
    x += dx;
  }
  return x;
}

template <typename Scalar>
void Solver<Scalar>::direction(const State<Scalar>& s, const std::vector<Mat<Scalar>>& Rc, const Vec<Scalar>& rc_lin,
                               Direction<Scalar>& d) const {
  const int m = P_.m, F = P_.F;
  Vec<Scalar> rhs(m + F);
  std::vector<Mat<Scalar>> T(P_.psd.size());
  for (std::size_t k = 0; k < P_.psd.size(); ++k) {
    const Mat<Scalar>& W = sc_[k].W;
    T[k] = Rc[k] - W * Rd_[k] * W;
  }
  Vec<Scalar> tl = rc_lin - dlin_.cwiseProduct(rd_lin_);
  Vec<Scalar> zero_f = Vec<Scalar>::Zero(F);
  rhs.head(m) = rp_ - apply_A(T, tl, zero_f);
  rhs.tail(F) = rd_free_;
  Vec<Scalar> sol = solve_system(rhs);
  d.dy = sol.head(m);
  d.dxf = sol.tail(F);
  std::vector<Mat<Scalar>> aty;
  Vec<Scalar> atl, atf;
  apply_At(d.dy, aty, atl, atf);
  d.dX.resize(P_.psd.size());
  d.dS.resize(P_.psd.size());
  for (std::size_t k = 0; k < P_.psd.size(); ++k) {
    const Mat<Scalar>& W = sc_[k].W;
    d.dS[k] = Rd_[k] - aty[k];
    Mat<Scalar> dx = Rc[k] - W * d.dS[k] * W;
    d.dX[k] = (dx + dx.transpose()) / 2;
  }
  d.dsl = rd_lin_ - atl;
  d.dxl = rc_lin - dlin_.cwiseProduct(d.dsl);
  (void)s;
}

template <typename Scalar>
SdpSolution<Scalar> Solver<Scalar>::run() {
  using std::abs;
  using std::max;
  using std::pow;
  using std::sqrt;
  const int m = P_.m;
  const int nk = static_cast<int>(P_.psd.size());
  SdpSolution<Scalar> out;

  auto assemble = [&](const State<Scalar>& s, SdpStatus status, int iters) {
    SdpSolution<Scalar> sol;
    sol.status = status;
    sol.iterations = iters;
    sol.X.resize(p_.blocks.size());
    sol.S.resize(p_.blocks.size());
    for (std::size_t k = 0; k < p_.blocks.size(); ++k) {
      if (p_.blocks[k].kind != BlockKind::Psd) {
        sol.X[k] = Mat<Scalar>::Zero(p_.blocks[k].size, 1);
        sol.S[k] = Mat<Scalar>::Zero(p_.blocks[k].size, 1);
      }
    }
    for (int k = 0; k < nk; ++k) {
      sol.X[P_.psd[k].orig] = s.X[k];
      sol.S[P_.psd[k].orig] = s.S[k];
    }
    for (int l = 0; l < P_.L; ++l) {
      sol.X[P_.lin_map[l].first](P_.lin_map[l].second, 0) = s.xl(l);
      sol.S[P_.lin_map[l].first](P_.lin_map[l].second, 0) = s.sl(l);
    }
    for (int l = 0; l < P_.F; ++l) sol.X[P_.free_map[l].first](P_.free_map[l].second, 0) = s.xf(l);
    sol.y = Vec<Scalar>::Zero(p_.num_constraints());
    for (int i = 0; i < m; ++i) sol.y(P_.rows[i]) = s.y(i) * P_.row_scale(i);
    auto res = residuals(p_, sol);
    sol.primal_residual = res.primal;
    sol.dual_residual = res.dual;
    sol.gap = res.gap;
    Scalar pobj = 0;
    for (const auto& e : p_.C) {
      const auto& blk = p_.blocks[e.block];
      if (blk.kind == BlockKind::Psd)
        pobj += e.value * (e.row == e.col ? sol.X[e.block](e.row, e.row) : 2 * sol.X[e.block](e.row, e.col));
      else
        pobj += e.value * sol.X[e.block](e.row, 0);
    }
    Scalar dobj = 0;
    for (int i = 0; i < p_.num_constraints(); ++i) dobj += p_.b[i] * sol.y(i);
    sol.primal_objective = pobj;
    sol.dual_objective = dobj;
    return sol;
  };

  State<Scalar> s;
  if (P_.trivially_infeasible) {
    s.X.resize(nk);
    s.S.resize(nk);
    for (int k = 0; k < nk; ++k) s.X[k] = s.S[k] = Mat<Scalar>::Identity(P_.psd[k].n, P_.psd[k].n);
    s.xl = s.sl = Vec<Scalar>::Ones(P_.L);
    s.xf = Vec<Scalar>::Zero(P_.F);
    s.y = Vec<Scalar>::Zero(m);
    return assemble(s, SdpStatus::PrimalInfeasible, 0);
  }

  // Cold start: identity-scaled interior points.
  Scalar bnorm = P_.b.size() ? P_.b.template lpNorm<Eigen::Infinity>() : Scalar(0);
  Scalar cnorm = 0;
  for (const auto& blk : P_.psd) cnorm = max(cnorm, blk.C.norm());
  if (P_.L) cnorm = max(cnorm, P_.c_lin.norm());
  int ntot = 0;
  for (const auto& blk : P_.psd) ntot += blk.n;
  ntot += P_.L;
  Scalar sn = sqrt(Scalar(max(ntot, 1)));
  Scalar xi = max(Scalar(10), max(sn, sn * (1 + bnorm)));
  Scalar eta = max(Scalar(10), max(sn, 1 + cnorm));
  s.X.resize(nk);
  s.S.resize(nk);
  for (int k = 0; k < nk; ++k) {
    s.X[k] = xi * Mat<Scalar>::Identity(P_.psd[k].n, P_.psd[k].n);
    s.S[k] = eta * Mat<Scalar>::Identity(P_.psd[k].n, P_.psd[k].n);
  }
  s.xl = Vec<Scalar>::Constant(P_.L, xi);
  s.sl = Vec<Scalar>::Constant(P_.L, eta);
  s.xf = Vec<Scalar>::Zero(P_.F);
  s.y = Vec<Scalar>::Zero(m);

  const Scalar nu = Scalar(max(ntot, 1));
  Scalar cfull = cnorm;
  if (P_.F) cfull = max(cfull, P_.c_free.norm());

  State<Scalar> best = s;
  Scalar best_merit = std::numeric_limits<Scalar>::infinity();
  SdpStatus status = SdpStatus::SlowProgress;
  int iter = 0;
  int stall = 0;
  Scalar prev_merit = std::numeric_limits<Scalar>::infinity();

  for (; iter <= opt_.max_iter; ++iter) {
    // Residuals.
    rp_ = P_.b - apply_A(s.X, s.xl, s.xf);
    std::vector<Mat<Scalar>> aty;
    Vec<Scalar> atl, atf;
    apply_At(s.y, aty, atl, atf);
    Rd_.resize(nk);
    Scalar dnorm2 = 0;
    for (int k = 0; k < nk; ++k) {
      Rd_[k] = P_.psd[k].C - aty[k] - s.S[k];
      dnorm2 += Rd_[k].squaredNorm();
    }
    rd_lin_ = P_.c_lin - atl - s.sl;
    rd_free_ = P_.c_free - atf;
    dnorm2 += rd_lin_.squaredNorm() + rd_free_.squaredNorm();

    Scalar xs = 0;
    for (int k = 0; k < nk; ++k) xs += s.X[k].cwiseProduct(s.S[k]).sum();
    xs += s.xl.dot(s.sl);
    const Scalar mu = xs / nu;
    Scalar pobj = s.xl.dot(P_.c_lin) + s.xf.dot(P_.c_free);
    for (int k = 0; k < nk; ++k) pobj += P_.psd[k].C.cwiseProduct(s.X[k]).sum();
    const Scalar dobj = P_.b.dot(s.y);
    const Scalar pinf = rp_.norm() / (1 + bnorm);
    const Scalar dinf = sqrt(dnorm2) / (1 + cfull);
    const Scalar relgap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj));
    const Scalar merit = max(relgap, max(pinf, dinf));
    if (opt_.verbose)
      std::fprintf(stderr, "it %3d  pobj % .8e  dobj % .8e  gap %.2e  pinf %.2e  dinf %.2e  mu %.2e\n", iter,
                   double(pobj), double(dobj), double(relgap), double(pinf), double(dinf), double(mu));
    if (merit < best_merit) {
      best_merit = merit;
      best = s;
    }
    if (relgap <= opt_.tol && pinf <= opt_.tol && dinf <= opt_.tol) {
      status = SdpStatus::Optimal;
      best = s;
      break;
    }
    // Farkas-type rays.
    if (dobj > 0) {
      Scalar ray2 = 0;
      for (int k = 0; k < nk; ++k) ray2 += (aty[k] + s.S[k]).squaredNorm();
      ray2 += (atl + s.sl).squaredNorm() + atf.squaredNorm();
      if (sqrt(ray2) / dobj < Scalar(1e-8) && dobj > Scalar(1e-6)) {
        status = SdpStatus::PrimalInfeasible;
        best = s;
        break;
      }
    }
    if (pobj < 0) {
      Scalar ax = (P_.b - rp_).norm();
      if (ax / (-pobj) < Scalar(1e-8) && -pobj > Scalar(1e-6)) {
        status = SdpStatus::DualInfeasible;
        best = s;
        break;
      }
    }
    if (iter == opt_.max_iter) break;
    if (merit > prev_merit * Scalar(0.98))
      ++stall;
    else
      stall = 0;
    prev_merit = merit;
    if (stall >= 12) break;

    if (!compute_scaling(s)) break;
    build_system();

    // Predictor.
    std::vector<Mat<Scalar>> Rc(nk);
    for (int k = 0; k < nk; ++k) Rc[k] = -s.X[k];
    Vec<Scalar> rcl = -s.xl;
    Direction<Scalar> da;
    direction(s, Rc, rcl, da);
    if (!da.dy.allFinite()) break;
    Scalar ap = std::numeric_limits<Scalar>::infinity(), ad = ap;
    for (int k = 0; k < nk; ++k) {
      ap = std::min(ap, max_step_psd(sc_[k].Lx, da.dX[k]));
      ad = std::min(ad, max_step_psd(sc_[k].Ls, da.dS[k]));
    }
    ap = std::min(ap, max_step_lin(s.xl, da.dxl));
    ad = std::min(ad, max_step_lin(s.sl, da.dsl));
    ap = std::min(Scalar(1), ap);
    ad = std::min(Scalar(1), ad);
    Scalar xs_aff = 0;
    for (int k = 0; k < nk; ++k) xs_aff += (s.X[k] + ap * da.dX[k]).cwiseProduct(s.S[k] + ad * da.dS[k]).sum();
    xs_aff += (s.xl + ap * da.dxl).dot(s.sl + ad * da.dsl);
    Scalar mu_aff = max(Scalar(0), xs_aff / nu);
    Scalar expo = max(Scalar(1), 3 * std::min(ap, ad) * std::min(ap, ad));
    Scalar sigma = std::min(Scalar(1), pow(mu_aff / mu, expo));

    // Corrector.
    for (int k = 0; k < nk; ++k) {
      const auto& c = sc_[k];
      const int n = P_.psd[k].n;
      Mat<Scalar> dxt = c.Ginv * da.dX[k] * c.Ginv.transpose();
      Mat<Scalar> dst = c.G.transpose() * da.dS[k] * c.G;
      Mat<Scalar> R = -(dxt * dst + dst * dxt) / 2;
      R.diagonal().array() += sigma * mu;
      Mat<Scalar> E(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) E(i, j) = 2 * R(i, j) / (c.d(i) + c.d(j));
      Rc[k] = -s.X[k] + c.G * E * c.G.transpose();
    }
    for (int l = 0; l < P_.L; ++l) rcl(l) = (sigma * mu - s.xl(l) * s.sl(l) - da.dxl(l) * da.dsl(l)) / s.sl(l);
    Direction<Scalar> dc;
    direction(s, Rc, rcl, dc);
    if (!dc.dy.allFinite()) break;
    ap = ad = std::numeric_limits<Scalar>::infinity();
    for (int k = 0; k < nk; ++k) {
      ap = std::min(ap, max_step_psd(sc_[k].Lx, dc.dX[k]));
      ad = std::min(ad, max_step_psd(sc_[k].Ls, dc.dS[k]));
    }
    ap = std::min(ap, max_step_lin(s.xl, dc.dxl));
    ad = std::min(ad, max_step_lin(s.sl, dc.dsl));
    ap = std::min(Scalar(1), opt_.step_fraction * ap);
    ad = std::min(Scalar(1), opt_.step_fraction * ad);
    if (opt_.verbose) std::fprintf(stderr, "      ap %.3e ad %.3e sigma %.2e\n", double(ap), double(ad), double(sigma));
    for (int k = 0; k < nk; ++k) {
      s.X[k] += ap * dc.dX[k];
      s.S[k] += ad * dc.dS[k];
      s.S[k] = (s.S[k] + s.S[k].transpose()) / 2;
    }
    s.xl += ap * dc.dxl;
    s.xf += ap * dc.dxf;
    s.sl += ad * dc.dsl;
    s.y += ad * dc.dy;
  }
  out = assemble(best, status, iter);
  return out;
}

}  // namespace sdp_detail

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal:
      return "Optimal";
    case SdpStatus::PrimalInfeasible:
      return "PrimalInfeasible";
    case SdpStatus::DualInfeasible:
      return "DualInfeasible";
    case SdpStatus::SlowProgress:
      return "SlowProgress";
  }
  return "?";
}

template <typename Scalar>
void SdpProblem<Scalar>::validate() const {
  if (A.size() != b.size()) throw std::invalid_argument("constraint count mismatch");
  auto check = [&](const SdpEntry<Scalar>& e) {
    if (e.block < 0 || e.block >= static_cast<int>(blocks.size())) throw std::invalid_argument("bad block index");
    const auto& bs = blocks[e.block];
    if (e.row < 0 || e.row >= bs.size || e.col < 0 || e.col >= bs.size)
      throw std::invalid_argument("entry outside block");
    if (bs.kind != BlockKind::Psd && e.row != e.col) throw std::invalid_argument("off-diagonal entry in vector block");
  };
  for (const auto& e : C) check(e);
  for (const auto& row : A)
    for (const auto& e : row) check(e);
}

template <typename Scalar>
SdpResiduals<Scalar> residuals(const SdpProblem<Scalar>& p, const SdpSolution<Scalar>& sol) {
  using std::abs;
  using std::sqrt;
  using M = sdp_detail::Mat<Scalar>;
  const int m = p.num_constraints();
  const auto& X = sol.X;
  auto xval = [&](const SdpEntry<Scalar>& e) {
    if (p.blocks[e.block].kind == BlockKind::Psd)
      return e.row == e.col ? X[e.block](e.row, e.row) : X[e.block](e.row, e.col) + X[e.block](e.col, e.row);
    return X[e.block](e.row, 0);
  };
  Scalar rp2 = 0, b2 = 0;
  for (int i = 0; i < m; ++i) {
    Scalar ax = 0;
    for (const auto& e : p.A[i]) ax += e.value * xval(e);
    rp2 += (ax - p.b[i]) * (ax - p.b[i]);
    b2 += p.b[i] * p.b[i];
  }
  // Dual slack implied by y: Z = C - A*(y).
  std::vector<M> Z(p.blocks.size()), Aty(p.blocks.size());
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    int n = p.blocks[k].size;
    bool psd = p.blocks[k].kind == BlockKind::Psd;
    Z[k] = M::Zero(n, psd ? n : 1);
    Aty[k] = M::Zero(n, psd ? n : 1);
  }
  auto put = [&](std::vector<M>& T, const SdpEntry<Scalar>& e, Scalar v) {
    if (p.blocks[e.block].kind == BlockKind::Psd) {
      T[e.block](e.row, e.col) += v;
      if (e.row != e.col) T[e.block](e.col, e.row) += v;
    } else {
      T[e.block](e.row, 0) += v;
    }
  };
  Scalar c2 = 0;
  for (const auto& e : p.C) {
    put(Z, e, e.value);
    c2 += e.value * e.value;
  }
  for (int i = 0; i < m; ++i)
    for (const auto& e : p.A[i]) {
      put(Z, e, -sol.y(i) * e.value);
      put(Aty, e, sol.y(i) * e.value);
    }
  Scalar rd2 = 0, ray2 = 0;
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    M D = Z[k];
    if (p.blocks[k].kind != BlockKind::Free) D -= sol.S[k];
    rd2 += D.squaredNorm();
    M R = Aty[k];
    if (p.blocks[k].kind != BlockKind::Free) R += sol.S[k];
    ray2 += R.squaredNorm();
  }
  Scalar pobj = 0;
  for (const auto& e : p.C) pobj += e.value * xval(e);
  Scalar dobj = 0;
  for (int i = 0; i < m; ++i) dobj += p.b[i] * sol.y(i);
  SdpResiduals<Scalar> r;
  r.primal = sqrt(rp2) / (1 + sqrt(b2));
  r.dual = sqrt(rd2) / (1 + sqrt(c2));
  r.gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj));
  if (sol.status == SdpStatus::PrimalInfeasible && dobj > 0) r.farkas = sqrt(ray2) / dobj;
  if (sol.status == SdpStatus::DualInfeasible && pobj < 0) {
    Scalar ax2 = 0;
    for (int i = 0; i < m; ++i) {
      Scalar ax = 0;
      for (const auto& e : p.A[i]) ax += e.value * xval(e);
      ax2 += ax * ax;
    }
    r.farkas = sqrt(ax2) / (-pobj);
  }
  return r;
}

template <typename Scalar>
SdpSolution<Scalar> solve(const SdpProblem<Scalar>& p, const SdpOptions<Scalar>& opt) {
  p.validate();
  if (!(opt.tol > 0) || opt.tol > Scalar(1e-2)) throw std::invalid_argument("tol must lie in (0, 1e-2]");
  if (p.blocks.empty()) throw std::invalid_argument("SDP has no blocks");
  sdp_detail::Solver<Scalar> s(p, opt);
  return s.run();
}

template <typename Scalar>
SdpProblem<Scalar> from_lmi(const std::vector<BlockSpec>& blocks, const std::vector<Scalar>& c,
                            const std::vector<std::vector<SdpEntry<Scalar>>>& F,
                            const std::vector<SdpEntry<Scalar>>& F0) {
  if (c.size() != F.size()) throw std::invalid_argument("objective/matrix count mismatch");
  SdpProblem<Scalar> p;
  p.blocks = blocks;
  for (auto e : F0) {
    e.value = -e.value;
    p.C.push_back(e);
  }
  for (std::size_t j = 0; j < F.size(); ++j) {
    p.add_constraint(-c[j]);
    for (auto e : F[j]) {
      e.value = -e.value;
      p.A.back().push_back(e);
    }
  }
  return p;
}

}  // namespace barrier
