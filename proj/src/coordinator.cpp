#include "aladin/coordinator.hpp"

#include <algorithm>
#include <string>

#include "aladin/errors.hpp"

namespace aladin {
namespace {

constexpr double kRankRcond = 1e-12;
constexpr double kSingularRcond = 1e-14;

void check_lists(std::size_t N, const std::vector<Vec>& x, const std::vector<Vec>& v,
                 const std::vector<Mat>& C, const std::vector<Mat>& A) {
  if (N == 0) throw ShapeError("coordination: no nodes");
  if (x.size() != N || v.size() != N || C.size() != N || A.size() != N)
    throw ShapeError("coordination: per-node lists differ in length");
  for (std::size_t i = 0; i < N; ++i) {
    const auto n = x[i].size();
    if (v[i].size() != n || C[i].cols() != n || A[i].cols() != n)
      throw ShapeError("coordination: node " + std::to_string(i) + " has inconsistent shapes");
    if (A[i].rows() != A[0].rows())
      throw ShapeError("coordination: coupling blocks differ in row count");
  }
}

// Eigen's rcond estimates skip exactly zero pivots, so singular matrices can
// report rcond ~ 1. The spread of the pivots catches those.
double pivot_ratio(const Vec& pivots) {
  const double hi = pivots.cwiseAbs().maxCoeff();
  return hi > 0.0 ? pivots.cwiseAbs().minCoeff() / hi : 0.0;
}

}  // namespace

NodeBlocks assemble_blocks(const Mat& H, const Mat& C, const Mat& A) {
  const auto n = H.rows();
  if (H.cols() != n || C.cols() != n || A.cols() != n)
    throw ShapeError("assemble_blocks: H, C and A disagree on the node dimension");

  NodeBlocks blocks;
  blocks.H_factor.compute(H);
  if (blocks.H_factor.info() != Eigen::Success)
    throw NotPositiveDefinite("assemble_blocks: Hessian approximation is not positive definite");

  const Mat HinvAt = blocks.H_factor.solve(A.transpose());
  blocks.G.noalias() = A * HinvAt;
  if (C.rows() > 0) {
    const Mat HinvCt = blocks.H_factor.solve(C.transpose());
    blocks.Q.noalias() = A * HinvCt;
    blocks.R.noalias() = C * HinvCt;
    blocks.R_factor.compute(blocks.R);
    if (blocks.R_factor.info() != Eigen::Success || blocks.R_factor.rcond() < kRankRcond)
      throw RankDeficientConstraints(
          "assemble_blocks: C H^{-1} C^T is singular; the constraint Jacobian is not of full "
          "row rank");
  } else {
    blocks.Q = Mat::Zero(A.rows(), 0);
    blocks.R = Mat::Zero(0, 0);
  }
  return blocks;
}

std::shared_ptr<const SchurFactor> factor_schur(const std::vector<NodeBlocks>& blocks) {
  if (blocks.empty()) throw ShapeError("factor_schur: no nodes");
  auto f = std::make_shared<SchurFactor>();
  f->M = Mat::Zero(blocks[0].G.rows(), blocks[0].G.cols());
  for (const auto& nb : blocks) {
    f->M += nb.G;
    if (nb.R.rows() > 0) f->M.noalias() -= nb.Q * nb.R_factor.solve(nb.Q.transpose());
  }
  f->llt.compute(f->M);
  if (f->llt.info() == Eigen::Success && f->llt.rcond() >= kSingularRcond) {
    f->rcond = f->llt.rcond();
    return f;
  }
  f->pivoted = true;
  f->ldlt.compute(f->M);
  f->rcond = f->ldlt.info() == Eigen::Success
                 ? std::min(f->ldlt.rcond(), pivot_ratio(f->ldlt.vectorD()))
                 : 0.0;
  if (f->ldlt.info() != Eigen::Success || !(f->rcond >= kSingularRcond))
    throw CoordinationSingular(
        "Schur complement of the coordination QP is singular (rcond " + std::to_string(f->rcond) +
            ")",
        f->rcond);
  return f;
}

CoordinationResult solve_closed_form(const std::vector<NodeBlocks>& blocks,
                                     const std::vector<Vec>& x, const std::vector<Vec>& v,
                                     const std::vector<Mat>& C, const std::vector<Mat>& A,
                                     const Vec& b, std::shared_ptr<const SchurFactor> reuse_schur) {
  const std::size_t N = blocks.size();
  check_lists(N, x, v, C, A);
  if (b.size() != A[0].rows()) throw ShapeError("solve_closed_form: b has wrong length");

  std::vector<Vec> Hinv_v(N);
  std::vector<Vec> Rinv_CHinv_v(N);
  Vec p = -b;
  for (std::size_t i = 0; i < N; ++i) {
    Hinv_v[i] = blocks[i].H_factor.solve(v[i]);
    p.noalias() += A[i] * x[i];
    p.noalias() -= A[i] * Hinv_v[i];
    if (C[i].rows() > 0) {
      Rinv_CHinv_v[i] = blocks[i].R_factor.solve(C[i] * Hinv_v[i]);
      p.noalias() += blocks[i].Q * Rinv_CHinv_v[i];
    }
  }

  CoordinationResult out;
  out.schur = reuse_schur ? std::move(reuse_schur) : factor_schur(blocks);
  out.lambda = out.schur->solve(p);

  out.mu_tilde.resize(N);
  out.delta_x.resize(N);
  out.y_next.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    Vec rhs = v[i];
    rhs.noalias() += A[i].transpose() * out.lambda;
    if (C[i].rows() > 0) {
      out.mu_tilde[i] =
          -(Rinv_CHinv_v[i] + blocks[i].R_factor.solve(blocks[i].Q.transpose() * out.lambda));
      rhs.noalias() += C[i].transpose() * out.mu_tilde[i];
    } else {
      out.mu_tilde[i] = Vec(0);
    }
    out.delta_x[i] = -blocks[i].H_factor.solve(rhs);
    out.y_next[i] = x[i] + out.delta_x[i];
  }
  return out;
}

CoordinationResult solve_kkt_oracle(const std::vector<Mat>& H, const std::vector<Mat>& C,
                                    const std::vector<Mat>& A, const std::vector<Vec>& x,
                                    const std::vector<Vec>& v, const Vec& b) {
  const std::size_t N = H.size();
  check_lists(N, x, v, C, A);
  const auto m = A[0].rows();
  if (b.size() != m) throw ShapeError("solve_kkt_oracle: b has wrong length");

  Eigen::Index n_total = 0;
  Eigen::Index c_total = 0;
  for (std::size_t i = 0; i < N; ++i) {
    if (H[i].rows() != x[i].size() || H[i].cols() != x[i].size())
      throw ShapeError("solve_kkt_oracle: H has wrong shape");
    n_total += x[i].size();
    c_total += C[i].rows();
  }

  // Unknowns ordered [dx_1..dx_N, lambda, mu~_1..mu~_N].
  const Eigen::Index dim = n_total + m + c_total;
  Mat K = Mat::Zero(dim, dim);
  Vec rhs = Vec::Zero(dim);
  Vec coupling_rhs = b;
  Eigen::Index xo = 0;
  Eigen::Index co = n_total + m;
  for (std::size_t i = 0; i < N; ++i) {
    const auto n = x[i].size();
    const auto c = C[i].rows();
    K.block(xo, xo, n, n) = H[i];
    K.block(xo, n_total, n, m) = A[i].transpose();
    K.block(n_total, xo, m, n) = A[i];
    if (c > 0) {
      K.block(xo, co, n, c) = C[i].transpose();
      K.block(co, xo, c, n) = C[i];
    }
    rhs.segment(xo, n) = -v[i];
    coupling_rhs.noalias() -= A[i] * x[i];
    xo += n;
    co += c;
  }
  rhs.segment(n_total, m) = coupling_rhs;

  Eigen::PartialPivLU<Mat> lu(K);
  const double rcond = std::min(lu.rcond(), pivot_ratio(lu.matrixLU().diagonal()));
  if (!(rcond >= kSingularRcond))
    throw CoordinationSingular(
        "KKT matrix of the coordination QP is singular (rcond " + std::to_string(rcond) + ")",
        rcond);
  const Vec sol = lu.solve(rhs);

  CoordinationResult out;
  out.lambda = sol.segment(n_total, m);
  xo = 0;
  co = n_total + m;
  for (std::size_t i = 0; i < N; ++i) {
    const auto n = x[i].size();
    const auto c = C[i].rows();
    out.delta_x.emplace_back(sol.segment(xo, n));
    out.mu_tilde.emplace_back(sol.segment(co, c));
    out.y_next.emplace_back(x[i] + out.delta_x.back());
    xo += n;
    co += c;
  }
  return out;
}

}  // namespace aladin
