#pragma once

#include <memory>
#include <vector>

#include "aladin/problem.hpp"

namespace aladin {

/// Per-node auxiliary matrices of the coordination step, all formed through
/// the Cholesky factor of H (no explicit inverse):
///   G = A H^{-1} A^T,  Q = A H^{-1} C^T,  R = C H^{-1} C^T.
struct NodeBlocks {
  Mat G;
  Mat Q;
  Mat R;
  Eigen::LLT<Mat> H_factor;
  Eigen::LLT<Mat> R_factor;  // unused when c == 0
};

/// Throws NotPositiveDefinite if H has no Cholesky factor and
/// RankDeficientConstraints if R is singular to rcond 1e-12.
NodeBlocks assemble_blocks(const Mat& H, const Mat& C, const Mat& A);

/// Factorization of the Schur complement M = sum_i (G_i - Q_i R_i^{-1} Q_i^T).
/// Cholesky first; a pivoted LDL^T if Cholesky fails.
struct SchurFactor {
  Mat M;
  Eigen::LLT<Mat> llt;
  Eigen::LDLT<Mat> ldlt;
  bool pivoted = false;
  double rcond = 0.0;

  Vec solve(const Vec& rhs) const { return pivoted ? Vec(ldlt.solve(rhs)) : Vec(llt.solve(rhs)); }
};

/// Sums node contributions in node order. Throws CoordinationSingular.
std::shared_ptr<const SchurFactor> factor_schur(const std::vector<NodeBlocks>& blocks);

struct CoordinationResult {
  Vec lambda;
  std::vector<Vec> mu_tilde;
  std::vector<Vec> delta_x;
  std::vector<Vec> y_next;
  std::shared_ptr<const SchurFactor> schur;  // null for the KKT oracle
};

/// Closed-form solution of the coupled coordination QP
///
///   min sum_i 1/2 dx_i^T H_i dx_i + v_i^T dx_i
///   s.t. sum_i A_i (dx_i + x_i) = b   | lambda
///        C_i dx_i = 0                  | mu~_i
///
/// via  q = sum (Q_i R_i^{-1} C_i - A_i) H_i^{-1} v_i,  p = sum A_i x_i + q - b,
///      lambda = M^{-1} p,  mu~_i = -R_i^{-1}(C_i H_i^{-1} v_i + Q_i^T lambda),
///      dx_i = -H_i^{-1}(v_i + C_i^T mu~_i + A_i^T lambda).
/// With `reuse_schur` the Schur complement is neither re-assembled nor
/// re-factorized.
CoordinationResult solve_closed_form(const std::vector<NodeBlocks>& blocks,
                                     const std::vector<Vec>& x, const std::vector<Vec>& v,
                                     const std::vector<Mat>& C, const std::vector<Mat>& A,
                                     const Vec& b,
                                     std::shared_ptr<const SchurFactor> reuse_schur = nullptr);

/// Reference solution of the same QP from its full symmetric-indefinite KKT
/// matrix, factorized with partial-pivot LU.
CoordinationResult solve_kkt_oracle(const std::vector<Mat>& H, const std::vector<Mat>& C,
                                    const std::vector<Mat>& A, const std::vector<Vec>& x,
                                    const std::vector<Vec>& v, const Vec& b);

}  // namespace aladin
