#pragma once

#include <vector>

#include "aladin/problem.hpp"
#include "aladin/rng.hpp"

// Seeded generators for property checks. Everything draws from aladin::Rng,
// so instances are identical across platforms.
namespace aladin::gen {

Vec random_vector(Rng& rng, int n, double lo = -1.0, double hi = 1.0);
Mat random_matrix(Rng& rng, int rows, int cols, double lo = -1.0, double hi = 1.0);

/// Random orthogonal basis times eigenvalues log-spaced on [1, cond].
Mat random_spd(Rng& rng, int n, double cond);

/// rows <= cols; smallest singular value at least 0.1 (redrawn otherwise).
Mat random_full_row_rank(Rng& rng, int rows, int cols);

/// Inputs of one coordination QP.
struct CoordinationInstance {
  std::vector<Mat> H, C, A;
  std::vector<Vec> x, v;
  Vec b;
};

/// N in [1, max_nodes], n_i in [2, max_n], c_i in [0, min(max_c, n_i - 1)],
/// cond(H_i) <= max_cond, m in [1, min(6, sum (n_i - c_i))], b != 0.
CoordinationInstance random_coordination_instance(Rng& rng, int max_nodes = 5, int max_n = 8,
                                                  int max_c = 3, double max_cond = 1e3);

/// Convex quadratic nodes with affine constraints and random coupling.
DistributedProblem random_quadratic_problem(Rng& rng, int nodes, int n, int c, int m,
                                            double rho = 25.0);

/// f_i(x_i) = 1/2 |x_i - a_i|^2 with x_1 = x_2 = ... = x_N written as
/// x_i - x_{i+1} = 0.
DistributedProblem consensus_problem(const std::vector<Vec>& targets, double rho = 25.0);

}  // namespace aladin::gen
