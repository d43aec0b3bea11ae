#include "aladin/random_instances.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aladin/errors.hpp"

namespace aladin::gen {

Vec random_vector(Rng& rng, int n, double lo, double hi) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

Mat random_matrix(Rng& rng, int rows, int cols, double lo, double hi) {
  Mat M(rows, cols);
  // Column-major fill order is part of the reproducible sequence.
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) M(i, j) = rng.uniform(lo, hi);
  return M;
}

Mat random_spd(Rng& rng, int n, double cond) {
  if (n < 1 || !(cond >= 1.0)) throw DomainError("random_spd: need n >= 1 and cond >= 1");
  const Mat Q = Eigen::HouseholderQR<Mat>(random_matrix(rng, n, n)).householderQ();
  Vec eig(n);
  for (int i = 0; i < n; ++i)
    eig(i) = n == 1 ? 1.0 : std::pow(cond, static_cast<double>(i) / (n - 1));
  Mat H = Q * eig.asDiagonal() * Q.transpose();
  return 0.5 * (H + H.transpose());
}

Mat random_full_row_rank(Rng& rng, int rows, int cols) {
  if (rows > cols) throw DomainError("random_full_row_rank: rows must not exceed cols");
  if (rows == 0) return Mat(0, cols);
  for (;;) {
    Mat M = random_matrix(rng, rows, cols);
    Eigen::JacobiSVD<Mat> svd(M);
    if (svd.singularValues().minCoeff() >= 0.1) return M;
  }
}

CoordinationInstance random_coordination_instance(Rng& rng, int max_nodes, int max_n,
                                                  int max_c, double max_cond) {
  CoordinationInstance inst;
  const int N = rng.uniform_int(1, max_nodes);
  std::vector<int> n(N), c(N);
  int free_dims = 0;
  for (int i = 0; i < N; ++i) {
    n[i] = rng.uniform_int(2, max_n);
    c[i] = rng.uniform_int(0, std::min(max_c, n[i] - 1));
    free_dims += n[i] - c[i];
  }
  const int m = rng.uniform_int(1, std::min(6, free_dims));
  for (int i = 0; i < N; ++i) {
    inst.H.push_back(random_spd(rng, n[i], rng.uniform(1.0, max_cond)));
    inst.C.push_back(random_full_row_rank(rng, c[i], n[i]));
    inst.A.push_back(random_matrix(rng, m, n[i]));
    inst.x.push_back(random_vector(rng, n[i]));
    inst.v.push_back(random_vector(rng, n[i]));
  }
  inst.b = random_vector(rng, m, 0.5, 1.5);  // bounded away from zero
  return inst;
}

DistributedProblem random_quadratic_problem(Rng& rng, int nodes, int n, int c, int m,
                                            double rho) {
  if (c >= n) throw DomainError("random_quadratic_problem: need c < n");
  DistributedProblem p;
  p.rho = rho;
  p.coupling.m = m;
  for (int i = 0; i < nodes; ++i) {
    p.nodes.push_back(make_quadratic_node(random_spd(rng, n, 10.0), random_vector(rng, n),
                                          random_full_row_rank(rng, c, n), random_vector(rng, c),
                                          "quad" + std::to_string(i)));
    p.coupling.blocks.push_back(random_matrix(rng, m, n));
  }
  p.coupling.rhs = random_vector(rng, m);
  p.validate();
  return p;
}

DistributedProblem consensus_problem(const std::vector<Vec>& targets, double rho) {
  const int N = static_cast<int>(targets.size());
  if (N < 2) throw DomainError("consensus_problem: need at least two nodes");
  const int n = static_cast<int>(targets.front().size());
  DistributedProblem p;
  p.rho = rho;
  p.coupling.m = n * (N - 1);
  p.coupling.rhs = Vec::Zero(p.coupling.m);
  for (int i = 0; i < N; ++i) {
    if (targets[i].size() != n) throw ShapeError("consensus_problem: targets differ in length");
    p.nodes.push_back(make_quadratic_node(Mat::Identity(n, n), -targets[i], Mat(0, n), Vec(0),
                                          "consensus" + std::to_string(i)));
    Mat A = Mat::Zero(p.coupling.m, n);
    if (i < N - 1) A.block(i * n, 0, n, n) = Mat::Identity(n, n);
    if (i > 0) A.block((i - 1) * n, 0, n, n) = -Mat::Identity(n, n);
    p.coupling.blocks.push_back(std::move(A));
  }
  p.validate();
  return p;
}

}  // namespace aladin::gen
