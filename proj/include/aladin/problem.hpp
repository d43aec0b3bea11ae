#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace aladin {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One node of the distributed problem
//
//   min  sum_i f_i(x_i)   s.t.  sum_i A_i x_i = b,   g_i(x_i) = 0.
//
// Oracles are plain callables and must be safe to invoke concurrently on
// distinct inputs; they may not hold mutable shared state.
struct NodeProblem {
  int n = 0;  // decision dimension
  int c = 0;  // local equality-constraint count

  std::function<double(const Vec&)> objective;
  std::function<Vec(const Vec&)> objective_gradient;
  std::function<Vec(const Vec&)> constraint;
  std::function<Mat(const Vec&)> constraint_jacobian;

  // Hessian of f + mu^T g. Only the local and centralized Newton solvers use it.
  std::function<Mat(const Vec& x, const Vec& mu)> lagrangian_hessian;
  // Positive-semidefinite Gauss-Newton surrogate for least-squares objectives.
  std::function<Mat(const Vec&)> gn_hessian;

  std::string name;

  bool has_lagrangian_hessian() const { return static_cast<bool>(lagrangian_hessian); }
  bool has_gn_hessian() const { return static_cast<bool>(gn_hessian); }

  // Checked oracle wrappers: throw OracleError on wrong shape or non-finite
  // output, naming the oracle and the input point.
  double eval_objective(const Vec& x) const;
  Vec eval_gradient(const Vec& x) const;
  Vec eval_constraint(const Vec& x) const;
  Mat eval_jacobian(const Vec& x) const;
  Mat eval_lagrangian_hessian(const Vec& x, const Vec& mu) const;
  Mat eval_gn_hessian(const Vec& x) const;
};

struct CouplingSpec {
  std::vector<Mat> blocks;  // A_i, each m x n_i
  Vec rhs;                  // b
  int m = 0;
};

struct DistributedProblem {
  std::vector<NodeProblem> nodes;
  CouplingSpec coupling;
  double rho = 25.0;

  int node_count() const { return static_cast<int>(nodes.size()); }
  /// Throws ShapeError unless blocks, rhs and node dimensions are consistent.
  void validate() const;
};

struct DerivativeReport {
  double max_gradient_error = 0.0;
  double max_jacobian_error = 0.0;
  bool pass = false;
};

/// Compares the analytic gradient and constraint Jacobian against central
/// differences with step 1e-6 * (1 + |point|_inf). Errors are measured as
/// |analytic - fd|_inf / max(1, |analytic|_inf).
DerivativeReport check_derivatives(const NodeProblem& node, const Vec& point,
                                   double rel_tol);

/// sum_i A_i x_i - b.
Vec coupling_residual(const DistributedProblem& problem, const std::vector<Vec>& x);

/// Quadratic node f(x) = 1/2 x^T Q x + q^T x with affine constraints C x + d = 0.
NodeProblem make_quadratic_node(Mat Q, Vec q, Mat C, Vec d, std::string name = {});

/// Parses the declarative quadratic/affine problem format:
///   { "nodes": [ { "Q": [[..]], "c": [..], "C": [[..]], "d": [..] } ],
///     "coupling": { "A": [ [[..]] ], "b": [..] }, "rho": 25.0 }
/// Throws ConfigError on malformed input.
DistributedProblem load_problem_json(const std::string& text);
DistributedProblem load_problem_file(const std::string& path);

}  // namespace aladin
