#pragma once

#include <optional>
#include <vector>

#include "aladin/problem.hpp"

namespace aladin {

struct LocalSolveConfig {
  // On both stationarity and feasibility (inf-norm), raised to 128 eps times
  // the largest stationarity summand when that is larger.
  double kkt_tol = 1e-12;
  int max_newton_steps = 50;
  double regularization_floor = 1e-8;  // first tau tried when inertia is wrong
  double backtracking = 0.5;
  double min_step = 1e-12;

  void validate() const;
};

struct LocalSolution {
  Vec x;
  Vec mu;
  double kkt_residual = 0.0;
  int newton_steps = 0;
  int regularizations = 0;  // Newton steps that needed tau > 0
  bool converged = false;
};

struct WarmStart {
  Vec x;
  Vec mu;
};

/// Solves the augmented-Lagrangian subproblem of one node
///
///   min_x  f(x) + lambda^T A x + rho/2 |x - y_ref|^2   s.t.  g(x) = 0
///
/// by Newton iterations on the KKT system. The Hessian block is regularized by
/// tau*I (tau = 0, then tau_0, 10 tau_0, ...) until the reduced Hessian is
/// positive definite, and steps are globalized by backtracking on |KKT|_2.
/// Uses the node's Lagrangian Hessian, or its Gauss-Newton Hessian when the
/// former is absent.
///
/// Without a warm start the iteration begins at (y_ref, 0). Hitting
/// max_newton_steps returns the best iterate with converged = false; a
/// line search that shrinks below min_step throws SolveStalled.
LocalSolution solve_local(const NodeProblem& node, const Vec& lambda, const Vec& y_ref,
                          const Mat& A, double rho, const std::optional<WarmStart>& warm,
                          const LocalSolveConfig& cfg = {});

struct CentralizedSolution {
  std::vector<Vec> x;
  Vec lambda;
  std::vector<Vec> mu;
  double kkt_residual = 0.0;
  int newton_steps = 0;
  bool converged = false;
};

/// Solves the stacked problem (all nodes, coupling rows appended to the local
/// equality constraints) with the same Newton-KKT machinery. `init` is the
/// stacked primal starting point.
CentralizedSolution centralized_solve(const DistributedProblem& problem, const Vec& init,
                                      const LocalSolveConfig& cfg = {});

/// Concatenates per-node vectors.
Vec stack(const std::vector<Vec>& parts);
/// Splits a stacked vector according to the node dimensions of `problem`.
std::vector<Vec> unstack(const DistributedProblem& problem, const Vec& stacked);

}  // namespace aladin

namespace aladin {

/// min f(x) s.t. g(x) = 0 for a single node, without coupling or proximal
/// term. Same Newton-KKT machinery as centralized_solve.
LocalSolution solve_equality_constrained(const NodeProblem& node, const Vec& init,
                                         const LocalSolveConfig& cfg = {});

}  // namespace aladin
