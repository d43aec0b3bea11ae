#include "aladin/local_solver.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>

#include "aladin/errors.hpp"

namespace aladin {

void LocalSolveConfig::validate() const {
  if (!(kkt_tol > 0.0) || max_newton_steps <= 0 || !(regularization_floor > 0.0) ||
      !(min_step > 0.0))
    throw DomainError("LocalSolveConfig: tolerances and limits must be positive");
  if (!(backtracking > 0.0 && backtracking < 1.0))
    throw DomainError("LocalSolveConfig: backtracking factor must lie in (0, 1)");
}

namespace {

std::string format_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// Equality-constrained model consumed by the Newton-KKT iteration.
struct KktModel {
  int n = 0;
  int c = 0;
  std::function<Vec(const Vec&)> gradient;  // of the (augmented) objective
  std::function<Vec(const Vec&)> constraint;
  std::function<Mat(const Vec&)> jacobian;
  std::function<Mat(const Vec&, const Vec&)> hessian;  // of objective + mu^T g
};

struct Residual {
  Vec r;  // [grad L; g]
  double inf_stationarity = 0.0;
  double inf_feasibility = 0.0;
  double term_scale = 1.0;  // largest summand of the stationarity residual

  double kkt_inf() const { return std::max(inf_stationarity, inf_feasibility); }
  double merit() const { return r.norm(); }
  // An absolute tolerance below the rounding error of the residual itself
  // can never be met; objectives with large weights sit just above 1e-12.
  bool converged(double kkt_tol) const {
    constexpr double kRoundingFactor = 128.0 * std::numeric_limits<double>::epsilon();
    return kkt_inf() <= std::max(kkt_tol, kRoundingFactor * term_scale);
  }
};

Residual kkt_residual(const KktModel& model, const Vec& x, const Vec& mu) {
  Residual res;
  res.r.resize(model.n + model.c);
  Vec grad = model.gradient(x);
  res.term_scale = std::max(1.0, grad.lpNorm<Eigen::Infinity>());
  if (model.c > 0) {
    const Mat J = model.jacobian(x);
    const Vec multiplier_term = J.transpose() * mu;
    res.term_scale = std::max(res.term_scale, multiplier_term.lpNorm<Eigen::Infinity>());
    grad += multiplier_term;
    res.r.tail(model.c) = model.constraint(x);
    res.inf_feasibility = res.r.tail(model.c).lpNorm<Eigen::Infinity>();
  }
  res.r.head(model.n) = grad;
  res.inf_stationarity = grad.lpNorm<Eigen::Infinity>();
  if (!res.r.allFinite()) res.inf_stationarity = std::numeric_limits<double>::infinity();
  return res;
}

// Orthonormal basis of null(J), J being c x n with full row rank.
Mat nullspace_basis(const Mat& J) {
  const auto n = J.cols();
  const auto c = J.rows();
  if (c == 0) return Mat::Identity(n, n);
  if (c >= n) throw NumericalError("constraint count reaches the decision dimension");
  Eigen::ColPivHouseholderQR<Mat> qr(J.transpose());
  if (qr.rank() < c) throw NumericalError("constraint Jacobian lost full row rank");
  Mat Q = qr.householderQ();
  return Q.rightCols(n - c);
}

LocalSolution newton_kkt(const KktModel& model, Vec x, Vec mu, const LocalSolveConfig& cfg) {
  cfg.validate();
  const int n = model.n;
  const int c = model.c;

  LocalSolution best;
  double best_merit = std::numeric_limits<double>::infinity();

  Residual res = kkt_residual(model, x, mu);
  int regularizations = 0;
  for (int step = 0;; ++step) {
    if (res.merit() < best_merit) {
      best_merit = res.merit();
      best.x = x;
      best.mu = mu;
      best.kkt_residual = res.kkt_inf();
    }
    best.newton_steps = step;
    best.regularizations = regularizations;
    if (res.converged(cfg.kkt_tol)) {
      best.x = x;
      best.mu = mu;
      best.kkt_residual = res.kkt_inf();
      best.converged = true;
      return best;
    }
    if (step == cfg.max_newton_steps) break;

    const Mat W = model.hessian(x, mu);
    const Mat J = c > 0 ? model.jacobian(x) : Mat(0, n);
    const Mat Z = nullspace_basis(J);
    const Mat reduced = Z.transpose() * W * Z;

    double tau = 0.0;
    for (;;) {
      Mat shifted = reduced;
      shifted.diagonal().array() += tau;
      Eigen::LLT<Mat> llt(shifted);
      if (llt.info() == Eigen::Success) break;
      tau = tau == 0.0 ? cfg.regularization_floor : tau * 10.0;
      if (tau > 1e20) throw NumericalError("inertia correction failed: tau exceeded 1e20");
    }
    if (tau > 0.0) ++regularizations;

    Mat K = Mat::Zero(n + c, n + c);
    K.topLeftCorner(n, n) = W;
    if (c > 0) {
      K.topRightCorner(n, c) = J.transpose();
      K.bottomLeftCorner(c, n) = J;
    }
    auto newton_step = [&](double shift) -> Vec {
      Mat Ks = K;
      Ks.topLeftCorner(n, n).diagonal().array() += shift;
      Vec delta = Eigen::PartialPivLU<Mat>(Ks).solve(-res.r);
      if (!delta.allFinite()) throw NumericalError("Newton-KKT step is not finite");
      return delta;
    };
    // Backtracking on |KKT|_2; returns false when the step gives no decrease.
    auto line_search = [&](const Vec& delta) -> bool {
      const double merit0 = res.merit();
      for (double alpha = 1.0; alpha >= cfg.min_step; alpha *= cfg.backtracking) {
        Vec x_trial = x + alpha * delta.head(n);
        Vec mu_trial = mu + alpha * delta.tail(c);
        Residual trial = kkt_residual(model, x_trial, mu_trial);
        if (trial.merit() <= (1.0 - 1e-4 * alpha) * merit0 || trial.converged(cfg.kkt_tol)) {
          x = std::move(x_trial);
          mu = std::move(mu_trial);
          res = std::move(trial);
          return true;
        }
      }
      return false;
    };

    // The shifted step is not always a descent direction for the residual
    // norm; the exact Newton step is whenever K is nonsingular.
    if (line_search(newton_step(tau))) continue;
    if (tau > 0.0 && line_search(newton_step(0.0))) continue;
    throw SolveStalled("Newton-KKT line search stalled at |KKT|_inf = " +
                       format_sci(res.kkt_inf()) + " after " + std::to_string(step) + " steps");
  }
  best.converged = false;
  return best;
}

std::function<Mat(const Vec&, const Vec&)> hessian_source(const NodeProblem& node) {
  if (node.has_lagrangian_hessian())
    return [&node](const Vec& x, const Vec& mu) { return node.eval_lagrangian_hessian(x, mu); };
  if (node.has_gn_hessian())
    return [&node](const Vec& x, const Vec&) { return node.eval_gn_hessian(x); };
  throw OracleError((node.name.empty() ? std::string("node") : node.name) +
                    ": Newton-KKT solve needs lagrangian_hessian or gn_hessian");
}

}  // namespace

LocalSolution solve_local(const NodeProblem& node, const Vec& lambda, const Vec& y_ref,
                          const Mat& A, double rho, const std::optional<WarmStart>& warm,
                          const LocalSolveConfig& cfg) {
  if (!(rho > 0.0)) throw DomainError("solve_local: rho must be positive");
  if (y_ref.size() != node.n || A.cols() != node.n || A.rows() != lambda.size())
    throw ShapeError("solve_local: lambda, y_ref and A are inconsistent with the node");

  const Vec dual_term = A.transpose() * lambda;
  KktModel model;
  model.n = node.n;
  model.c = node.c;
  model.gradient = [&](const Vec& x) -> Vec {
    return node.eval_gradient(x) + dual_term + rho * (x - y_ref);
  };
  model.constraint = [&](const Vec& x) { return node.eval_constraint(x); };
  model.jacobian = [&](const Vec& x) { return node.eval_jacobian(x); };
  auto base_hessian = hessian_source(node);
  model.hessian = [&](const Vec& x, const Vec& mu) -> Mat {
    Mat W = base_hessian(x, mu);
    W.diagonal().array() += rho;
    return W;
  };

  Vec x0 = y_ref;
  Vec mu0 = Vec::Zero(node.c);
  if (warm) {
    if (warm->x.size() != node.n || warm->mu.size() != node.c)
      throw ShapeError("solve_local: warm start has wrong dimensions");
    x0 = warm->x;
    mu0 = warm->mu;
  }
  return newton_kkt(model, std::move(x0), std::move(mu0), cfg);
}

Vec stack(const std::vector<Vec>& parts) {
  Eigen::Index total = 0;
  for (const auto& p : parts) total += p.size();
  Vec out(total);
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.segment(offset, p.size()) = p;
    offset += p.size();
  }
  return out;
}

std::vector<Vec> unstack(const DistributedProblem& problem, const Vec& stacked) {
  std::vector<Vec> parts;
  Eigen::Index offset = 0;
  for (const auto& node : problem.nodes) {
    if (offset + node.n > stacked.size()) throw ShapeError("unstack: vector too short");
    parts.emplace_back(stacked.segment(offset, node.n));
    offset += node.n;
  }
  if (offset != stacked.size()) throw ShapeError("unstack: vector too long");
  return parts;
}

CentralizedSolution centralized_solve(const DistributedProblem& problem, const Vec& init,
                                      const LocalSolveConfig& cfg) {
  problem.validate();
  const int N = problem.node_count();
  const int m = problem.coupling.m;

  std::vector<Eigen::Index> x_off(N), c_off(N);
  int n_total = 0;
  int c_local = 0;
  for (int i = 0; i < N; ++i) {
    x_off[i] = n_total;
    c_off[i] = c_local;
    n_total += problem.nodes[i].n;
    c_local += problem.nodes[i].c;
  }
  if (init.size() != n_total) throw ShapeError("centralized_solve: init has wrong length");

  std::vector<std::function<Mat(const Vec&, const Vec&)>> hessians;
  for (const auto& node : problem.nodes) hessians.push_back(hessian_source(node));

  KktModel model;
  model.n = n_total;
  model.c = c_local + m;
  model.gradient = [&](const Vec& x) -> Vec {
    Vec g(n_total);
    for (int i = 0; i < N; ++i) {
      const auto& node = problem.nodes[i];
      g.segment(x_off[i], node.n) = node.eval_gradient(x.segment(x_off[i], node.n));
    }
    return g;
  };
  model.constraint = [&](const Vec& x) -> Vec {
    Vec g(c_local + m);
    Vec coupling = -problem.coupling.rhs;
    for (int i = 0; i < N; ++i) {
      const auto& node = problem.nodes[i];
      const Vec xi = x.segment(x_off[i], node.n);
      if (node.c > 0) g.segment(c_off[i], node.c) = node.eval_constraint(xi);
      coupling.noalias() += problem.coupling.blocks[i] * xi;
    }
    g.tail(m) = coupling;
    return g;
  };
  model.jacobian = [&](const Vec& x) -> Mat {
    Mat J = Mat::Zero(c_local + m, n_total);
    for (int i = 0; i < N; ++i) {
      const auto& node = problem.nodes[i];
      if (node.c > 0)
        J.block(c_off[i], x_off[i], node.c, node.n) =
            node.eval_jacobian(x.segment(x_off[i], node.n));
      J.block(c_local, x_off[i], m, node.n) = problem.coupling.blocks[i];
    }
    return J;
  };
  model.hessian = [&](const Vec& x, const Vec& mu) -> Mat {
    Mat W = Mat::Zero(n_total, n_total);
    for (int i = 0; i < N; ++i) {
      const auto& node = problem.nodes[i];
      W.block(x_off[i], x_off[i], node.n, node.n) =
          hessians[i](x.segment(x_off[i], node.n), mu.segment(c_off[i], node.c));
    }
    return W;
  };

  const LocalSolution sol = newton_kkt(model, init, Vec::Zero(c_local + m), cfg);

  CentralizedSolution out;
  out.lambda = sol.mu.tail(m);
  for (int i = 0; i < N; ++i) {
    out.x.emplace_back(sol.x.segment(x_off[i], problem.nodes[i].n));
    out.mu.emplace_back(sol.mu.segment(c_off[i], problem.nodes[i].c));
  }
  out.kkt_residual = sol.kkt_residual;
  out.newton_steps = sol.newton_steps;
  out.converged = sol.converged;
  return out;
}

}  // namespace aladin

namespace aladin {

LocalSolution solve_equality_constrained(const NodeProblem& node, const Vec& init,
                                         const LocalSolveConfig& cfg) {
  if (init.size() != node.n) throw ShapeError("solve_equality_constrained: init has wrong length");
  KktModel model;
  model.n = node.n;
  model.c = node.c;
  model.gradient = [&](const Vec& x) { return node.eval_gradient(x); };
  model.constraint = [&](const Vec& x) { return node.eval_constraint(x); };
  model.jacobian = [&](const Vec& x) { return node.eval_jacobian(x); };
  model.hessian = hessian_source(node);
  return newton_kkt(model, init, Vec::Zero(node.c), cfg);
}

}  // namespace aladin
