#include "aladin/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "aladin/errors.hpp"

namespace aladin {
namespace {

std::string describe_point(const Vec& x) {
  std::ostringstream os;
  os << "[";
  const Eigen::Index shown = std::min<Eigen::Index>(x.size(), 6);
  for (Eigen::Index i = 0; i < shown; ++i) {
    if (i) os << ", ";
    os << x[i];
  }
  if (shown < x.size()) os << ", ... (" << x.size() << " entries)";
  os << "]";
  return os.str();
}

[[noreturn]] void oracle_failure(const NodeProblem& node, const char* oracle,
                                 const std::string& why, const Vec& x) {
  std::string who = node.name.empty() ? std::string("node") : node.name;
  throw OracleError(who + ": oracle '" + oracle + "' " + why + " at x = " +
                    describe_point(x));
}

template <typename Derived>
void require_finite(const NodeProblem& node, const char* oracle,
                    const Eigen::DenseBase<Derived>& value, const Vec& x) {
  if (!value.allFinite()) oracle_failure(node, oracle, "returned a non-finite value", x);
}

void require_input(const NodeProblem& node, const char* oracle, const Vec& x) {
  if (x.size() != node.n)
    throw ShapeError((node.name.empty() ? std::string("node") : node.name) + ": oracle '" +
                     oracle + "' called with a point of length " + std::to_string(x.size()) +
                     ", expected " + std::to_string(node.n));
}

}  // namespace

double NodeProblem::eval_objective(const Vec& x) const {
  require_input(*this, "objective", x);
  const double v = objective(x);
  if (!std::isfinite(v)) oracle_failure(*this, "objective", "returned a non-finite value", x);
  return v;
}

Vec NodeProblem::eval_gradient(const Vec& x) const {
  require_input(*this, "objective_gradient", x);
  Vec g = objective_gradient(x);
  if (g.size() != n) oracle_failure(*this, "objective_gradient", "returned the wrong length", x);
  require_finite(*this, "objective_gradient", g, x);
  return g;
}

Vec NodeProblem::eval_constraint(const Vec& x) const {
  require_input(*this, "constraint", x);
  if (c == 0) return Vec(0);
  Vec g = constraint(x);
  if (g.size() != c) oracle_failure(*this, "constraint", "returned the wrong length", x);
  require_finite(*this, "constraint", g, x);
  return g;
}

Mat NodeProblem::eval_jacobian(const Vec& x) const {
  require_input(*this, "constraint_jacobian", x);
  if (c == 0) return Mat(0, n);
  Mat J = constraint_jacobian(x);
  if (J.rows() != c || J.cols() != n)
    oracle_failure(*this, "constraint_jacobian", "returned the wrong shape", x);
  require_finite(*this, "constraint_jacobian", J, x);
  return J;
}

Mat NodeProblem::eval_lagrangian_hessian(const Vec& x, const Vec& mu) const {
  require_input(*this, "lagrangian_hessian", x);
  if (!lagrangian_hessian) oracle_failure(*this, "lagrangian_hessian", "is not provided", x);
  if (mu.size() != c)
    throw ShapeError("lagrangian_hessian: multiplier has length " + std::to_string(mu.size()) +
                     ", expected " + std::to_string(c));
  Mat W = lagrangian_hessian(x, mu);
  if (W.rows() != n || W.cols() != n)
    oracle_failure(*this, "lagrangian_hessian", "returned the wrong shape", x);
  require_finite(*this, "lagrangian_hessian", W, x);
  return W;
}

Mat NodeProblem::eval_gn_hessian(const Vec& x) const {
  require_input(*this, "gn_hessian", x);
  if (!gn_hessian) oracle_failure(*this, "gn_hessian", "is not provided", x);
  Mat H = gn_hessian(x);
  if (H.rows() != n || H.cols() != n)
    oracle_failure(*this, "gn_hessian", "returned the wrong shape", x);
  require_finite(*this, "gn_hessian", H, x);
  return H;
}

void DistributedProblem::validate() const {
  if (nodes.empty()) throw ShapeError("problem has no nodes");
  if (coupling.m <= 0) throw ShapeError("coupling row count m must be positive");
  if (static_cast<int>(coupling.blocks.size()) != node_count())
    throw ShapeError("coupling has " + std::to_string(coupling.blocks.size()) +
                     " blocks for " + std::to_string(node_count()) + " nodes");
  if (coupling.rhs.size() != coupling.m) throw ShapeError("coupling rhs length differs from m");
  for (int i = 0; i < node_count(); ++i) {
    const auto& A = coupling.blocks[static_cast<std::size_t>(i)];
    const auto& node = nodes[static_cast<std::size_t>(i)];
    if (node.n <= 0 || node.c < 0)
      throw ShapeError("node " + std::to_string(i) + " has invalid dimensions");
    if (A.rows() != coupling.m || A.cols() != node.n)
      throw ShapeError("coupling block " + std::to_string(i) + " is " +
                       std::to_string(A.rows()) + "x" + std::to_string(A.cols()) +
                       ", expected " + std::to_string(coupling.m) + "x" +
                       std::to_string(node.n));
  }
  if (!(rho > 0.0)) throw ShapeError("penalty rho must be positive");
}

DerivativeReport check_derivatives(const NodeProblem& node, const Vec& point, double rel_tol) {
  if (point.size() != node.n) throw ShapeError("check_derivatives: point has wrong length");
  if (!(rel_tol > 0.0)) throw DomainError("check_derivatives: rel_tol must be positive");

  const double h = 1e-6 * (1.0 + point.lpNorm<Eigen::Infinity>());
  const Vec grad = node.eval_gradient(point);
  const Mat jac = node.eval_jacobian(point);

  Vec fd_grad(node.n);
  Mat fd_jac(node.c, node.n);
  Vec xp = point;
  Vec xm = point;
  for (int j = 0; j < node.n; ++j) {
    xp[j] = point[j] + h;
    xm[j] = point[j] - h;
    fd_grad[j] = (node.eval_objective(xp) - node.eval_objective(xm)) / (2.0 * h);
    if (node.c > 0) fd_jac.col(j) = (node.eval_constraint(xp) - node.eval_constraint(xm)) / (2.0 * h);
    xp[j] = point[j];
    xm[j] = point[j];
  }

  DerivativeReport report;
  report.max_gradient_error = (grad - fd_grad).lpNorm<Eigen::Infinity>() /
                              std::max(1.0, grad.lpNorm<Eigen::Infinity>());
  if (node.c > 0) {
    report.max_jacobian_error = (jac - fd_jac).lpNorm<Eigen::Infinity>() /
                                std::max(1.0, jac.lpNorm<Eigen::Infinity>());
  }
  report.pass = report.max_gradient_error <= rel_tol && report.max_jacobian_error <= rel_tol;
  return report;
}

Vec coupling_residual(const DistributedProblem& problem, const std::vector<Vec>& x) {
  const auto& cs = problem.coupling;
  if (x.size() != cs.blocks.size())
    throw ShapeError("coupling_residual: expected " + std::to_string(cs.blocks.size()) +
                     " node vectors, got " + std::to_string(x.size()));
  Vec r = -cs.rhs;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != cs.blocks[i].cols())
      throw ShapeError("coupling_residual: node " + std::to_string(i) + " vector has length " +
                       std::to_string(x[i].size()) + ", block expects " +
                       std::to_string(cs.blocks[i].cols()));
    r.noalias() += cs.blocks[i] * x[i];
  }
  return r;
}

NodeProblem make_quadratic_node(Mat Q, Vec q, Mat C, Vec d, std::string name) {
  const auto n = Q.rows();
  if (Q.cols() != n || q.size() != n) throw ShapeError("quadratic node: Q/c shapes disagree");
  if (C.size() == 0) C.resize(0, n);
  if (C.cols() != n || d.size() != C.rows())
    throw ShapeError("quadratic node: C/d shapes disagree");

  NodeProblem node;
  node.n = static_cast<int>(n);
  node.c = static_cast<int>(C.rows());
  node.name = std::move(name);
  node.objective = [Q, q](const Vec& x) { return 0.5 * x.dot(Q * x) + q.dot(x); };
  node.objective_gradient = [Q, q](const Vec& x) -> Vec { return Q * x + q; };
  node.constraint = [C, d](const Vec& x) -> Vec { return C * x + d; };
  node.constraint_jacobian = [C](const Vec&) -> Mat { return C; };
  node.lagrangian_hessian = [Q](const Vec&, const Vec&) -> Mat { return Q; };
  node.gn_hessian = [Q](const Vec&) -> Mat { return Q; };
  return node;
}

namespace {

using nlohmann::json;

Vec vector_from(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(what + " must contain only numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Mat matrix_from(const json& j, const std::string& what, Eigen::Index cols_if_empty) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of rows");
  if (j.empty()) return Mat(0, cols_if_empty);
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Mat M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vec row = vector_from(j[static_cast<std::size_t>(r)], what + " row");
    if (row.size() != cols) throw ConfigError(what + " has ragged rows");
    M.row(r) = row.transpose();
  }
  return M;
}

}  // namespace

DistributedProblem load_problem_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("problem config is not valid JSON: ") + e.what());
  }
  if (!doc.contains("nodes") || !doc.contains("coupling"))
    throw ConfigError("problem config needs 'nodes' and 'coupling'");

  DistributedProblem problem;
  const auto& nodes = doc.at("nodes");
  if (!nodes.is_array() || nodes.empty()) throw ConfigError("'nodes' must be a non-empty array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& nj = nodes[i];
    const std::string tag = "nodes[" + std::to_string(i) + "]";
    if (!nj.contains("Q")) throw ConfigError(tag + " is missing 'Q'");
    Mat Q = matrix_from(nj.at("Q"), tag + ".Q", 0);
    if (Q.rows() == 0 || Q.rows() != Q.cols()) throw ConfigError(tag + ".Q must be square");
    if (!Q.isApprox(Q.transpose(), 1e-12)) throw ConfigError(tag + ".Q must be symmetric");
    Vec q = nj.contains("c") ? vector_from(nj.at("c"), tag + ".c") : Vec::Zero(Q.rows());
    Mat C = nj.contains("C") ? matrix_from(nj.at("C"), tag + ".C", Q.rows()) : Mat(0, Q.rows());
    Vec d = nj.contains("d") ? vector_from(nj.at("d"), tag + ".d") : Vec::Zero(C.rows());
    try {
      problem.nodes.push_back(make_quadratic_node(Q, q, C, d, tag));
    } catch (const ShapeError& e) {
      throw ConfigError(tag + ": " + e.what());
    }
  }

  const auto& cj = doc.at("coupling");
  if (!cj.contains("A") || !cj.contains("b")) throw ConfigError("'coupling' needs 'A' and 'b'");
  problem.coupling.rhs = vector_from(cj.at("b"), "coupling.b");
  problem.coupling.m = static_cast<int>(problem.coupling.rhs.size());
  const auto& blocks = cj.at("A");
  if (!blocks.is_array()) throw ConfigError("coupling.A must be an array of matrices");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    problem.coupling.blocks.push_back(
        matrix_from(blocks[i], "coupling.A[" + std::to_string(i) + "]", 0));
  }
  if (doc.contains("rho")) problem.rho = doc.at("rho").get<double>();

  try {
    problem.validate();
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("problem config: ") + e.what());
  }
  return problem;
}

DistributedProblem load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open problem config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_problem_json(buf.str());
}

}  // namespace aladin
