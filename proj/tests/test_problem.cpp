#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "aladin/errors.hpp"
#include "aladin/mhe.hpp"
#include "aladin/problem.hpp"
#include "aladin/random_instances.hpp"

using namespace aladin;

namespace {

NodeProblem bilinear_node() {
  NodeProblem node;
  node.n = 2;
  node.objective = [](const Vec& x) { return x(0) * x(1); };
  node.objective_gradient = [](const Vec& x) { return Vec((Vec(2) << x(1), x(0)).finished()); };
  node.constraint = [](const Vec&) { return Vec(0); };
  node.constraint_jacobian = [](const Vec&) { return Mat(0, 2); };
  return node;
}

}  // namespace

TEST_CASE("check_derivatives accepts an exact quadratic gradient") {
  const auto node = make_quadratic_node(Mat::Identity(3, 3), Vec::Zero(3), Mat(0, 3), Vec(0));
  Rng rng(3);
  for (int t = 0; t < 5; ++t) {
    const auto rep = check_derivatives(node, gen::random_vector(rng, 3, -10, 10), 1e-7);
    CHECK(rep.pass);
    CHECK(rep.max_gradient_error <= 1e-7);
  }
}

TEST_CASE("check_derivatives on x1 x2 at (1, 1)") {
  const auto rep = check_derivatives(bilinear_node(), Vec::Ones(2), 1e-5);
  CHECK(rep.pass);
  CHECK(bilinear_node().eval_gradient(Vec::Ones(2)).isApprox(Vec::Ones(2)));
}

TEST_CASE("check_derivatives flags a wrong gradient") {
  auto node = bilinear_node();
  node.objective_gradient = [](const Vec& x) { return Vec((Vec(2) << x(0), x(1)).finished()); };
  const Vec p = (Vec(2) << 1.0, 2.0).finished();
  const auto rep = check_derivatives(node, p, 1e-4);
  CHECK_FALSE(rep.pass);
  CHECK(rep.max_gradient_error > 0.1);
}

TEST_CASE("check_derivatives rejects bad arguments") {
  CHECK_THROWS_AS(check_derivatives(bilinear_node(), Vec::Ones(3), 1e-4), ShapeError);
  CHECK_THROWS_AS(check_derivatives(bilinear_node(), Vec::Ones(2), 0.0), DomainError);
}

TEST_CASE("oracle wrappers reject non-finite output and wrong shapes") {
  auto node = bilinear_node();
  node.objective = [](const Vec&) { return std::nan(""); };
  CHECK_THROWS_AS(node.eval_objective(Vec::Ones(2)), OracleError);
  node.objective_gradient = [](const Vec&) { return Vec::Ones(3); };
  CHECK_THROWS_AS(node.eval_gradient(Vec::Ones(2)), OracleError);
  CHECK_THROWS_AS(node.eval_constraint(Vec::Ones(5)), ShapeError);
}

TEST_CASE("coupling_residual examples") {
  SUBCASE("single node, zero point") {
    DistributedProblem p;
    p.nodes.push_back(make_quadratic_node(Mat::Identity(2, 2), Vec::Zero(2), Mat(0, 2), Vec(0)));
    p.coupling = {{Mat::Identity(2, 2)}, Vec::Zero(2), 2};
    CHECK(coupling_residual(p, {Vec::Zero(2)}).isZero(0.0));
  }
  SUBCASE("two scalar nodes summing to b") {
    DistributedProblem p;
    for (int i = 0; i < 2; ++i)
      p.nodes.push_back(make_quadratic_node(Mat::Identity(1, 1), Vec::Zero(1), Mat(0, 1), Vec(0)));
    p.coupling = {{Mat::Ones(1, 1), Mat::Ones(1, 1)}, Vec::Constant(1, 3.0), 1};
    const Vec r = coupling_residual(p, {Vec::Constant(1, 1.0), Vec::Constant(1, 2.0)});
    CHECK(r(0) == 0.0);
  }
  SUBCASE("shape errors") {
    auto p = gen::consensus_problem({Vec::Zero(2), Vec::Zero(2)});
    CHECK_THROWS_AS(coupling_residual(p, {Vec::Zero(2)}), ShapeError);
    CHECK_THROWS_AS(coupling_residual(p, {Vec::Zero(2), Vec::Zero(3)}), ShapeError);
  }
}

TEST_CASE("MHE split residual vanishes on the stacked true trajectory") {
  const auto bench = mhe::make_benchmark(7, 25, 4, 25.0);
  const std::vector<mhe::State> truth(bench.truth.states.begin(), bench.truth.states.begin() + 26);
  const auto windows = mhe::split_states(bench.split.layout, truth);
  CHECK(coupling_residual(bench.split.problem, windows).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("coupling residual is affine in x") {
  Rng rng(11);
  const auto p = gen::random_quadratic_problem(rng, 3, 4, 1, 3);
  std::vector<Vec> x, dx, moved;
  Vec expected = Vec::Zero(3);
  for (int i = 0; i < 3; ++i) {
    x.push_back(gen::random_vector(rng, 4));
    dx.push_back(gen::random_vector(rng, 4));
    moved.push_back(x[i] + dx[i]);
    expected += p.coupling.blocks[i] * dx[i];
  }
  const Vec diff = coupling_residual(p, moved) - coupling_residual(p, x);
  CHECK((diff - expected).lpNorm<Eigen::Infinity>() <= 1e-13);
}

TEST_CASE("DistributedProblem::validate catches inconsistent shapes") {
  auto p = gen::consensus_problem({Vec::Zero(2), Vec::Zero(2)});
  CHECK_NOTHROW(p.validate());
  auto bad = p;
  bad.coupling.rhs = Vec::Zero(5);
  CHECK_THROWS_AS(bad.validate(), ShapeError);
  bad = p;
  bad.coupling.blocks.pop_back();
  CHECK_THROWS_AS(bad.validate(), ShapeError);
  bad = p;
  bad.rho = 0.0;
  CHECK_THROWS_AS(bad.validate(), ShapeError);
}

TEST_CASE("quadratic node oracles") {
  Mat Q(2, 2);
  Q << 2, 1, 1, 3;
  const Vec q = (Vec(2) << 1, -1).finished();
  Mat C(1, 2);
  C << 1, 1;
  const Vec d = Vec::Constant(1, -1.0);
  const auto node = make_quadratic_node(Q, q, C, d, "quad");
  const Vec x = (Vec(2) << 0.5, -2.0).finished();
  CHECK(node.eval_objective(x) == doctest::Approx(0.5 * x.dot(Q * x) + q.dot(x)));
  CHECK(node.eval_gradient(x).isApprox(Q * x + q));
  CHECK(node.eval_constraint(x)(0) == doctest::Approx(-2.5));
  CHECK(node.eval_lagrangian_hessian(x, Vec::Ones(1)).isApprox(Q));
  CHECK_THROWS_AS(make_quadratic_node(Q, Vec::Zero(3), C, d), ShapeError);
}

TEST_CASE("load_problem_json parses the declarative format") {
  const char* text = R"({
    "nodes": [ {"Q": [[2, 0], [0, 2]], "c": [1, 0], "C": [[1, 1]], "d": [-1]},
               {"Q": [[1]], "c": [0]} ],
    "coupling": {"A": [ [[1, 0]], [[-1]] ], "b": [0.5]},
    "rho": 10.0 })";
  const auto p = load_problem_json(text);
  REQUIRE(p.node_count() == 2);
  CHECK(p.nodes[0].n == 2);
  CHECK(p.nodes[0].c == 1);
  CHECK(p.nodes[1].c == 0);
  CHECK(p.coupling.m == 1);
  CHECK(p.coupling.rhs(0) == 0.5);
  CHECK(p.rho == 10.0);
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("load_problem_json rejects malformed input") {
  CHECK_THROWS_AS(load_problem_json("{not json"), ConfigError);
  CHECK_THROWS_AS(load_problem_json(R"({"nodes": []})"), ConfigError);
  CHECK_THROWS_AS(load_problem_json(R"({"nodes": [], "coupling": {"A": [], "b": [1]}})"),
                  ConfigError);
  CHECK_THROWS_AS(
      load_problem_json(R"({"nodes": [{"Q": [[1, 2], [3, 4]]}], "coupling": {"A": [[[1, 0]]], "b": [0]}})"),
      ConfigError);
  CHECK_THROWS_AS(
      load_problem_json(R"({"nodes": [{"Q": [[1, 0], [0]]}], "coupling": {"A": [[[1, 0]]], "b": [0]}})"),
      ConfigError);
  CHECK_THROWS_AS(load_problem_file("/nonexistent/problem.json"), ConfigError);
}

TEST_CASE("load_problem_file reads from disk") {
  const std::string path = "test_problem_roundtrip.json";
  {
    std::ofstream out(path);
    out << R"({"nodes": [{"Q": [[1]], "c": [-2]}], "coupling": {"A": [[[1]]], "b": [0]}})";
  }
  const auto p = load_problem_file(path);
  CHECK(p.nodes[0].eval_gradient(Vec::Zero(1))(0) == -2.0);
  std::remove(path.c_str());
}
