#include "doctest.h"

#include "aladin/errors.hpp"
#include "aladin/mhe.hpp"
#include "aladin/random_instances.hpp"
#include "aladin/sensitivity.hpp"

using namespace aladin;

TEST_CASE("make_diffs of identical iterates is zero") {
  IterateSnapshot s{Vec::Ones(3), Vec::Ones(3), Vec::Ones(2), Vec::Ones(2)};
  const auto dp = make_diffs(s, s, Mat::Ones(2, 3));
  CHECK(dp.S.isZero(0.0));
  CHECK(dp.d.isZero(0.0));
  CHECK(dp.z.isZero(0.0));
  CHECK(dp.sigma.isZero(0.0));
  CHECK(dp.gamma.isZero(0.0));
  CHECK(dp.scalar_count() == 3 * 3 + 2 * 2);
}

TEST_CASE("gamma under an identity Jacobian equals sigma") {
  IterateSnapshot prev{Vec::Zero(2), Vec::Zero(2), Vec::Zero(2), Vec::Zero(2)};
  IterateSnapshot curr = prev;
  curr.mu = (Vec(2) << 1.0, 0.0).finished();
  const auto dp = make_diffs(prev, curr, Mat::Identity(2, 2));
  CHECK(dp.gamma == (Vec(2) << 1.0, 0.0).finished());
}

TEST_CASE("MHE gamma matches a finite-difference directional derivative of sigma^T g") {
  const auto bench = mhe::make_benchmark(7, 25, 4, 25.0);
  const auto& node = bench.split.problem.nodes[1];
  Rng rng(4);
  const Vec x0 = bench.y0[1];
  const Vec x1 = x0 + gen::random_vector(rng, node.n, -0.05, 0.05);
  IterateSnapshot prev{x0, node.eval_gradient(x0), node.eval_constraint(x0), Vec::Zero(node.c)};
  IterateSnapshot curr{x1, node.eval_gradient(x1), node.eval_constraint(x1), gen::random_vector(rng, node.c)};
  const auto dp = make_diffs(prev, curr, node.eval_jacobian(x1));
  const double h = 1e-6;
  for (int j = 0; j < node.n; ++j) {
    Vec e = Vec::Zero(node.n);
    e(j) = h;
    const double fd =
        (dp.sigma.dot(node.eval_constraint(x1 + e)) - dp.sigma.dot(node.eval_constraint(x1 - e))) / (2 * h);
    CHECK(std::abs(fd - dp.gamma(j)) <= 1e-5);
  }
}

TEST_CASE("make_diffs rejects mismatched shapes") {
  IterateSnapshot a{Vec::Zero(2), Vec::Zero(2), Vec::Zero(1), Vec::Zero(1)};
  IterateSnapshot b{Vec::Zero(3), Vec::Zero(3), Vec::Zero(1), Vec::Zero(1)};
  CHECK_THROWS_AS(make_diffs(a, b, Mat::Zero(1, 3)), ShapeError);
  CHECK_THROWS_AS(make_diffs(a, a, Mat::Zero(2, 2)), ShapeError);
}

TEST_CASE("BFGS with d = H S leaves H unchanged") {
  Rng rng(1);
  const Mat H = gen::random_spd(rng, 4, 10.0);
  const Vec S = gen::random_vector(rng, 4);
  const auto r = bfgs_update(H, S, H * S);
  CHECK(r.applied);
  CHECK((r.H - H).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("BFGS hand example gives diag(2, 1)") {
  const auto r = bfgs_update(Mat::Identity(2, 2), Vec::Unit(2, 0), 2.0 * Vec::Unit(2, 0));
  CHECK(r.applied);
  Mat expected = Mat::Identity(2, 2);
  expected(0, 0) = 2.0;
  CHECK(r.H.isApprox(expected, 1e-15));
}

TEST_CASE("BFGS secant and SPD on random data") {
  Rng rng(99);
  for (int t = 0; t < 200; ++t) {
    const int n = rng.uniform_int(1, 8);
    const Mat H = gen::random_spd(rng, n, 1e3);
    const Vec S = gen::random_vector(rng, n);
    Vec d = gen::random_vector(rng, n);
    if (S.dot(d) <= 0.0) d = -d;
    const auto r = bfgs_update(H, S, d);
    if (!r.applied) continue;
    CHECK((r.H * S - d).lpNorm<Eigen::Infinity>() <= 1e-10 * (1.0 + d.lpNorm<Eigen::Infinity>()));
    CHECK(Eigen::SelfAdjointEigenSolver<Mat>(r.H).eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("BFGS skips on negative curvature") {
  const Mat H = Mat::Identity(2, 2);
  const auto r = bfgs_update(H, Vec::Unit(2, 0), -Vec::Unit(2, 0));
  CHECK_FALSE(r.applied);
  CHECK(r.H == H);
  CHECK_THROWS_AS(bfgs_update(H, Vec::Ones(3), Vec::Ones(2)), ShapeError);
  CHECK_THROWS_AS(bfgs_update(H, Vec::Constant(2, std::nan("")), Vec::Ones(2)), NumericalError);
}

TEST_CASE("adjoint Broyden scalar example gives C+ = 3") {
  DiffPack dp;
  dp.S = Vec::Ones(1);
  dp.sigma = Vec::Ones(1);
  dp.z = Vec::Constant(1, 3.0);
  dp.gamma = Vec::Constant(1, 3.0);
  dp.d = Vec::Zero(1);
  const auto r = adjoint_jacobian_update(Mat::Ones(1, 1), dp);
  CHECK(r.applied);
  CHECK(r.C(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("adjoint Broyden skips consistent diffs, also with guard_eps = 0") {
  Mat C(1, 2);
  C << 1.0, 2.0;
  DiffPack dp;
  dp.S = Vec::Ones(2);
  dp.sigma = Vec::Ones(1);
  dp.z = C * dp.S;
  dp.gamma = C.transpose() * dp.sigma;
  dp.d = Vec::Zero(2);
  for (double guard : {kAdjointDenominatorGuard, 0.0}) {
    const auto r = adjoint_jacobian_update(C, dp, guard);
    CHECK_FALSE(r.applied);
    CHECK(r.C == C);
    CHECK(r.C.allFinite());
  }
}

TEST_CASE("adjoint Broyden is exact in both directions for affine constraints") {
  Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    const int n = rng.uniform_int(2, 8);
    const int c = rng.uniform_int(1, n - 1);
    const Mat M = gen::random_matrix(rng, c, n);
    const Mat C = M + 0.2 * gen::random_matrix(rng, c, n);
    DiffPack dp;
    dp.S = gen::random_vector(rng, n);
    dp.sigma = gen::random_vector(rng, c);
    dp.z = M * dp.S;
    dp.gamma = M.transpose() * dp.sigma;
    dp.d = Vec::Zero(n);
    const auto r = adjoint_jacobian_update(C, dp);
    if (!r.applied) continue;
    CHECK((r.C * dp.S - M * dp.S).lpNorm<Eigen::Infinity>() <= 1e-10);
    CHECK((dp.sigma.transpose() * r.C - dp.sigma.transpose() * M).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("trigger schedule") {
  CHECK(is_trigger(3));
  CHECK_FALSE(is_trigger(4));
  CHECK(is_trigger(27));
  CHECK(is_trigger(81));
  CHECK_FALSE(is_trigger(1));
  int count = 0;
  for (int k = 1; k <= 50; ++k) count += is_trigger(k);
  CHECK(count == 3);
  CHECK(is_trigger(3486784401LL));  // 3^20
  CHECK_FALSE(is_trigger(3486784402LL));
  CHECK_THROWS_AS(is_trigger(0), DomainError);
}

TEST_CASE("initial sensitivity state") {
  const Mat C = Mat::Ones(2, 4);
  const auto s = SensitivityState::initial(C);
  CHECK(s.H == Mat::Identity(4, 4));
  CHECK(s.C == C);
}

TEST_CASE("DiffPack accumulation adds every field") {
  DiffPack a{Vec::Ones(2), Vec::Ones(2), Vec::Ones(1), Vec::Ones(1), Vec::Ones(2)};
  const DiffPack b = a;
  a += b;
  CHECK(a.S == Vec::Constant(2, 2.0));
  CHECK(a.gamma == Vec::Constant(2, 2.0));
  CHECK(a.z == Vec::Constant(1, 2.0));
}
