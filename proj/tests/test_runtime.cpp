#include "doctest.h"

#include <cmath>
#include <limits>

#include "aladin/errors.hpp"
#include "aladin/mhe.hpp"
#include "aladin/random_instances.hpp"
#include "aladin/runtime.hpp"

using namespace aladin;

namespace {

struct Mhe {
  mhe::BenchmarkInstance bench = mhe::make_benchmark(7, 25, 4, 25.0);
  CentralizedSolution ref = centralized_solve(bench.split.problem, stack(bench.y0));
};

const Mhe& mhe_instance() {
  static const Mhe m;
  return m;
}

Trace run_mhe(Variant v, int iters = 50) {
  const auto& m = mhe_instance();
  RunConfig cfg;
  cfg.variant = v;
  cfg.max_iters = iters;
  cfg.y0 = m.bench.y0;
  return run(m.bench.split.problem, cfg, m.ref.x);
}

}  // namespace

TEST_CASE("variant names round-trip") {
  for (Variant v : kAllVariants) CHECK(parse_variant(variant_name(v)) == v);
  CHECK_FALSE(parse_variant("bfgs").has_value());
  CHECK(is_realtime(Variant::RtGaussNewton));
  CHECK_FALSE(is_realtime(Variant::AdjointBFGS));
  CHECK(sends_full_sensitivities(Variant::RtGaussNewton));
  CHECK_FALSE(sends_full_sensitivities(Variant::RtAdjointBFGS));
}

TEST_CASE("uplink cost counts the transmitted scalars") {
  CHECK(uplink_cost(Variant::GaussNewton, {{4, 2}}) == 8 + 16 + 8);
  // S, d and gamma have n entries, z and sigma have c.
  CHECK(uplink_cost(Variant::AdjointBFGS, {{4, 2}}) == 12 + 4);
  CHECK(uplink_cost(Variant::GaussNewton, {{1, 0}}) == 3);
  CHECK(uplink_cost(Variant::AdjointBFGS, {{1, 0}}) == 3);
  CHECK_THROWS_AS(uplink_cost(Variant::AdjointBFGS, {}), DomainError);
}

TEST_CASE("UplinkMessage scalar counts follow the payload") {
  UplinkMessage full{0, FullSensitivities{Vec::Zero(4), Vec::Zero(4), Mat::Zero(4, 4), Mat::Zero(2, 4)}};
  CHECK(full.is_full());
  CHECK(full.scalar_count() == 32);
  UplinkMessage compact{0, DiffPack{Vec::Zero(4), Vec::Zero(4), Vec::Zero(2), Vec::Zero(2), Vec::Zero(4)}};
  CHECK(compact.scalar_count() == uplink_cost(Variant::AdjointBFGS, {{4, 2}}));
}

TEST_CASE("two-node consensus with Gauss-Newton converges in three iterations") {
  const Vec a1 = (Vec(2) << 1.0, 2.0).finished();
  const Vec a2 = (Vec(2) << -3.0, 0.5).finished();
  const auto p = gen::consensus_problem({a1, a2});
  const Vec avg = 0.5 * (a1 + a2);
  RunConfig cfg;
  cfg.variant = Variant::GaussNewton;
  cfg.max_iters = 3;
  cfg.y0 = {Vec::Zero(2), Vec::Zero(2)};
  const auto t = run(p, cfg, std::vector<Vec>{avg, avg});
  CHECK(t.records.back().err_to_ref <= 1e-10);
}

TEST_CASE("consensus without a reference logs NaN errors") {
  const auto p = gen::consensus_problem({Vec::Ones(2), Vec::Zero(2)});
  RunConfig cfg;
  cfg.variant = Variant::AdjointBFGS;
  cfg.max_iters = 2;
  cfg.y0 = {Vec::Zero(2), Vec::Zero(2)};
  const auto t = run(p, cfg);
  CHECK(std::isnan(t.records[0].err_to_ref));
}

TEST_CASE("AdjointBFGS reaches 1e-8 on the MHE instance within 25 iterations") {
  const auto t = run_mhe(Variant::AdjointBFGS, 25);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : t.records) best = std::min(best, r.err_to_ref);
  CHECK(best <= 1e-8);
  CHECK(t.warnings.empty());
}

TEST_CASE("RtAdjointBFGS triggers at 3, 9 and 27 and reaches 1e-6") {
  const auto t = run_mhe(Variant::RtAdjointBFGS);
  CHECK(t.trigger_iterations() == std::vector<int>{3, 9, 27});
  CHECK(t.records.back().err_to_ref <= 1e-6);
  // Two-stage profile: the error after the last trigger is far below the
  // error right before it.
  CHECK(t.records[40].err_to_ref < 1e-2 * t.records[25].err_to_ref);
}

TEST_CASE("per-iteration uplink and one-off init payload") {
  const auto& m = mhe_instance();
  std::vector<std::pair<int, int>> dims;
  for (const auto& n : m.bench.split.problem.nodes) dims.emplace_back(n.n, n.c);
  for (Variant v : kAllVariants) {
    const auto t = run_mhe(v, 5);
    for (const auto& r : t.records) CHECK(r.uplink_scalars == uplink_cost(v, dims));
    std::int64_t init = 0;
    for (auto [n, c] : dims) init += static_cast<std::int64_t>(n) * c + n;
    CHECK(t.init_uplink_scalars == (sends_full_sensitivities(v) ? 0 : init));
  }
}

TEST_CASE("Rt variants freeze every matrix between triggers") {
  const auto& m = mhe_instance();
  for (Variant v : {Variant::RtGaussNewton, Variant::RtAdjointBFGS}) {
    RunConfig cfg;
    cfg.variant = v;
    cfg.max_iters = 30;
    cfg.y0 = m.bench.y0;
    std::vector<Mat> H, C, G;
    Mat M;
    int frozen_checks = 0;
    run(m.bench.split.problem, cfg, std::nullopt, [&](const IterationView& it) {
      if (!it.record.sensitivity_refresh && !H.empty()) {
        for (std::size_t i = 0; i < H.size(); ++i) {
          CHECK((it.sensitivities[i].H.array() == H[i].array()).all());
          CHECK((it.sensitivities[i].C.array() == C[i].array()).all());
          CHECK((it.blocks[i].G.array() == G[i].array()).all());
        }
        CHECK((it.coordination.schur->M.array() == M.array()).all());
        ++frozen_checks;
      }
      CHECK(it.record.sensitivity_refresh == (it.k == 1 || is_trigger(it.k)));
      H.clear();
      C.clear();
      G.clear();
      for (std::size_t i = 0; i < it.sensitivities.size(); ++i) {
        H.push_back(it.sensitivities[i].H);
        C.push_back(it.sensitivities[i].C);
        G.push_back(it.blocks[i].G);
      }
      M = it.coordination.schur->M;
    });
    CHECK(frozen_checks == 26);
  }
}

TEST_CASE("runs are deterministic apart from wall time") {
  const auto a = run_mhe(Variant::AdjointBFGS, 20);
  const auto b = run_mhe(Variant::AdjointBFGS, 20);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    CHECK(a.records[k].err_to_ref == b.records[k].err_to_ref);
    CHECK((a.records[k].lambda.array() == b.records[k].lambda.array()).all());
  }
}

TEST_CASE("thread count does not change the trace") {
  const auto& m = mhe_instance();
  RunConfig cfg;
  cfg.variant = Variant::GaussNewton;
  cfg.max_iters = 10;
  cfg.y0 = m.bench.y0;
  cfg.threads = 1;
  const auto one = run(m.bench.split.problem, cfg, m.ref.x);
  cfg.threads = 4;
  const auto four = run(m.bench.split.problem, cfg, m.ref.x);
  for (std::size_t k = 0; k < one.records.size(); ++k)
    CHECK(one.records[k].err_to_ref == four.records[k].err_to_ref);
}

TEST_CASE("objective QP gradient is available and agrees when C is exact") {
  const auto& m = mhe_instance();
  RunConfig cfg;
  cfg.variant = Variant::GaussNewton;
  cfg.max_iters = 8;
  cfg.y0 = m.bench.y0;
  const auto lag = run(m.bench.split.problem, cfg, m.ref.x);
  cfg.qp_gradient = QpGradient::Objective;
  const auto obj = run(m.bench.split.problem, cfg, m.ref.x);
  CHECK(obj.records.back().err_to_ref <= 1e-6);
  CHECK(lag.records.back().err_to_ref <= 1e-6);
}

TEST_CASE("stop_tol ends the run early") {
  const auto& m = mhe_instance();
  RunConfig cfg;
  cfg.variant = Variant::GaussNewton;
  cfg.max_iters = 50;
  cfg.stop_tol = 1e-6;
  cfg.y0 = m.bench.y0;
  const auto t = run(m.bench.split.problem, cfg, m.ref.x);
  CHECK(t.records.size() < 50);
}

TEST_CASE("run argument errors") {
  const auto& m = mhe_instance();
  RunConfig cfg;
  cfg.y0 = m.bench.y0;
  cfg.max_iters = 0;
  CHECK_THROWS_AS(run(m.bench.split.problem, cfg), DomainError);
  cfg.max_iters = 1;
  cfg.rho = -1.0;
  CHECK_THROWS_AS(run(m.bench.split.problem, cfg), DomainError);
  cfg.rho.reset();
  cfg.y0.pop_back();
  CHECK_THROWS_AS(run(m.bench.split.problem, cfg), ShapeError);
  cfg.y0 = m.bench.y0;
  cfg.lambda0 = Vec::Zero(2);
  CHECK_THROWS_AS(run(m.bench.split.problem, cfg), ShapeError);
}

TEST_CASE("empirical contraction examples") {
  CHECK(empirical_contraction({1.0, 0.5, 0.25, 0.125}, 3) == doctest::Approx(0.5));
  CHECK(empirical_contraction({1.0, 2.0, 4.0, 8.0}, 3) == doctest::Approx(2.0));
  CHECK_THROWS_AS(empirical_contraction({1.0, 0.5}, 3), DomainError);
  CHECK_THROWS_AS(empirical_contraction({1.0, 0.5, 1e-14, 1e-15}, 3), DomainError);
  CHECK_THROWS_AS(empirical_contraction({1.0, std::nan(""), 0.1, 0.01}, 2), DomainError);
}

TEST_CASE("Gauss-Newton MHE run contracts before its noise floor") {
  const auto t = run_mhe(Variant::GaussNewton, 30);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : t.records) best = std::min(best, r.err_to_ref);
  CHECK(best < 1e-10);
  CHECK(empirical_contraction(t, 3, 10.0 * best) < 0.1);
}

TEST_CASE("empirical contraction stops at the floor") {
  const std::vector<double> errs{1.0, 0.1, 0.01, 1e-3, 1e-4, 2e-4, 1e-4};
  CHECK(empirical_contraction(errs, 2, 5e-4) == doctest::Approx(0.1));
  CHECK(empirical_contraction({1.0, 0.5, 0.25, 0.125, 1e-14, 1.0}, 3) == doctest::Approx(0.5));
}

TEST_CASE("thread count resolution") {
  CHECK(resolve_thread_count(2, 4) == 2);
  CHECK(resolve_thread_count(8, 4) == 4);
  CHECK(resolve_thread_count(0, 4) >= 1);
  CHECK(resolve_thread_count(0, 4) <= 4);
}
