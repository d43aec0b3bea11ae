#include "aladin/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <set>

#include "aladin/errors.hpp"
#include "aladin/local_solver.hpp"
#include "aladin/mhe.hpp"
#include "aladin/runtime.hpp"
#include "aladin/sensitivity.hpp"

namespace aladin {

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

CheckResult make_check(std::string name, bool passed, std::string detail) {
  return {std::move(name), passed, std::move(detail)};
}

double rel_err(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  if (b.size() == 0) return 0.0;
  const double scale = b.lpNorm<Eigen::Infinity>();
  const double diff = (a - b).lpNorm<Eigen::Infinity>();
  return scale > 0.0 ? diff / scale : diff;
}

bool same_bits(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

CoordinationResult closed_form(const gen::CoordinationInstance& inst, const Vec& b) {
  std::vector<NodeBlocks> blocks;
  for (std::size_t i = 0; i < inst.H.size(); ++i)
    blocks.push_back(assemble_blocks(inst.H[i], inst.C[i], inst.A[i]));
  return solve_closed_form(blocks, inst.x, inst.v, inst.C, inst.A, b);
}

}  // namespace

bool VerifyReport::ok() const { return first_failure() == nullptr; }

const CheckResult* VerifyReport::first_failure() const {
  for (const auto& c : checks)
    if (!c.passed) return &c;
  return nullptr;
}

double coordination_disagreement(const CoordinationResult& closed, const CoordinationResult& oracle) {
  return std::max({rel_err(closed.lambda, oracle.lambda),
                   rel_err(stack(closed.mu_tilde), stack(oracle.mu_tilde)),
                   rel_err(stack(closed.delta_x), stack(oracle.delta_x))});
}

double coordination_disagreement(const gen::CoordinationInstance& inst, bool drop_b) {
  const Vec b_closed = drop_b ? Vec::Zero(inst.b.size()) : inst.b;
  const auto closed = closed_form(inst, b_closed);
  const auto oracle = solve_kkt_oracle(inst.H, inst.C, inst.A, inst.x, inst.v, inst.b);
  return coordination_disagreement(closed, oracle);
}

CheckResult check_oracle_equivalence(std::uint64_t seed, int instances, double rel_tol) {
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < instances; ++t)
    worst = std::max(worst, coordination_disagreement(gen::random_coordination_instance(rng)));
  return make_check("coordinator: closed form matches the KKT oracle", worst <= rel_tol,
                    std::to_string(instances) + " instances, worst relative error " + sci(worst));
}

CheckResult check_missing_b_detected(std::uint64_t seed, int instances) {
  Rng rng(seed);
  int detected = 0;
  for (int t = 0; t < instances; ++t)
    if (coordination_disagreement(gen::random_coordination_instance(rng), true) > 1e-6) ++detected;
  return make_check("coordinator: a p without -b is caught by the oracle", detected == instances,
                    std::to_string(detected) + "/" + std::to_string(instances) +
                        " mutated instances disagree");
}

CheckResult check_equality_free_coordination(std::uint64_t seed, int instances) {
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < instances; ++t) {
    auto inst = gen::random_coordination_instance(rng, 4, 6, 0);
    worst = std::max(worst, coordination_disagreement(inst));
  }
  return make_check("coordinator: c_i = 0 reproduces the equality-free QP", worst <= 1e-9,
                    "worst relative error " + sci(worst));
}

CheckResult check_schur_reuse(std::uint64_t seed, int instances) {
  Rng rng(seed);
  for (int t = 0; t < instances; ++t) {
    const auto inst = gen::random_coordination_instance(rng);
    std::vector<NodeBlocks> blocks;
    for (std::size_t i = 0; i < inst.H.size(); ++i)
      blocks.push_back(assemble_blocks(inst.H[i], inst.C[i], inst.A[i]));
    const auto fresh = solve_closed_form(blocks, inst.x, inst.v, inst.C, inst.A, inst.b);
    const auto reused = solve_closed_form(blocks, inst.x, inst.v, inst.C, inst.A, inst.b, fresh.schur);
    bool same = same_bits(fresh.lambda, reused.lambda) && reused.schur == fresh.schur;
    for (std::size_t i = 0; i < inst.H.size(); ++i)
      same = same && same_bits(fresh.delta_x[i], reused.delta_x[i]) &&
             same_bits(fresh.mu_tilde[i], reused.mu_tilde[i]);
    if (!same)
      return make_check("coordinator: Schur reuse is bitwise identical", false,
                        "instance " + std::to_string(t) + " differs");
  }
  return make_check("coordinator: Schur reuse is bitwise identical", true,
                    std::to_string(instances) + " instances");
}

CheckResult check_bfgs_invariants(std::uint64_t seed, int updates) {
  Rng rng(seed);
  double worst_secant = 0.0, worst_sym = 0.0, min_eig = std::numeric_limits<double>::infinity();
  int applied = 0;
  for (int t = 0; t < updates; ++t) {
    const int n = rng.uniform_int(1, 8);
    const Mat H = gen::random_spd(rng, n, rng.uniform(1.0, 1e3));
    const Vec S = gen::random_vector(rng, n);
    Vec d = gen::random_vector(rng, n);
    if (S.dot(d) <= 0.0) d = -d;
    const auto r = bfgs_update(H, S, d);
    if (!r.applied) continue;
    ++applied;
    worst_secant = std::max(worst_secant, (r.H * S - d).lpNorm<Eigen::Infinity>() /
                                              (1.0 + d.lpNorm<Eigen::Infinity>()));
    worst_sym = std::max(worst_sym, (r.H - r.H.transpose()).lpNorm<Eigen::Infinity>());
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Mat>(r.H).eigenvalues().minCoeff());
  }
  const bool ok = applied > 0 && worst_secant <= 1e-9 && worst_sym <= 1e-12 && min_eig > 0.0;
  return make_check("bfgs: secant, symmetry and positive definiteness", ok,
                    std::to_string(applied) + "/" + std::to_string(updates) +
                        " applied, secant " + sci(worst_secant) + ", asymmetry " + sci(worst_sym) +
                        ", min eigenvalue " + sci(min_eig));
}

CheckResult check_adjoint_invariants(std::uint64_t seed, int updates) {
  Rng rng(seed);
  double worst_fwd = 0.0, worst_adj = 0.0;
  int applied = 0;
  for (int t = 0; t < updates; ++t) {
    const int n = rng.uniform_int(2, 8);
    const int c = rng.uniform_int(1, std::min(3, n - 1));
    const Mat M = gen::random_matrix(rng, c, n);
    const Mat C = M + 0.1 * gen::random_matrix(rng, c, n);
    DiffPack dp;
    dp.S = gen::random_vector(rng, n);
    dp.sigma = gen::random_vector(rng, c);
    dp.z = M * dp.S;
    dp.gamma = M.transpose() * dp.sigma;
    dp.d = Vec::Zero(n);
    const auto r = adjoint_jacobian_update(C, dp);
    if (!r.applied) continue;
    ++applied;
    worst_fwd = std::max(worst_fwd, (r.C * dp.S - dp.z).lpNorm<Eigen::Infinity>());
    worst_adj = std::max(worst_adj,
                         (r.C.transpose() * dp.sigma - dp.gamma).lpNorm<Eigen::Infinity>());
  }
  const bool ok = applied > 0 && worst_fwd <= 1e-9 && worst_adj <= 1e-9;
  return make_check("adjoint: C+ S = z and sigma^T C+ = gamma^T on affine constraints", ok,
                    std::to_string(applied) + "/" + std::to_string(updates) + " applied, forward " +
                        sci(worst_fwd) + ", adjoint " + sci(worst_adj));
}

CheckResult check_adjoint_zero_guard() {
  // Consistent diffs make the denominator exactly zero.
  Mat C(1, 2);
  C << 1.0, 2.0;
  DiffPack dp;
  dp.S = Vec::Ones(2);
  dp.sigma = Vec::Ones(1);
  dp.z = C * dp.S;
  dp.gamma = C.transpose() * dp.sigma;
  dp.d = Vec::Zero(2);
  const auto r = adjoint_jacobian_update(C, dp, 0.0);
  return make_check("adjoint: zero guard with consistent diffs skips the division",
                    !r.applied && same_bits(r.C, C), r.applied ? "update applied" : "skipped");
}

CheckResult check_trigger_schedule() {
  std::vector<int> hits;
  for (int k = 1; k <= 10000; ++k)
    if (is_trigger(k)) hits.push_back(k);
  const std::vector<int> expected{3, 9, 27, 81, 243, 729, 2187, 6561};
  int in_fifty = 0;
  for (int k = 1; k <= 50; ++k) in_fifty += is_trigger(k) ? 1 : 0;
  return make_check("trigger: 3^j schedule over 1..10^4", hits == expected && in_fifty == 3,
                    std::to_string(hits.size()) + " triggers, " + std::to_string(in_fifty) +
                        " within 50");
}

CheckResult check_uplink_formula() {
  const bool ok = uplink_cost(Variant::GaussNewton, {{4, 2}}) == 32 &&
                  uplink_cost(Variant::AdjointBFGS, {{4, 2}}) == 16 &&
                  uplink_cost(Variant::RtGaussNewton, {{1, 0}}) == 3 &&
                  uplink_cost(Variant::RtAdjointBFGS, {{1, 0}}) == 3;
  return make_check("accounting: uplink formula examples", ok, "(4,2) -> 32 / 16, (1,0) -> 3 / 3");
}

CheckResult check_shipped_derivatives(std::uint64_t seed) {
  Rng rng(seed);
  const auto bench = mhe::make_benchmark(seed, 25, 4, 25.0);
  std::vector<std::pair<NodeProblem, Vec>> cases;
  for (std::size_t i = 0; i < bench.split.problem.nodes.size(); ++i)
    cases.emplace_back(bench.split.problem.nodes[i], bench.y0[i]);
  const auto horizon = mhe::initial_horizon(bench.truth, bench.anchor, 25);
  cases.emplace_back(mhe::build_unsplit_problem(bench.truth, bench.anchor, 25, {},
                                                bench.truth.states.front()),
                     mhe::stack_states(horizon));
  const auto quad = gen::random_quadratic_problem(rng, 1, 5, 2, 1);
  cases.emplace_back(quad.nodes.front(), Vec::Zero(5));

  double worst = 0.0;
  for (const auto& [node, center] : cases) {
    for (int p = 0; p < 20; ++p) {
      const Vec point = center + gen::random_vector(rng, node.n, -0.05, 0.05);
      const auto rep = check_derivatives(node, point, 1e-4);
      worst = std::max({worst, rep.max_gradient_error, rep.max_jacobian_error});
    }
  }
  return make_check("derivatives: every shipped node passes the finite-difference check",
                    worst <= 1e-4, std::to_string(cases.size()) + " nodes x 20 points, worst " + sci(worst));
}

CheckResult check_coupling_affine(std::uint64_t seed) {
  Rng rng(seed);
  const auto p = gen::random_quadratic_problem(rng, 3, 4, 1, 3);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    std::vector<Vec> x, dx, moved;
    Vec expected = Vec::Zero(p.coupling.m);
    for (int i = 0; i < 3; ++i) {
      x.push_back(gen::random_vector(rng, 4));
      dx.push_back(gen::random_vector(rng, 4));
      moved.push_back(x.back() + dx.back());
      expected += p.coupling.blocks[i] * dx.back();
    }
    const Vec diff = coupling_residual(p, moved) - coupling_residual(p, x);
    worst = std::max(worst, (diff - expected).lpNorm<Eigen::Infinity>());
  }
  return make_check("problem: coupling residual is affine", worst <= 1e-13, "worst " + sci(worst));
}

CheckResult check_quadratic_one_step(std::uint64_t seed, int instances) {
  Rng rng(seed);
  for (int t = 0; t < instances; ++t) {
    const auto p = gen::random_quadratic_problem(rng, 1, 6, 2, 2);
    const auto sol = solve_local(p.nodes[0], gen::random_vector(rng, 2), gen::random_vector(rng, 6),
                                 p.coupling.blocks[0], 25.0, std::nullopt);
    if (!sol.converged || sol.newton_steps != 1 || sol.regularizations != 0)
      return make_check("local solve: quadratic subproblems take one unregularized step", false,
                        "instance " + std::to_string(t) + ": " + std::to_string(sol.newton_steps) +
                            " steps, " + std::to_string(sol.regularizations) + " regularized");
  }
  return make_check("local solve: quadratic subproblems take one unregularized step", true,
                    std::to_string(instances) + " instances");
}

CheckResult check_split_unsplit(const std::vector<std::uint64_t>& seeds, double tol) {
  double worst = 0.0;
  for (auto seed : seeds) {
    const auto bench = mhe::make_benchmark(seed, 25, 4, 25.0);
    const auto split = centralized_solve(bench.split.problem, stack(bench.y0));
    const auto horizon = mhe::initial_horizon(bench.truth, bench.anchor, 25);
    const auto whole = solve_equality_constrained(
        mhe::build_unsplit_problem(bench.truth, bench.anchor, 25, {}, bench.truth.states.front()),
        mhe::stack_states(horizon));
    if (!split.converged || !whole.converged)
      return make_check("mhe: split and unsplit minimizers agree", false,
                        "seed " + std::to_string(seed) + ": a reference solve did not converge");
    const Vec merged = mhe::stack_states(mhe::merge_windows(bench.split.layout, split.x));
    worst = std::max(worst, (merged - whole.x).lpNorm<Eigen::Infinity>());
  }
  return make_check("mhe: split and unsplit minimizers agree", worst <= tol,
                    std::to_string(seeds.size()) + " seeds, worst " + sci(worst));
}

CheckResult check_window_tiling(std::uint64_t seed) {
  Rng rng(seed);
  const auto bench = mhe::make_benchmark(seed, 25, 4, 25.0);
  const auto whole =
      mhe::build_unsplit_problem(bench.truth, bench.anchor, 25, {}, bench.truth.states.front());
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    auto horizon = mhe::initial_horizon(bench.truth, bench.anchor, 25);
    for (auto& s : horizon) s += gen::random_vector(rng, 3, -0.05, 0.05);
    const auto windows = mhe::split_states(bench.split.layout, horizon);
    double sum = 0.0;
    for (std::size_t i = 0; i < windows.size(); ++i)
      sum += bench.split.problem.nodes[i].eval_objective(windows[i]);
    const double f = whole.eval_objective(mhe::stack_states(horizon));
    worst = std::max(worst, std::abs(sum - f) / std::max(1.0, std::abs(f)));
  }
  return make_check("mhe: window objectives sum to the horizon objective", worst <= 1e-12,
                    "worst relative gap " + sci(worst));
}

CheckResult check_gn_hessian_psd(std::uint64_t seed) {
  Rng rng(seed);
  const auto bench = mhe::make_benchmark(seed, 25, 4, 25.0);
  double worst_sym = 0.0, min_eig = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < bench.y0.size(); ++i) {
    const auto& node = bench.split.problem.nodes[i];
    for (int t = 0; t < 10; ++t) {
      const Mat H = node.eval_gn_hessian(bench.y0[i] + gen::random_vector(rng, node.n, -0.05, 0.05));
      worst_sym = std::max(worst_sym, (H - H.transpose()).lpNorm<Eigen::Infinity>());
      const double scale = std::max(1.0, H.lpNorm<Eigen::Infinity>());
      min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Mat>(H).eigenvalues().minCoeff() / scale);
    }
  }
  return make_check("mhe: Gauss-Newton Hessians are symmetric PSD",
                    worst_sym == 0.0 && min_eig >= -1e-12,
                    "asymmetry " + sci(worst_sym) + ", min scaled eigenvalue " + sci(min_eig));
}

CheckResult check_constraint_counts() {
  const auto traj = mhe::simulate_truth({0.1, 0.1, 0.0}, mhe::default_controls(8), {}, 1);
  const auto sp = mhe::build_split_problem(traj, 4, 4, 2, {}, traj.states.front(), 25.0);
  bool ok = sp.layout.m == 3 && sp.problem.coupling.m == 3;
  std::string detail;
  for (std::size_t i = 0; i < sp.layout.windows.size(); ++i) {
    const auto& w = sp.layout.windows[i];
    const int steps = w.last_state - w.first_state;
    ok = ok && sp.problem.nodes[i].c == 3 * steps && sp.problem.nodes[i].n == 3 * (steps + 1);
    if (!detail.empty()) detail += ", ";
    detail += "window " + std::to_string(i + 1) + ": c = " + std::to_string(sp.problem.nodes[i].c) +
              " for " + std::to_string(steps) + " steps";
  }
  return make_check("mhe: constraint counts are 3 per step", ok, detail);
}

std::vector<CheckResult> check_runtime_invariants(std::uint64_t seed) {
  const auto bench = mhe::make_benchmark(seed, 25, 4, 25.0);
  const auto& problem = bench.split.problem;
  const int N = problem.node_count();
  const auto ref = centralized_solve(problem, stack(bench.y0));
  std::vector<std::pair<int, int>> dims;
  for (const auto& node : problem.nodes) dims.emplace_back(node.n, node.c);

  bool accounting = true, freezing = true, nullspace = true, coupling_id = true;
  bool deterministic = true, monotone = true, kkt_ok = true;
  double worst_null = 0.0, worst_coupling = 0.0;
  std::string accounting_detail = "all variants, every iteration";
  std::vector<int> warm_steps, cold_steps;

  for (Variant v : kAllVariants) {
    RunConfig cfg;
    cfg.variant = v;
    cfg.y0 = bench.y0;
    cfg.seed = seed;

    struct Snapshot {
      std::vector<Mat> H, C, G, Q, R;
      Mat M;
      bool refresh = false;
    };
    std::optional<Snapshot> prev;
    struct Inputs {
      Vec lambda;
      std::vector<Vec> y, x, mu;
    };
    std::vector<Inputs> inputs;  // state handed to iteration k + 1

    auto observer = [&](const IterationView& it) {
      if (accounting && it.record.uplink_scalars != uplink_cost(v, dims)) {
        accounting = false;
        accounting_detail = std::string(variant_name(v)) + " at k = " + std::to_string(it.k) + ": " +
                            std::to_string(it.record.uplink_scalars) + " logged, " +
                            std::to_string(uplink_cost(v, dims)) + " expected";
      }
      Snapshot snap;
      snap.refresh = it.record.sensitivity_refresh;
      for (int i = 0; i < N; ++i) {
        snap.H.push_back(it.sensitivities[i].H);
        snap.C.push_back(it.sensitivities[i].C);
        snap.G.push_back(it.blocks[i].G);
        snap.Q.push_back(it.blocks[i].Q);
        snap.R.push_back(it.blocks[i].R);
        worst_null = std::max(worst_null, (it.sensitivities[i].C * it.coordination.delta_x[i])
                                              .lpNorm<Eigen::Infinity>());
      }
      snap.M = it.coordination.schur->M;
      if (is_realtime(v) && prev && !snap.refresh) {
        for (int i = 0; i < N; ++i)
          freezing = freezing && same_bits(snap.H[i], prev->H[i]) && same_bits(snap.C[i], prev->C[i]) &&
                     same_bits(snap.G[i], prev->G[i]) && same_bits(snap.Q[i], prev->Q[i]) &&
                     same_bits(snap.R[i], prev->R[i]);
        freezing = freezing && same_bits(snap.M, prev->M);
      }
      prev = std::move(snap);
      if (v == Variant::GaussNewton)
        worst_coupling = std::max(
            worst_coupling,
            coupling_residual(problem, it.coordination.y_next).lpNorm<Eigen::Infinity>());
      if (v == Variant::AdjointBFGS)
        inputs.push_back({it.coordination.lambda, it.coordination.y_next, it.x, it.local_mu});
    };

    const Trace first = run(problem, cfg, ref.x, observer);
    const Trace second = run(problem, cfg, ref.x);
    deterministic = deterministic && first.records.size() == second.records.size();
    for (std::size_t r = 0; deterministic && r < first.records.size(); ++r) {
      const auto& a = first.records[r];
      const auto& b = second.records[r];
      deterministic = same_bits(a.lambda, b.lambda) && a.err_to_ref == b.err_to_ref &&
                      a.coupling_res == b.coupling_res && a.local_feas == b.local_feas &&
                      a.triggered == b.triggered && a.uplink_scalars == b.uplink_scalars &&
                      a.newton_steps == b.newton_steps;
    }
    monotone = monotone && first.records.back().err_to_ref <= first.records.front().err_to_ref;
    kkt_ok = kkt_ok && first.warnings.empty();

    // Replay the local solves of AdjointBFGS after iteration 5 warm and cold.
    if (v == Variant::AdjointBFGS) {
      for (std::size_t k = 5; k + 1 < inputs.size(); ++k) {
        const auto& in = inputs[k];
        for (int i = 0; i < N; ++i) {
          const auto warm = solve_local(problem.nodes[i], in.lambda, in.y[i], problem.coupling.blocks[i],
                                        problem.rho, WarmStart{in.x[i], in.mu[i]});
          const auto cold = solve_local(problem.nodes[i], in.lambda, in.y[i], problem.coupling.blocks[i],
                                        problem.rho, std::nullopt);
          warm_steps.push_back(warm.newton_steps);
          cold_steps.push_back(cold.newton_steps);
          const double tol = LocalSolveConfig{}.kkt_tol;
          kkt_ok = kkt_ok && warm.converged && warm.kkt_residual <= tol;
        }
      }
    }
  }

  long warm_total = 0, cold_total = 0;
  for (int n : warm_steps) warm_total += n;
  for (int n : cold_steps) cold_total += n;
  coupling_id = worst_coupling <= 1e-8;
  nullspace = worst_null <= 1e-8;

  return {
      make_check("runtime: logged uplink scalars equal the formula", accounting, accounting_detail),
      make_check("runtime: Rt variants keep H, C, G, Q, R and M bitwise frozen between triggers",
                 freezing, "rt-gn and rt-abfgs"),
      make_check("runtime: C_i dx_i = 0 every node, every iteration", nullspace, "worst " + sci(worst_null)),
      make_check("runtime: GaussNewton keeps sum A_i y_i = b", coupling_id, "worst " + sci(worst_coupling)),
      make_check("runtime: repeated runs give identical traces", deterministic, "all variants"),
      make_check("runtime: final error does not exceed the first", monotone, "all variants"),
      make_check("runtime: local solves converge within the KKT tolerance", kkt_ok,
                 "no local warnings; replayed warm solves converged"),
      make_check("runtime: warm starts need no more Newton steps than cold starts",
                 !warm_steps.empty() && warm_total <= cold_total,
                 std::to_string(warm_steps.size()) + " replayed solves, " + std::to_string(warm_total) +
                     " warm vs " + std::to_string(cold_total) + " cold steps"),
  };
}

VerifyReport run_verify(const VerifyOptions& options) {
  VerifyReport report;
  auto add = [&](CheckResult c) {
    if (options.on_result) options.on_result(c);
    report.checks.push_back(std::move(c));
  };
  auto guarded = [&](const std::string& name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      add(make_check(name, false, std::string("threw: ") + e.what()));
    }
  };
  const auto s = options.seed;
  guarded("coordinator: closed form matches the KKT oracle",
          [&] { add(check_oracle_equivalence(s, 100, 1e-9)); });
  guarded("coordinator: a p without -b is caught by the oracle",
          [&] { add(check_missing_b_detected(s, 20)); });
  guarded("coordinator: c_i = 0 reproduces the equality-free QP",
          [&] { add(check_equality_free_coordination(s, 20)); });
  guarded("coordinator: Schur reuse is bitwise identical", [&] { add(check_schur_reuse(s, 20)); });
  guarded("bfgs: secant, symmetry and positive definiteness",
          [&] { add(check_bfgs_invariants(s, 1000)); });
  guarded("adjoint: C+ S = z and sigma^T C+ = gamma^T on affine constraints",
          [&] { add(check_adjoint_invariants(s, 1000)); });
  guarded("adjoint: zero guard", [&] { add(check_adjoint_zero_guard()); });
  guarded("trigger: schedule", [&] { add(check_trigger_schedule()); });
  guarded("accounting: uplink formula", [&] { add(check_uplink_formula()); });
  guarded("derivatives", [&] { add(check_shipped_derivatives(s)); });
  guarded("problem: coupling residual is affine", [&] { add(check_coupling_affine(s)); });
  guarded("local solve: quadratic one step", [&] { add(check_quadratic_one_step(s, 20)); });
  guarded("mhe: split and unsplit minimizers agree",
          [&] { add(check_split_unsplit({1, 2, 3, 4, 5}, 1e-8)); });
  guarded("mhe: window tiling", [&] { add(check_window_tiling(s)); });
  guarded("mhe: Gauss-Newton Hessian PSD", [&] { add(check_gn_hessian_psd(s)); });
  guarded("mhe: constraint counts", [&] { add(check_constraint_counts()); });
  guarded("runtime invariants", [&] {
    for (auto& c : check_runtime_invariants(s)) add(std::move(c));
  });
  return report;
}

}  // namespace aladin
