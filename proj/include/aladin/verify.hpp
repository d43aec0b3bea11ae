#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aladin/coordinator.hpp"
#include "aladin/random_instances.hpp"

namespace aladin {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool ok() const;
  /// Null when every check passed.
  const CheckResult* first_failure() const;
};

struct VerifyOptions {
  std::uint64_t seed = 7;
  std::function<void(const CheckResult&)> on_result;  // called as each check finishes
};

/// Oracle-equivalence, quasi-Newton, trigger, accounting, runtime and
/// split/unsplit suites.
VerifyReport run_verify(const VerifyOptions& options = {});

/// Largest relative disagreement between the closed form and the KKT oracle
/// over (lambda, stacked mu~, stacked dx), each measured as
/// |a - b|_inf / |b|_inf.
double coordination_disagreement(const CoordinationResult& closed, const CoordinationResult& oracle);

/// Closed form on `inst` against the oracle. `drop_b` feeds b = 0 to the
/// closed form only, which mimics a p that lacks the -b term.
double coordination_disagreement(const gen::CoordinationInstance& inst, bool drop_b = false);

// Individual suites, exposed for the test binaries.
CheckResult check_oracle_equivalence(std::uint64_t seed, int instances, double rel_tol);
CheckResult check_missing_b_detected(std::uint64_t seed, int instances);
CheckResult check_equality_free_coordination(std::uint64_t seed, int instances);
CheckResult check_schur_reuse(std::uint64_t seed, int instances);
CheckResult check_bfgs_invariants(std::uint64_t seed, int updates);
CheckResult check_adjoint_invariants(std::uint64_t seed, int updates);
CheckResult check_adjoint_zero_guard();
CheckResult check_trigger_schedule();
CheckResult check_uplink_formula();
CheckResult check_shipped_derivatives(std::uint64_t seed);
CheckResult check_coupling_affine(std::uint64_t seed);
CheckResult check_quadratic_one_step(std::uint64_t seed, int instances);
CheckResult check_split_unsplit(const std::vector<std::uint64_t>& seeds, double tol);
CheckResult check_window_tiling(std::uint64_t seed);
CheckResult check_gn_hessian_psd(std::uint64_t seed);
CheckResult check_constraint_counts();
/// Instrumented MHE runs of all four variants: accounting, freezing,
/// nullspace, coupling identity, determinism, monotone floor, local KKT
/// tolerances and warm- versus cold-start Newton steps.
std::vector<CheckResult> check_runtime_invariants(std::uint64_t seed);

}  // namespace aladin
