#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "aladin/coordinator.hpp"
#include "aladin/local_solver.hpp"
#include "aladin/problem.hpp"
#include "aladin/sensitivity.hpp"

namespace aladin {

enum class Variant { GaussNewton, AdjointBFGS, RtGaussNewton, RtAdjointBFGS };

inline constexpr Variant kAllVariants[] = {Variant::GaussNewton, Variant::AdjointBFGS,
                                           Variant::RtGaussNewton, Variant::RtAdjointBFGS};

/// Short names used on the command line: gn, abfgs, rt-gn, rt-abfgs.
std::string_view variant_name(Variant v);
std::optional<Variant> parse_variant(std::string_view name);
/// Event-triggered variants refresh sensitivities only at is_trigger(k).
bool is_realtime(Variant v);
/// Gauss-Newton variants ship full sensitivity matrices every iteration.
bool sends_full_sensitivities(Variant v);

/// Node-side iterate: current values plus the previous copies used for
/// differencing.
struct NodeState {
  Vec x;
  Vec y;
  Vec mu;
  Vec v;      // grad f(x)
  Vec g_val;  // g(x)
  IterateSnapshot prev;
};

struct FullSensitivities {
  Vec x;
  Vec v;
  Mat H;
  Mat C;
};

/// What one node transmits per iteration.
struct UplinkMessage {
  int node = 0;
  std::variant<FullSensitivities, DiffPack> payload;

  /// 2n + n^2 + cn for Full, 3n + 2c for Compact.
  std::int64_t scalar_count() const;
  bool is_full() const { return std::holds_alternative<FullSensitivities>(payload); }
};

/// Per-variant uplink scalars per iteration, summed over nodes.
std::int64_t uplink_cost(Variant variant, const std::vector<std::pair<int, int>>& dims);

struct IterationRecord {
  int k = 0;
  Vec lambda;
  double err_to_ref = 0.0;  // |y^[k] - y*|_inf, NaN without a reference
  double coupling_res = 0.0;
  double local_feas = 0.0;
  bool triggered = false;           // is_trigger(k) fired (event-triggered variants)
  bool sensitivity_refresh = false; // H, C and the blocks were rebuilt this iteration
  std::int64_t uplink_scalars = 0;
  std::int64_t coord_wall_ns = 0;
  std::optional<double> contraction_ratio;
  std::vector<int> newton_steps;  // per node
  int local_warnings = 0;         // non-converged local solves
};

// Linear term of the coordination QP. Objective uses v_i = grad f_i(x_i).
// Lagrangian uses rho (y_i - x_i) - A_i^T lambda, which equals
// grad f_i + grad g_i^T mu_i at the local solution; the two give the same
// (lambda, delta_x) when C_i is exact, but only the Lagrangian form keeps
// y* a fixed point when C_i is approximate or frozen.
enum class QpGradient { Lagrangian, Objective };

struct RunConfig {
  Variant variant = Variant::AdjointBFGS;
  int max_iters = 50;
  std::optional<double> rho;  // defaults to the problem's rho (25 for the benchmark)
  Vec lambda0;                // empty = zeros
  std::vector<Vec> y0;        // initial primal guess per node; mu0 is zero
  std::uint64_t seed = 0;     // recorded for reproducibility; the loop itself is deterministic
  LocalSolveConfig local_cfg;
  double stop_tol = 0.0;      // 0 runs all iterations

  // Eigenvalues of the Gauss-Newton Hessian below gn_eigen_floor * max(1, |H|_2)
  // are raised to that floor before the node ships H.
  double gn_eigen_floor = 1e-6;
  double bfgs_guard = kBfgsCurvatureGuard;
  double adjoint_guard = kAdjointDenominatorGuard;
  // Event-triggered variants: feed the coordinator the sum of all difference
  // packs since the previous refresh instead of only the latest one.
  bool accumulate_diffs = false;
  QpGradient qp_gradient = QpGradient::Lagrangian;
  int threads = 0;  // 0 = min(N, hardware, $ALADIN_THREADS)
};

struct Trace {
  Variant variant = Variant::AdjointBFGS;
  RunConfig config;
  std::vector<IterationRecord> records;
  std::int64_t init_uplink_scalars = 0;  // one-off payload (first-iteration exact C, grad f(y0))
  std::vector<Vec> y_final;
  std::vector<std::string> warnings;

  std::vector<int> trigger_iterations() const;
};

/// Read-only view handed to an observer after every iteration.
struct IterationView {
  int k = 0;
  const IterationRecord& record;
  const std::vector<SensitivityState>& sensitivities;
  const std::vector<NodeBlocks>& blocks;
  const CoordinationResult& coordination;
  const std::vector<Vec>& x;         // local solutions x^[k+1]
  const std::vector<Vec>& local_mu;  // local multipliers mu^[k+1]
};
using IterationObserver = std::function<void(const IterationView&)>;

/// Runs one ALADIN variant over a simulated coordinator-worker topology:
/// workers solve their local problems concurrently and uplink either full
/// sensitivities or difference packs; the coordinator refreshes H, C and
/// the coordination blocks (every iteration, or only at triggers for the
/// real-time variants), solves the coordination QP in closed form, and
/// broadcasts (lambda, y). Deterministic for a given problem and config.
///
/// Throws CoordinationSingular / SolveStalled / NotPositiveDefinite prefixed
/// with the iteration index.
Trace run(const DistributedProblem& problem, const RunConfig& cfg,
          const std::optional<std::vector<Vec>>& reference = std::nullopt,
          const IterationObserver& observer = {});

/// Geometric mean of err_k / err_{k-1} over the last `tail` steps before the
/// error first reaches `floor`. Throws DomainError with fewer than tail + 1
/// usable records.
double empirical_contraction(const Trace& trace, int tail, double floor = 1e-13);
double empirical_contraction(const std::vector<double>& errors, int tail, double floor = 1e-13);

/// Worker threads the runtime would use for `nodes` nodes.
int resolve_thread_count(int requested, int nodes);

}  // namespace aladin
