#include "aladin/receding_horizon.hpp"

#include "aladin/errors.hpp"

namespace aladin::mhe {

std::vector<RecedingStep> run_receding_horizon(const Trajectory& traj,
                                               const RecedingHorizonConfig& cfg) {
  const int states = static_cast<int>(traj.states.size());
  if (cfg.first_anchor < cfg.L || cfg.last_anchor < cfg.first_anchor || cfg.last_anchor >= states)
    throw DomainError("run_receding_horizon: anchors must satisfy L <= first <= last < states");
  if (cfg.iters_per_step < 1) throw DomainError("run_receding_horizon: iters_per_step must be >= 1");

  State prior = traj.states[static_cast<std::size_t>(cfg.first_anchor - cfg.L)];
  std::vector<State> horizon = initial_horizon(traj, cfg.first_anchor, cfg.L);
  std::vector<RecedingStep> out;

  for (int l = cfg.first_anchor; l <= cfg.last_anchor; ++l) {
    const SplitProblem sp = build_split_problem(traj, l, cfg.L, cfg.N, cfg.params, prior, cfg.rho);
    RunConfig rc;
    rc.variant = cfg.variant;
    rc.max_iters = cfg.iters_per_step;
    rc.y0 = split_states(sp.layout, horizon);
    const Trace trace = run(sp.problem, rc);
    const std::vector<State> estimate = merge_windows(sp.layout, trace.y_final);

    RecedingStep step;
    step.anchor = l;
    step.estimate = estimate.back();
    step.truth = traj.states[static_cast<std::size_t>(l)];
    step.err_to_truth = (step.estimate - step.truth).lpNorm<Eigen::Infinity>();
    step.coupling_res = trace.records.back().coupling_res;
    out.push_back(step);
    if (l == cfg.last_anchor) break;

    prior = estimate[1];
    horizon.assign(estimate.begin() + 1, estimate.end());
    horizon.push_back(dynamics_step(estimate.back(), traj.controls[static_cast<std::size_t>(l)],
                                    cfg.params.T));
  }
  return out;
}

}  // namespace aladin::mhe
