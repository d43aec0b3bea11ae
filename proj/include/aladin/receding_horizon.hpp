#pragma once

#include <vector>

#include "aladin/mhe.hpp"
#include "aladin/runtime.hpp"

namespace aladin::mhe {

struct RecedingHorizonConfig {
  int L = 25;
  int N = 4;
  double rho = 25.0;
  Variant variant = Variant::AdjointBFGS;
  int iters_per_step = 15;
  int first_anchor = 25;  // >= L
  int last_anchor = 40;   // < number of states in the trajectory
  RobotParams params;
};

struct RecedingStep {
  int anchor = 0;
  State estimate;  // x_l at the end of the ALADIN iterations
  State truth;
  double err_to_truth = 0.0;  // inf-norm
  double coupling_res = 0.0;  // of the last iteration
};

/// Slides the horizon one sample at a time. The first prior is the true
/// x_{first_anchor - L}; afterwards the prior is the previous estimate of the
/// state that leaves the horizon, and the initial guess is the previous
/// estimate shifted by one sample and extended through the dynamics.
std::vector<RecedingStep> run_receding_horizon(const Trajectory& traj,
                                               const RecedingHorizonConfig& cfg);

}  // namespace aladin::mhe
