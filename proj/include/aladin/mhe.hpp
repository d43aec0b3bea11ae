#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aladin/problem.hpp"

// Moving-horizon estimation for a differential-drive robot observed through
// range and bearing, and its time-splitting into coupled sub-windows.
namespace aladin::mhe {

using State = Eigen::Vector3d;        // (phi, psi, theta): lateral, longitudinal, heading
using Control = Eigen::Vector2d;      // (v, omega)
using Measurement = Eigen::Vector2d;  // (range, bearing)

struct RobotParams {
  double T = 0.1;
  double sigma_r = 0.01;
  double sigma_alpha = 0.01;
  Eigen::Matrix3d P = 0.1 * Eigen::Matrix3d::Identity();  // arrival-cost covariance
  // Measurement weighting. Unit weights keep the fit terms O(1) next to
  // rho = 25 and the identity BFGS seed; weighting by the inverse noise
  // covariance (1e4 here) makes every variant diverge from the standard start.
  Eigen::Matrix2d V = Eigen::Matrix2d::Identity();

  /// Defaults with the given noise and V = diag(sigma_r^2, sigma_alpha^2).
  static RobotParams with_noise(double sigma_r, double sigma_alpha);
  void validate() const;
};

struct Trajectory {
  std::vector<State> states;
  std::vector<Control> controls;  // controls[k] drives states[k] -> states[k+1]
  std::vector<Measurement> measurements;  // one per state
};

State dynamics_step(const State& x, const Control& u, double T);

/// r = |(phi, psi)| + nu_r, alpha = atan2(psi, phi) + nu_alpha.
Measurement measure(const State& x, const Eigen::Vector2d& noise = Eigen::Vector2d::Zero());

/// v = 1, omega_n = 0.5 sin(0.1 n), n = 0..steps-1.
std::vector<Control> default_controls(int steps);

/// Noiseless rollout of the dynamics from x0 with Gaussian measurement noise
/// drawn from Rng(seed), range deviate before bearing deviate at each state.
Trajectory simulate_truth(const State& x0, const std::vector<Control>& controls,
                          const RobotParams& params, std::uint64_t seed);

/// One sub-window of the horizon, in horizon-relative state indices.
struct Window {
  int first_state = 0;  // z^a
  int last_state = 0;   // z^b for interior windows, x_l for the last one
  int measured = 0;     // states first_state .. first_state+measured-1 carry fit terms
  bool arrival_cost = false;
  int n = 0;
  int c = 0;
};

struct SplitLayout {
  int L = 0;
  int N = 0;
  int m = 0;  // 3 (N - 1) coupling rows
  std::vector<Window> windows;
};

/// Interior windows get floor(L/N) steps; the last absorbs the remainder.
/// Throws LayoutError unless 2 <= N <= L.
SplitLayout make_layout(int L, int N);

/// Time-split MHE problem anchored at state index l of `traj`, horizon
/// x_{l-L} .. x_l, prior x_hat for x_{l-L}. Coupling rows encode
/// z^b_i - z^a_{i+1} = 0 with b = 0.
struct SplitProblem {
  DistributedProblem problem;
  SplitLayout layout;
};
SplitProblem build_split_problem(const Trajectory& traj, int l, int L, int N,
                                 const RobotParams& params, const State& prior, double rho);

/// The same horizon as a single node (no coupling).
NodeProblem build_unsplit_problem(const Trajectory& traj, int l, int L, const RobotParams& params,
                                  const State& prior);

/// Horizon states (L+1 of them) -> per-window decision vectors.
std::vector<Vec> split_states(const SplitLayout& layout, const std::vector<State>& horizon);
/// Per-window vectors -> horizon states; boundary duplicates are taken from
/// the window that starts there.
std::vector<State> merge_windows(const SplitLayout& layout, const std::vector<Vec>& windows);
/// Horizon-stacked vector of L+1 states.
Vec stack_states(const std::vector<State>& states);
std::vector<State> unstack_states(const Vec& stacked);

/// Initial decision variables (phi*, psi*, 0) taken from the true positions.
std::vector<State> initial_horizon(const Trajectory& traj, int l, int L);

/// Benchmark instance determined by (seed, L, N, params, rho): default
/// controls over `sim_steps`, x0 = (0.1, 0.1, 0), anchor l = L, prior equal to
/// the true x_0.
struct BenchmarkInstance {
  Trajectory truth;
  SplitProblem split;
  int anchor = 0;
  std::vector<Vec> y0;  // per-window initial guess
};
BenchmarkInstance make_benchmark(std::uint64_t seed, int L, int N, double rho,
                                 const RobotParams& params = {}, int sim_steps = 60);

std::string trajectory_json(const Trajectory& traj);
std::string layout_json(const SplitLayout& layout);

}  // namespace aladin::mhe
