#include "aladin/mhe.hpp"

#include <cmath>
#include <memory>

#include "json.hpp"

#include "aladin/errors.hpp"
#include "aladin/rng.hpp"

namespace aladin::mhe {

RobotParams RobotParams::with_noise(double sigma_r, double sigma_alpha) {
  RobotParams p;
  p.sigma_r = sigma_r;
  p.sigma_alpha = sigma_alpha;
  p.V = Eigen::Vector2d(sigma_r * sigma_r, sigma_alpha * sigma_alpha).asDiagonal();
  return p;
}

void RobotParams::validate() const {
  if (!(T > 0.0)) throw DomainError("RobotParams: sampling period must be positive");
  if (!(sigma_r > 0.0) || !(sigma_alpha > 0.0))
    throw DomainError("RobotParams: noise levels must be positive");
  if (Eigen::LLT<Eigen::Matrix3d>(P).info() != Eigen::Success || !P.isApprox(P.transpose()))
    throw DomainError("RobotParams: P must be symmetric positive definite");
  if (Eigen::LLT<Eigen::Matrix2d>(V).info() != Eigen::Success || !V.isApprox(V.transpose()))
    throw DomainError("RobotParams: V must be symmetric positive definite");
}

State dynamics_step(const State& x, const Control& u, double T) {
  return {x[0] + T * u[0] * std::cos(x[2]), x[1] + T * u[0] * std::sin(x[2]), x[2] + T * u[1]};
}

Measurement measure(const State& x, const Eigen::Vector2d& noise) {
  const double r = std::hypot(x[0], x[1]);
  if (r == 0.0) throw MeasurementSingular("range/bearing undefined at the origin");
  return {r + noise[0], std::atan2(x[1], x[0]) + noise[1]};
}

std::vector<Control> default_controls(int steps) {
  std::vector<Control> u;
  u.reserve(static_cast<std::size_t>(std::max(steps, 0)));
  for (int n = 0; n < steps; ++n) u.emplace_back(1.0, 0.5 * std::sin(0.1 * n));
  return u;
}

Trajectory simulate_truth(const State& x0, const std::vector<Control>& controls,
                          const RobotParams& params, std::uint64_t seed) {
  params.validate();
  if (controls.empty()) throw DomainError("simulate_truth: no controls");
  Rng rng(seed);
  Trajectory traj;
  traj.controls = controls;
  traj.states.push_back(x0);
  for (const auto& u : controls) traj.states.push_back(dynamics_step(traj.states.back(), u, params.T));
  for (const auto& x : traj.states) {
    const double nr = params.sigma_r * rng.normal();
    const double na = params.sigma_alpha * rng.normal();
    traj.measurements.push_back(measure(x, {nr, na}));
  }
  return traj;
}

SplitLayout make_layout(int L, int N) {
  if (L < 1) throw LayoutError("horizon length must be positive");
  if (N < 2 || N > L)
    throw LayoutError("need 2 <= N <= L sub-windows, got N = " + std::to_string(N) +
                      ", L = " + std::to_string(L));
  const int t = L / N;
  SplitLayout layout;
  layout.L = L;
  layout.N = N;
  layout.m = 3 * (N - 1);
  for (int i = 0; i < N; ++i) {
    Window w;
    w.first_state = i * t;
    const bool last = i == N - 1;
    w.last_state = last ? L : (i + 1) * t;
    // z^b of an interior window is measured by the next window, as its z^a.
    w.measured = last ? w.last_state - w.first_state + 1 : w.last_state - w.first_state;
    if (w.measured < 1) throw LayoutError("window " + std::to_string(i) + " has no measurement");
    w.arrival_cost = i == 0;
    w.n = 3 * (w.last_state - w.first_state + 1);
    w.c = 3 * (w.last_state - w.first_state);
    layout.windows.push_back(w);
  }
  return layout;
}

namespace {

// A contiguous run of horizon states with its fit terms and dynamics.
struct Segment {
  int states = 0;
  std::vector<Measurement> ys;  // fit terms for the first ys.size() states
  std::vector<Control> us;      // states - 1 transitions
  bool arrival = false;
  State prior = State::Zero();
  Eigen::Matrix3d P_inv = Eigen::Matrix3d::Identity();
  Eigen::Matrix2d W = Eigen::Matrix2d::Identity();  // V^{-1}
  double T = 0.1;
};

struct MeasurementModel {
  Measurement h;
  Eigen::Matrix<double, 2, 3> J;
  Eigen::Matrix2d range_hess;    // w.r.t. (phi, psi)
  Eigen::Matrix2d bearing_hess;  // w.r.t. (phi, psi)
};

MeasurementModel measurement_model(const Eigen::Ref<const Eigen::Vector3d>& x) {
  const double phi = x[0];
  const double psi = x[1];
  const double r2 = phi * phi + psi * psi;
  if (r2 == 0.0) throw MeasurementSingular("range/bearing undefined at the origin");
  const double r = std::sqrt(r2);
  const double r3 = r2 * r;
  const double r4 = r2 * r2;
  MeasurementModel mm;
  mm.h = {r, std::atan2(psi, phi)};
  mm.J << phi / r, psi / r, 0.0, -psi / r2, phi / r2, 0.0;
  mm.range_hess << psi * psi / r3, -phi * psi / r3, -phi * psi / r3, phi * phi / r3;
  mm.bearing_hess << 2.0 * phi * psi / r4, (psi * psi - phi * phi) / r4,
      (psi * psi - phi * phi) / r4, -2.0 * phi * psi / r4;
  return mm;
}

double segment_objective(const Segment& s, const Vec& x) {
  double f = 0.0;
  for (std::size_t j = 0; j < s.ys.size(); ++j) {
    const auto xj = x.segment<3>(3 * static_cast<Eigen::Index>(j));
    const Eigen::Vector2d e = measurement_model(xj).h - s.ys[j];
    f += 0.5 * e.dot(s.W * e);
  }
  if (s.arrival) {
    const State e = x.head<3>() - s.prior;
    f += 0.5 * e.dot(s.P_inv * e);
  }
  return f;
}

Vec segment_gradient(const Segment& s, const Vec& x) {
  Vec g = Vec::Zero(x.size());
  for (std::size_t j = 0; j < s.ys.size(); ++j) {
    const auto off = 3 * static_cast<Eigen::Index>(j);
    const auto mm = measurement_model(x.segment<3>(off));
    g.segment<3>(off) += mm.J.transpose() * (s.W * (mm.h - s.ys[j]));
  }
  if (s.arrival) g.head<3>() += s.P_inv * (x.head<3>() - s.prior);
  return g;
}

Mat segment_gn_hessian(const Segment& s, const Vec& x) {
  Mat H = Mat::Zero(x.size(), x.size());
  for (std::size_t j = 0; j < s.ys.size(); ++j) {
    const auto off = 3 * static_cast<Eigen::Index>(j);
    const auto mm = measurement_model(x.segment<3>(off));
    H.block<3, 3>(off, off) += mm.J.transpose() * s.W * mm.J;
  }
  if (s.arrival) H.topLeftCorner<3, 3>() += s.P_inv;
  return H;
}

Vec segment_constraint(const Segment& s, const Vec& x) {
  Vec g(3 * (s.states - 1));
  for (int k = 0; k + 1 < s.states; ++k) {
    const State xk = x.segment<3>(3 * k);
    g.segment<3>(3 * k) = x.segment<3>(3 * (k + 1)) - dynamics_step(xk, s.us[k], s.T);
  }
  return g;
}

Mat segment_jacobian(const Segment& s, const Vec& x) {
  Mat J = Mat::Zero(3 * (s.states - 1), x.size());
  for (int k = 0; k + 1 < s.states; ++k) {
    const double theta = x[3 * k + 2];
    const double Tv = s.T * s.us[k][0];
    Eigen::Matrix3d F = Eigen::Matrix3d::Identity();
    F(0, 2) = -Tv * std::sin(theta);
    F(1, 2) = Tv * std::cos(theta);
    J.block<3, 3>(3 * k, 3 * k) = -F;
    J.block<3, 3>(3 * k, 3 * (k + 1)) = Eigen::Matrix3d::Identity();
  }
  return J;
}

Mat segment_lagrangian_hessian(const Segment& s, const Vec& x, const Vec& mu) {
  Mat H = segment_gn_hessian(s, x);
  for (std::size_t j = 0; j < s.ys.size(); ++j) {
    const auto off = 3 * static_cast<Eigen::Index>(j);
    const auto mm = measurement_model(x.segment<3>(off));
    const Eigen::Vector2d weighted = s.W * (mm.h - s.ys[j]);
    H.block<2, 2>(off, off) += weighted[0] * mm.range_hess + weighted[1] * mm.bearing_hess;
  }
  for (int k = 0; k + 1 < s.states; ++k) {
    const double theta = x[3 * k + 2];
    const double Tv = s.T * s.us[k][0];
    H(3 * k + 2, 3 * k + 2) +=
        Tv * (mu[3 * k] * std::cos(theta) + mu[3 * k + 1] * std::sin(theta));
  }
  return H;
}

NodeProblem make_segment_node(Segment segment, std::string name) {
  auto s = std::make_shared<const Segment>(std::move(segment));
  NodeProblem node;
  node.n = 3 * s->states;
  node.c = 3 * (s->states - 1);
  node.name = std::move(name);
  node.objective = [s](const Vec& x) { return segment_objective(*s, x); };
  node.objective_gradient = [s](const Vec& x) { return segment_gradient(*s, x); };
  node.constraint = [s](const Vec& x) { return segment_constraint(*s, x); };
  node.constraint_jacobian = [s](const Vec& x) { return segment_jacobian(*s, x); };
  node.lagrangian_hessian = [s](const Vec& x, const Vec& mu) {
    return segment_lagrangian_hessian(*s, x, mu);
  };
  node.gn_hessian = [s](const Vec& x) { return segment_gn_hessian(*s, x); };
  return node;
}

void check_anchor(const Trajectory& traj, int l, int L) {
  if (L < 1 || l < L) throw LayoutError("anchor l must satisfy l >= L >= 1");
  if (l >= static_cast<int>(traj.states.size()) ||
      traj.measurements.size() != traj.states.size() ||
      traj.controls.size() + 1 < traj.states.size())
    throw LayoutError("trajectory does not cover the horizon ending at l = " + std::to_string(l));
}

Segment base_segment(const RobotParams& params) {
  Segment s;
  s.P_inv = params.P.inverse();
  s.W = params.V.inverse();
  s.T = params.T;
  return s;
}

}  // namespace

SplitProblem build_split_problem(const Trajectory& traj, int l, int L, int N,
                                 const RobotParams& params, const State& prior, double rho) {
  params.validate();
  check_anchor(traj, l, L);
  SplitProblem out;
  out.layout = make_layout(L, N);
  const int origin = l - L;

  for (int i = 0; i < N; ++i) {
    const Window& w = out.layout.windows[static_cast<std::size_t>(i)];
    Segment s = base_segment(params);
    s.states = w.last_state - w.first_state + 1;
    for (int j = 0; j < w.measured; ++j)
      s.ys.push_back(traj.measurements[static_cast<std::size_t>(origin + w.first_state + j)]);
    for (int k = w.first_state; k < w.last_state; ++k)
      s.us.push_back(traj.controls[static_cast<std::size_t>(origin + k)]);
    s.arrival = w.arrival_cost;
    s.prior = prior;
    out.problem.nodes.push_back(make_segment_node(std::move(s), "window" + std::to_string(i + 1)));
  }

  auto& cs = out.problem.coupling;
  cs.m = out.layout.m;
  cs.rhs = Vec::Zero(cs.m);
  for (int i = 0; i < N; ++i) cs.blocks.push_back(Mat::Zero(cs.m, out.layout.windows[i].n));
  for (int j = 0; j + 1 < N; ++j) {
    const int n_j = out.layout.windows[j].n;
    cs.blocks[j].block<3, 3>(3 * j, n_j - 3) = Eigen::Matrix3d::Identity();
    cs.blocks[j + 1].block<3, 3>(3 * j, 0) = -Eigen::Matrix3d::Identity();
  }
  out.problem.rho = rho;
  out.problem.validate();
  return out;
}

NodeProblem build_unsplit_problem(const Trajectory& traj, int l, int L, const RobotParams& params,
                                  const State& prior) {
  params.validate();
  check_anchor(traj, l, L);
  const int origin = l - L;
  Segment s = base_segment(params);
  s.states = L + 1;
  for (int j = 0; j <= L; ++j) s.ys.push_back(traj.measurements[origin + j]);
  for (int k = 0; k < L; ++k) s.us.push_back(traj.controls[origin + k]);
  s.arrival = true;
  s.prior = prior;
  return make_segment_node(std::move(s), "horizon");
}

std::vector<Vec> split_states(const SplitLayout& layout, const std::vector<State>& horizon) {
  if (static_cast<int>(horizon.size()) != layout.L + 1)
    throw ShapeError("split_states: expected L+1 horizon states");
  std::vector<Vec> out;
  for (const auto& w : layout.windows) {
    Vec v(w.n);
    for (int k = w.first_state; k <= w.last_state; ++k)
      v.segment<3>(3 * (k - w.first_state)) = horizon[static_cast<std::size_t>(k)];
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<State> merge_windows(const SplitLayout& layout, const std::vector<Vec>& windows) {
  if (windows.size() != layout.windows.size()) throw ShapeError("merge_windows: window count");
  std::vector<State> horizon(static_cast<std::size_t>(layout.L + 1));
  // Later windows overwrite the shared boundary, so z^a wins over z^b.
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = layout.windows[i];
    if (windows[i].size() != w.n) throw ShapeError("merge_windows: window length");
    for (int k = w.first_state; k <= w.last_state; ++k)
      horizon[static_cast<std::size_t>(k)] = windows[i].segment<3>(3 * (k - w.first_state));
  }
  return horizon;
}

Vec stack_states(const std::vector<State>& states) {
  Vec v(3 * static_cast<Eigen::Index>(states.size()));
  for (std::size_t k = 0; k < states.size(); ++k) v.segment<3>(3 * static_cast<Eigen::Index>(k)) = states[k];
  return v;
}

std::vector<State> unstack_states(const Vec& stacked) {
  if (stacked.size() % 3 != 0) throw ShapeError("unstack_states: length not a multiple of 3");
  std::vector<State> out;
  for (Eigen::Index k = 0; k < stacked.size() / 3; ++k) out.emplace_back(stacked.segment<3>(3 * k));
  return out;
}

std::vector<State> initial_horizon(const Trajectory& traj, int l, int L) {
  check_anchor(traj, l, L);
  std::vector<State> out;
  for (int k = l - L; k <= l; ++k) {
    const auto& x = traj.states[static_cast<std::size_t>(k)];
    out.emplace_back(x[0], x[1], 0.0);
  }
  return out;
}

BenchmarkInstance make_benchmark(std::uint64_t seed, int L, int N, double rho,
                                 const RobotParams& params, int sim_steps) {
  if (sim_steps < L) throw LayoutError("simulation shorter than the horizon");
  BenchmarkInstance inst;
  inst.truth = simulate_truth(State(0.1, 0.1, 0.0), default_controls(sim_steps), params, seed);
  inst.anchor = L;
  const State prior = inst.truth.states[0];
  inst.split = build_split_problem(inst.truth, inst.anchor, L, N, params, prior, rho);
  inst.y0 = split_states(inst.split.layout, initial_horizon(inst.truth, inst.anchor, L));
  return inst;
}

std::string trajectory_json(const Trajectory& traj) {
  nlohmann::json j;
  auto rows = [](const auto& list) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& v : list) arr.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    return arr;
  };
  j["states"] = rows(traj.states);
  j["controls"] = rows(traj.controls);
  j["measurements"] = rows(traj.measurements);
  return j.dump(2);
}

std::string layout_json(const SplitLayout& layout) {
  nlohmann::json j;
  j["L"] = layout.L;
  j["N"] = layout.N;
  j["m"] = layout.m;
  j["windows"] = nlohmann::json::array();
  for (const auto& w : layout.windows) {
    j["windows"].push_back({{"first_state", w.first_state},
                            {"last_state", w.last_state},
                            {"measured", w.measured},
                            {"arrival_cost", w.arrival_cost},
                            {"n", w.n},
                            {"c", w.c}});
  }
  return j.dump(2);
}

}  // namespace aladin::mhe
