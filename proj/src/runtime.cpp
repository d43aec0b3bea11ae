#include "aladin/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "aladin/errors.hpp"

namespace aladin {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::GaussNewton: return "gn";
    case Variant::AdjointBFGS: return "abfgs";
    case Variant::RtGaussNewton: return "rt-gn";
    case Variant::RtAdjointBFGS: return "rt-abfgs";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view name) {
  for (Variant v : kAllVariants)
    if (variant_name(v) == name) return v;
  return std::nullopt;
}

bool is_realtime(Variant v) { return v == Variant::RtGaussNewton || v == Variant::RtAdjointBFGS; }

bool sends_full_sensitivities(Variant v) {
  return v == Variant::GaussNewton || v == Variant::RtGaussNewton;
}

std::int64_t UplinkMessage::scalar_count() const {
  if (const auto* full = std::get_if<FullSensitivities>(&payload))
    return full->x.size() + full->v.size() + full->H.size() + full->C.size();
  return std::get<DiffPack>(payload).scalar_count();
}

std::int64_t uplink_cost(Variant variant, const std::vector<std::pair<int, int>>& dims) {
  if (dims.empty()) throw DomainError("uplink_cost: no nodes");
  std::int64_t total = 0;
  for (const auto& [n64, c64] : dims) {
    const std::int64_t n = n64;
    const std::int64_t c = c64;
    total += sends_full_sensitivities(variant) ? 2 * n + n * n + c * n : 3 * n + 2 * c;
  }
  return total;
}

std::vector<int> Trace::trigger_iterations() const {
  std::vector<int> ks;
  for (const auto& r : records)
    if (r.triggered) ks.push_back(r.k);
  return ks;
}

int resolve_thread_count(int requested, int nodes) {
  int threads = requested;
  if (threads <= 0) {
    threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* cap = std::getenv("ALADIN_THREADS")) {
      const int c = std::atoi(cap);
      if (c > 0) threads = std::min(threads, c);
    }
  }
  return std::clamp(threads, 1, std::max(nodes, 1));
}

namespace {

// Blocking FIFO used for both directions of the simulated links.
template <typename T>
class Mailbox {
 public:
  void push(T item) {
    {
      std::lock_guard lock(mutex_);
      items_.push_back(std::move(item));
    }
    ready_.notify_one();
  }

  T pop() {
    std::unique_lock lock(mutex_);
    ready_.wait(lock, [this] { return !items_.empty(); });
    T item = std::move(items_.front());
    items_.pop_front();
    return item;
  }

 private:
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<T> items_;
};

struct Downlink {
  int node = 0;
  int k = 0;
  Vec lambda;
  Vec y;
  bool stop = false;
};

// Uplink envelope: the counted payload plus telemetry that a real deployment
// would not need to send (solver statistics, feasibility for logging).
struct Envelope {
  UplinkMessage message;
  std::optional<Mat> initial_jacobian;  // exact C at x^[1], sent once
  std::optional<Vec> initial_gradient;  // grad f(y0), sent once
  LocalSolution local;
  double local_feas = 0.0;
  std::exception_ptr error;
};

Mat floor_eigenvalues(const Mat& H, double rel_floor) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(H);
  if (eig.info() != Eigen::Success) throw NumericalError("Gauss-Newton Hessian eigensolve failed");
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  const double floor = rel_floor * scale;
  if (eig.eigenvalues().minCoeff() >= floor) return H;
  const Vec clamped = eig.eigenvalues().cwiseMax(floor);
  Mat out = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

// Worker-side logic for one node.
class NodeAgent {
 public:
  NodeAgent(int index, const NodeProblem& node, const Mat& A, double rho, const RunConfig& cfg,
            const Vec& y0)
      : index_(index), node_(node), A_(A), rho_(rho), cfg_(cfg) {
    state_.x = y0;
    state_.y = y0;
    state_.mu = Vec::Zero(node.c);
    state_.v = node.eval_gradient(y0);
    state_.g_val = node.eval_constraint(y0);
    state_.prev = {state_.x, state_.v, state_.g_val, state_.mu};
  }

  Envelope step(const Downlink& in) {
    Envelope out;
    out.message.node = index_;
    state_.y = in.y;
    out.local = solve_local(node_, in.lambda, in.y, A_, rho_, WarmStart{state_.x, state_.mu},
                            cfg_.local_cfg);

    IterateSnapshot curr{out.local.x, node_.eval_gradient(out.local.x),
                         node_.eval_constraint(out.local.x), out.local.mu};
    const Mat jac = node_.eval_jacobian(curr.x);
    out.local_feas = curr.g_val.size() ? curr.g_val.lpNorm<Eigen::Infinity>() : 0.0;

    if (sends_full_sensitivities(cfg_.variant)) {
      Mat H = floor_eigenvalues(node_.eval_gn_hessian(curr.x), cfg_.gn_eigen_floor);
      out.message.payload = FullSensitivities{curr.x, curr.v, std::move(H), jac};
    } else {
      out.message.payload = make_diffs(state_.prev, curr, jac);
      if (in.k == 1) {
        out.initial_jacobian = jac;
        out.initial_gradient = state_.prev.v;
      }
    }

    state_.x = curr.x;
    state_.mu = curr.mu;
    state_.v = curr.v;
    state_.g_val = curr.g_val;
    state_.prev = std::move(curr);
    return out;
  }

 private:
  int index_;
  const NodeProblem& node_;
  const Mat& A_;
  double rho_;
  const RunConfig& cfg_;
  NodeState state_;
};

// Worker threads, each owning the nodes i with i % threads == its id.
class WorkerPool {
 public:
  WorkerPool(std::vector<NodeAgent>& agents, int threads)
      : agents_(agents), inboxes_(static_cast<std::size_t>(threads)) {
    for (int t = 0; t < threads; ++t) {
      workers_.emplace_back([this, t] { loop(t); });
    }
  }

  ~WorkerPool() {
    for (auto& inbox : inboxes_) inbox.push(Downlink{0, 0, Vec(), Vec(), true});
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  void send(Downlink msg) {
    inboxes_[static_cast<std::size_t>(msg.node) % inboxes_.size()].push(std::move(msg));
  }

  // Barrier: blocks until every node has answered, returns in node order.
  std::vector<Envelope> gather(std::size_t count) {
    std::vector<Envelope> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(uplink_.pop());
    std::sort(out.begin(), out.end(),
              [](const Envelope& a, const Envelope& b) { return a.message.node < b.message.node; });
    return out;
  }

 private:
  void loop(int t) {
    auto& inbox = inboxes_[static_cast<std::size_t>(t)];
    for (;;) {
      Downlink msg = inbox.pop();
      if (msg.stop) return;
      Envelope env;
      try {
        env = agents_[static_cast<std::size_t>(msg.node)].step(msg);
      } catch (...) {
        env.error = std::current_exception();
      }
      env.message.node = msg.node;
      uplink_.push(std::move(env));
    }
  }

  std::vector<NodeAgent>& agents_;
  std::vector<Mailbox<Downlink>> inboxes_;
  Mailbox<Envelope> uplink_;
  std::vector<std::jthread> workers_;  // declared last: joined before the mailboxes die
};

template <typename E>
[[noreturn]] void rethrow_at(int k, const E& e) {
  throw E(std::string("iteration ") + std::to_string(k) + ": " + e.what());
}

[[noreturn]] void rethrow_with_iteration(int k, std::exception_ptr err) {
  try {
    std::rethrow_exception(err);
  } catch (const CoordinationSingular& e) {
    throw CoordinationSingular(std::string("iteration ") + std::to_string(k) + ": " + e.what(),
                               e.rcond());
  } catch (const SolveStalled& e) {
    rethrow_at(k, e);
  } catch (const NotPositiveDefinite& e) {
    rethrow_at(k, e);
  } catch (const RankDeficientConstraints& e) {
    rethrow_at(k, e);
  } catch (const NumericalError& e) {
    rethrow_at(k, e);
  } catch (const OracleError& e) {
    rethrow_at(k, e);
  } catch (...) {
    throw;
  }
}

double inf_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d = std::max(d, (a[i] - b[i]).lpNorm<Eigen::Infinity>());
  return d;
}

}  // namespace

Trace run(const DistributedProblem& problem, const RunConfig& cfg,
          const std::optional<std::vector<Vec>>& reference, const IterationObserver& observer) {
  problem.validate();
  cfg.local_cfg.validate();
  const int N = problem.node_count();
  const auto& cs = problem.coupling;
  const double rho = cfg.rho.value_or(problem.rho);
  if (!(rho > 0.0)) throw DomainError("run: rho must be positive");
  if (cfg.max_iters < 1) throw DomainError("run: max_iters must be >= 1");
  if (static_cast<int>(cfg.y0.size()) != N) throw ShapeError("run: y0 needs one vector per node");
  for (int i = 0; i < N; ++i)
    if (cfg.y0[i].size() != problem.nodes[i].n) throw ShapeError("run: y0 has wrong dimensions");
  if (reference) {
    if (static_cast<int>(reference->size()) != N) throw ShapeError("run: reference shape");
    for (int i = 0; i < N; ++i)
      if ((*reference)[i].size() != problem.nodes[i].n) throw ShapeError("run: reference shape");
  }
  Vec lambda = cfg.lambda0.size() ? cfg.lambda0 : Vec::Zero(cs.m);
  if (lambda.size() != cs.m) throw ShapeError("run: lambda0 has wrong length");

  const Variant variant = cfg.variant;
  const bool full = sends_full_sensitivities(variant);
  const bool realtime = is_realtime(variant);

  Trace trace;
  trace.variant = variant;
  trace.config = cfg;
  trace.config.rho = rho;

  std::vector<NodeAgent> agents;
  agents.reserve(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) agents.emplace_back(i, problem.nodes[i], cs.blocks[i], rho, cfg, cfg.y0[i]);
  WorkerPool pool(agents, resolve_thread_count(cfg.threads, N));

  // Coordinator state.
  std::vector<Vec> y = cfg.y0;
  std::vector<Vec> x = cfg.y0;  // reconstructed from the uplink
  std::vector<Vec> v(static_cast<std::size_t>(N));
  std::vector<Vec> local_mu(static_cast<std::size_t>(N));
  std::vector<SensitivityState> sens(static_cast<std::size_t>(N));
  std::vector<NodeBlocks> blocks(static_cast<std::size_t>(N));
  std::vector<std::optional<DiffPack>> pending(static_cast<std::size_t>(N));
  std::vector<Mat> C_view(static_cast<std::size_t>(N));
  std::shared_ptr<const SchurFactor> schur;
  double prev_err = std::numeric_limits<double>::quiet_NaN();

  for (int k = 1; k <= cfg.max_iters; ++k) {
    for (int i = 0; i < N; ++i) pool.send(Downlink{i, k, lambda, y[i], false});
    std::vector<Envelope> inbox = pool.gather(static_cast<std::size_t>(N));

    IterationRecord rec;
    rec.k = k;
    rec.triggered = realtime && is_trigger(k);
    for (auto& env : inbox) {
      if (env.error) rethrow_with_iteration(k, env.error);
      const int i = env.message.node;
      rec.uplink_scalars += env.message.scalar_count();
      rec.newton_steps.push_back(env.local.newton_steps);
      rec.local_feas = std::max(rec.local_feas, env.local_feas);
      local_mu[i] = env.local.mu;
      if (!env.local.converged) {
        ++rec.local_warnings;
        trace.warnings.push_back("iteration " + std::to_string(k) + ": local solve of node " +
                                 std::to_string(i) + " stopped at |KKT| = " +
                                 std::to_string(env.local.kkt_residual));
      }
      if (env.initial_jacobian) {
        trace.init_uplink_scalars += env.initial_jacobian->size() + env.initial_gradient->size();
      }
    }

    const bool refresh = !realtime || k == 1 || rec.triggered;
    rec.sensitivity_refresh = refresh;

    const auto t0 = std::chrono::steady_clock::now();
    try {
      for (int i = 0; i < N; ++i) {
        Envelope& env = inbox[static_cast<std::size_t>(i)];
        auto& s = sens[static_cast<std::size_t>(i)];
        if (full) {
          auto& msg = std::get<FullSensitivities>(env.message.payload);
          x[i] = std::move(msg.x);
          v[i] = std::move(msg.v);
          if (refresh) {
            s.H = std::move(msg.H);
            s.C = std::move(msg.C);
            s.last_update_iter = k;
          }
        } else {
          auto& diffs = std::get<DiffPack>(env.message.payload);
          if (k == 1) v[i] = *env.initial_gradient;
          x[i] += diffs.S;
          v[i] += diffs.d;
          if (k == 1) {
            s = SensitivityState::initial(*env.initial_jacobian);
            s.last_update_iter = k;
          } else {
            auto& acc = pending[static_cast<std::size_t>(i)];
            if (cfg.accumulate_diffs && realtime) {
              if (acc) *acc += diffs;
              else acc = diffs;
            }
            if (refresh) {
              const DiffPack& use = (cfg.accumulate_diffs && realtime) ? *acc : diffs;
              auto bfgs = bfgs_update(s.H, use.S, use.d, cfg.bfgs_guard);
              if (bfgs.applied) s.H = std::move(bfgs.H);
              else ++s.skipped_bfgs;
              auto adj = adjoint_jacobian_update(s.C, use, cfg.adjoint_guard);
              if (adj.applied) s.C = std::move(adj.C);
              else if (problem.nodes[i].c > 0) ++s.skipped_adjoint;
              s.last_update_iter = k;
              acc.reset();
            }
          }
        }
        if (refresh) blocks[i] = assemble_blocks(s.H, s.C, cs.blocks[i]);
        C_view[i] = s.C;
      }
      if (refresh) schur.reset();
    } catch (...) {
      rethrow_with_iteration(k, std::current_exception());
    }

    std::vector<Vec> qp_grad = v;
    if (cfg.qp_gradient == QpGradient::Lagrangian)
      for (int i = 0; i < N; ++i)
        qp_grad[i] = rho * (y[i] - x[i]) - cs.blocks[i].transpose() * lambda;

    CoordinationResult coord;
    try {
      coord = solve_closed_form(blocks, x, qp_grad, C_view, cs.blocks, cs.rhs, schur);
    } catch (...) {
      rethrow_with_iteration(k, std::current_exception());
    }
    const auto t1 = std::chrono::steady_clock::now();
    schur = coord.schur;
    rec.coord_wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();

    lambda = coord.lambda;
    y = coord.y_next;
    rec.lambda = lambda;
    rec.coupling_res = coupling_residual(problem, x).lpNorm<Eigen::Infinity>();
    rec.err_to_ref = reference ? inf_distance(y, *reference) : std::numeric_limits<double>::quiet_NaN();
    if (k > 1 && std::isfinite(prev_err) && prev_err > 0.0 && std::isfinite(rec.err_to_ref))
      rec.contraction_ratio = rec.err_to_ref / prev_err;
    prev_err = rec.err_to_ref;

    trace.records.push_back(std::move(rec));
    if (observer) observer(IterationView{k, trace.records.back(), sens, blocks, coord, x, local_mu});

    const auto& last = trace.records.back();
    if (cfg.stop_tol > 0.0) {
      const double metric = reference ? last.err_to_ref : last.coupling_res;
      if (metric <= cfg.stop_tol) break;
    }
  }
  trace.y_final = y;
  return trace;
}

double empirical_contraction(const std::vector<double>& errors, int tail, double floor) {
  if (tail < 1) throw DomainError("empirical_contraction: tail must be >= 1");
  std::vector<double> usable;
  for (double e : errors) {
    if (!std::isfinite(e)) throw DomainError("empirical_contraction: non-finite error in trace");
    if (e <= floor) break;
    usable.push_back(e);
  }
  if (static_cast<int>(usable.size()) < tail + 1)
    throw DomainError("empirical_contraction: need " + std::to_string(tail + 1) +
                      " records above the floor, have " + std::to_string(usable.size()));
  const double last = usable.back();
  const double first = usable[usable.size() - 1 - static_cast<std::size_t>(tail)];
  return std::pow(last / first, 1.0 / tail);
}

double empirical_contraction(const Trace& trace, int tail, double floor) {
  std::vector<double> errors;
  for (const auto& r : trace.records) errors.push_back(r.err_to_ref);
  return empirical_contraction(errors, tail, floor);
}

}  // namespace aladin
