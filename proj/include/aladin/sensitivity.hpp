#pragma once

#include <cstdint>

#include "aladin/problem.hpp"

namespace aladin {

/// Differences a node ships to the coordinator instead of its sensitivity
/// matrices: S, d and gamma have n entries, z and sigma have c, so 3n + 2c
/// scalars.
struct DiffPack {
  Vec S;      // x+ - x
  Vec d;      // grad f(x+) - grad f(x)
  Vec z;      // g(x+) - g(x)
  Vec sigma;  // mu+ - mu
  Vec gamma;  // jacobian(x+)^T sigma, evaluated node-side in reverse mode

  int scalar_count() const {
    return static_cast<int>(S.size() + d.size() + z.size() + sigma.size() + gamma.size());
  }
  DiffPack& operator+=(const DiffPack& other);
};

/// Iterate bundle used on both ends of the uplink for differencing.
struct IterateSnapshot {
  Vec x;
  Vec v;      // grad f(x)
  Vec g_val;  // g(x)
  Vec mu;
};

DiffPack make_diffs(const IterateSnapshot& prev, const IterateSnapshot& curr,
                    const Mat& jacobian_at_curr);

/// Coordinator-side curvature and constraint geometry of one node.
struct SensitivityState {
  Mat H;  // SPD Hessian approximation
  Mat C;  // constraint Jacobian approximation
  int last_update_iter = 0;
  std::int64_t skipped_bfgs = 0;
  std::int64_t skipped_adjoint = 0;

  static SensitivityState initial(const Mat& exact_jacobian);
};

inline constexpr double kBfgsCurvatureGuard = 1e-8;
inline constexpr double kAdjointDenominatorGuard = 1e-12;

struct BfgsResult {
  Mat H;
  bool applied = false;
};

/// H+ = H - H S S^T H / (S^T H S) + d d^T / (S^T d), skipped (H returned as is)
/// unless S^T d > guard_eps |S| |d| and S^T H S > 0.
BfgsResult bfgs_update(const Mat& H, const Vec& S, const Vec& d,
                       double guard_eps = kBfgsCurvatureGuard);

struct AdjointResult {
  Mat C;
  bool applied = false;
};

/// Adjoint Broyden (TR1) update
///   C+ = C + (z - C S)(gamma^T - sigma^T C) / ((gamma^T - sigma^T C) S),
/// skipped when |denominator| <= guard_eps (1 + |S|).
AdjointResult adjoint_jacobian_update(const Mat& C, const DiffPack& diffs,
                                      double guard_eps = kAdjointDenominatorGuard);

/// Event-trigger schedule: true iff k is 3^j with j >= 1.
bool is_trigger(std::int64_t k);

}  // namespace aladin
