#include "aladin/sensitivity.hpp"

#include <cmath>
#include <string>

#include "aladin/errors.hpp"

namespace aladin {

DiffPack& DiffPack::operator+=(const DiffPack& other) {
  S += other.S;
  d += other.d;
  z += other.z;
  sigma += other.sigma;
  gamma += other.gamma;
  return *this;
}

DiffPack make_diffs(const IterateSnapshot& prev, const IterateSnapshot& curr,
                    const Mat& jacobian_at_curr) {
  if (prev.x.size() != curr.x.size() || prev.v.size() != curr.v.size() ||
      prev.g_val.size() != curr.g_val.size() || prev.mu.size() != curr.mu.size())
    throw ShapeError("make_diffs: iterates differ in dimension");
  if (jacobian_at_curr.rows() != curr.mu.size() || jacobian_at_curr.cols() != curr.x.size())
    throw ShapeError("make_diffs: Jacobian shape does not match the iterate");
  DiffPack p;
  p.S = curr.x - prev.x;
  p.d = curr.v - prev.v;
  p.z = curr.g_val - prev.g_val;
  p.sigma = curr.mu - prev.mu;
  p.gamma = jacobian_at_curr.transpose() * p.sigma;
  return p;
}

SensitivityState SensitivityState::initial(const Mat& exact_jacobian) {
  SensitivityState s;
  s.H = Mat::Identity(exact_jacobian.cols(), exact_jacobian.cols());
  s.C = exact_jacobian;
  return s;
}

BfgsResult bfgs_update(const Mat& H, const Vec& S, const Vec& d, double guard_eps) {
  if (H.rows() != H.cols() || H.rows() != S.size() || S.size() != d.size())
    throw ShapeError("bfgs_update: dimension mismatch");
  if (!H.allFinite() || !S.allFinite() || !d.allFinite())
    throw NumericalError("bfgs_update: non-finite input");

  const double curvature = S.dot(d);
  const Vec HS = H * S;
  const double sHs = S.dot(HS);
  if (!(curvature > guard_eps * S.norm() * d.norm()) || !(sHs > 0.0)) return {H, false};

  Mat next = H;
  next.noalias() -= (HS * HS.transpose()) / sHs;
  next.noalias() += (d * d.transpose()) / curvature;
  // Round-off leaves a skew part of order eps |H|; drop it.
  next = 0.5 * (next + next.transpose()).eval();
  return {std::move(next), true};
}

AdjointResult adjoint_jacobian_update(const Mat& C, const DiffPack& diffs, double guard_eps) {
  const auto c = C.rows();
  const auto n = C.cols();
  if (diffs.S.size() != n || diffs.z.size() != c || diffs.sigma.size() != c ||
      diffs.gamma.size() != n)
    throw ShapeError("adjoint_jacobian_update: dimension mismatch");
  if (!C.allFinite() || !diffs.S.allFinite() || !diffs.z.allFinite() ||
      !diffs.sigma.allFinite() || !diffs.gamma.allFinite())
    throw NumericalError("adjoint_jacobian_update: non-finite input");
  if (c == 0) return {C, false};

  const Vec adjoint_gap = diffs.gamma - C.transpose() * diffs.sigma;  // (gamma^T - sigma^T C)^T
  const double denom = adjoint_gap.dot(diffs.S);
  if (!(std::abs(denom) > guard_eps * (1.0 + diffs.S.norm()))) return {C, false};

  const Vec forward_gap = diffs.z - C * diffs.S;
  Mat next = C;
  next.noalias() += (forward_gap * adjoint_gap.transpose()) / denom;
  return {std::move(next), true};
}

bool is_trigger(std::int64_t k) {
  if (k < 1) throw DomainError("is_trigger: iteration index must be >= 1, got " + std::to_string(k));
  if (k == 1) return false;
  while (k % 3 == 0) k /= 3;
  return k == 1;
}

}  // namespace aladin
