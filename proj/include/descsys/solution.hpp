#pragma once

// Consistent initial conditions and trajectories of F Y_{k+1} = G Y_k.
//
// Consistent initial conditions are exactly colspan Qp. An inconsistent Y0 is
// replaced by its orthogonal projection Pi Y0, Pi = Qp (Qp* Qp)^-1 Qp*, the
// nearest consistent point in the 2-norm; the optimal trajectory is then
// Y_k = Qp Jp^k C with C = (Qp* Qp)^-1 Qp* Y0.

#include <algorithm>
#include <string>
#include <vector>

#include "descsys/errors.hpp"
#include "descsys/numerics.hpp"
#include "descsys/pencil.hpp"

namespace descsys {

struct ConsistencyReport {
  bool consistent = false;
  double distance = 0;  // ||Y0 - Pi Y0||_2
  Vector projected_Y0;  // Pi Y0
};

struct TrajectoryRecord {
  std::vector<Vector> states;   // Y_0 .. Y_K
  Index K = 0;
  std::vector<double> residuals;  // ||F Y_{k+1} - G Y_k||_2, k = 0 .. K-1
  Vector coordinate_C;

  [[nodiscard]] double max_state_norm() const {
    double out = 0.0;
    for (const auto& s : states) out = std::max(out, s.norm());
    return out;
  }
};

namespace detail {

inline void require_length(const Vector& v, Index m, const char* what) {
  if (v.size() != m)
    throw DimensionMismatch(std::string(what) + " has length " + std::to_string(v.size()) +
                            ", expected " + std::to_string(m));
}

/// Qp Jp^k C for k = 0..K by iterating the p-dimensional coordinate.
inline std::vector<Vector> propagate(const WeierstrassDecomposition& w, const Vector& c, Index K) {
  std::vector<Vector> states;
  states.reserve(static_cast<std::size_t>(K + 1));
  Vector z = c;
  for (Index k = 0; k <= K; ++k) {
    states.push_back(w.Qp * z);
    if (k < K) z = w.Jp * z;
  }
  return states;
}

inline std::vector<double> step_residuals(const RegularSystem& sys, const std::vector<Vector>& states) {
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < states.size(); ++k)
    out.push_back((sys.F * states[k + 1] - sys.G * states[k]).norm());
  return out;
}

inline Complex int_power(Complex base, Index exponent) {
  Complex result = 1.0;
  while (exponent > 0) {
    if (exponent & 1) result *= base;
    base *= base;
    exponent >>= 1;
  }
  return result;
}

}  // namespace detail

/// Orthogonal projector onto colspan Qp; the m x m zero matrix when p = 0.
///
/// Throws RankDeficient when the columns of Qp are dependent.
inline Matrix consistency_projector(const WeierstrassDecomposition& w, const Tolerances& tol = {}) {
  const Index m = w.Q.rows();
  if (w.p == 0) return Matrix::Zero(m, m);
  if (numerical_rank(w.Qp, tol) < w.p)
    throw RankDeficient("consistency_projector: columns of Qp are linearly dependent");
  // With Qp = U R, Qp (Qp* Qp)^-1 Qp* = U U*.
  const Matrix u = w.Qp.householderQr().householderQ() * Matrix::Identity(m, w.p);
  return u * u.adjoint();
}

inline ConsistencyReport check_consistency(const Vector& y0, const WeierstrassDecomposition& w,
                                           const Tolerances& tol) {
  detail::require_length(y0, w.Q.rows(), "Y0");
  ConsistencyReport r;
  r.projected_Y0 = consistency_projector(w, tol) * y0;
  r.distance = (y0 - r.projected_Y0).norm();
  r.consistent = r.distance <= tol.residual_abs * (1.0 + y0.norm());
  return r;
}

/// Optimal solution from a possibly inconsistent Y0, with per-step residuals.
inline TrajectoryRecord optimal_trajectory(const RegularSystem& sys, const Vector& y0,
                                           const WeierstrassDecomposition& w, Index K,
                                           const Tolerances& tol) {
  detail::require_length(y0, sys.m, "Y0");
  if (K < 0) throw std::invalid_argument("optimal_trajectory: horizon must be nonnegative");
  TrajectoryRecord t;
  t.K = K;
  t.coordinate_C = least_squares_solve(w.Qp, y0, tol);
  t.states = detail::propagate(w, t.coordinate_C, K);
  t.residuals = detail::step_residuals(sys, t.states);
  return t;
}

/// Y_k = Qp Jp^k C, with Jp^k evaluated in closed form block by block:
/// (J^k)_{i,i+d} = binom(k, d) a^(k-d).
inline TrajectoryRecord closed_form_solution(const RegularSystem& sys, const Vector& c,
                                             const WeierstrassDecomposition& w, Index K) {
  detail::require_length(c, w.p, "C");
  if (K < 0) throw std::invalid_argument("closed_form_solution: horizon must be nonnegative");
  TrajectoryRecord t;
  t.K = K;
  t.coordinate_C = c;
  for (Index k = 0; k <= K; ++k) {
    Vector z = Vector::Zero(w.p);
    Index at = 0;
    for (const auto& block : w.finite_blocks) {
      for (Index i = 0; i < block.size; ++i) {
        double binom = 1.0;  // binom(k, d)
        for (Index d = 0; d < block.size - i && d <= k; ++d) {
          if (d > 0) binom = binom * static_cast<double>(k - d + 1) / static_cast<double>(d);
          z(at + i) += binom * detail::int_power(block.eigenvalue, k - d) * c(at + i + d);
        }
      }
      at += block.size;
    }
    t.states.push_back(w.Qp * z);
  }
  t.residuals = detail::step_residuals(sys, t.states);
  return t;
}

/// max_k ||F Y_{k+1} - G Y_k||_2; 0 for a single-state trajectory.
inline double audit_residuals(const RegularSystem& sys, const TrajectoryRecord& traj,
                              const Tolerances& /*tol*/ = {}) {
  double worst = 0.0;
  for (const double r : detail::step_residuals(sys, traj.states)) worst = std::max(worst, r);
  return worst;
}

/// residual_abs (1 + ||F|| + ||G||) max_k ||Y_k||.
inline double trajectory_residual_bound(const RegularSystem& sys, const TrajectoryRecord& traj,
                                        const Tolerances& tol) {
  return tol.residual_abs * (1.0 + norm2(sys.F) + norm2(sys.G)) * traj.max_state_norm();
}

}  // namespace descsys
