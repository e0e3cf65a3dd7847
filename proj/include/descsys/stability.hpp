#pragma once

// Equilibrium sets and stability of the optimal solution.
//
// Stability is decided structurally from the Jordan data of Jp: all finite
// eigenvalues strictly inside the unit disc gives asymptotic stability; Jp
// power-bounded (eigenvalues in the closed disc, trivial blocks on the
// circle) gives Lyapunov stability. A finite-horizon sup ||Jp^k||_2 is
// reported as evidence only.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string_view>

#include "descsys/numerics.hpp"
#include "descsys/pencil.hpp"
#include "descsys/solution.hpp"

namespace descsys {

enum class Stability { AsymptoticallyStable, LyapunovStable, Unstable };

constexpr std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::AsymptoticallyStable: return "AsymptoticallyStable";
    case Stability::LyapunovStable: return "LyapunovStable";
    case Stability::Unstable: return "Unstable";
  }
  return "Unknown";
}

/// E = N_r(F - G) intersected with colspan Qp; {0} unless 1 is a finite eigenvalue.
struct EquilibriumSet {
  Matrix basis;  // m x d, orthonormal columns
  Index dimension = 0;
  bool one_is_eigenvalue = false;
};

struct StabilityVerdict {
  Stability classification = Stability::Unstable;
  double spectral_radius = 0;
  bool boundary_blocks_trivial = true;  // every block with |a| = 1 has size 1
  double power_bound_estimate = 0;      // sup_{k <= K_probe} ||Jp^k||_2
  Index evidence_horizon = 0;
};

struct PowerBound {
  bool bounded = false;
  double c_estimate = 0;
};

inline constexpr Index kDefaultProbeHorizon = 1000;

namespace detail {

inline bool on_unit_circle(Complex a, const Tolerances& tol) {
  return std::abs(std::abs(a) - 1.0) <= tol.cluster_abs;
}

/// sup_{0 <= k <= horizon} ||Jp^k||_2, using ||Jp^k|| = max over blocks.
/// Returns +inf once a power overflows past 1e300.
inline double power_norm_sup(const WeierstrassDecomposition& w, Index horizon) {
  double sup = 0.0;
  for (const auto& block : w.finite_blocks) {
    const Matrix j = jordan_block(block.eigenvalue, block.size);
    Matrix power = Matrix::Identity(block.size, block.size);
    for (Index k = 0; k <= horizon; ++k) {
      const double n = norm2(power);
      if (!std::isfinite(n) || n > 1e300) return std::numeric_limits<double>::infinity();
      sup = std::max(sup, n);
      if (k < horizon) power = j * power;
    }
  }
  return sup;
}

}  // namespace detail

inline EquilibriumSet equilibrium_set(const RegularSystem& sys, const WeierstrassDecomposition& w,
                                      const Tolerances& tol) {
  EquilibriumSet e;
  const Index m = sys.m;
  e.basis = Matrix(m, 0);
  e.one_is_eigenvalue = std::any_of(w.finite_blocks.begin(), w.finite_blocks.end(),
                                    [&](const FiniteBlock& b) {
                                      return std::abs(b.eigenvalue - 1.0) <= tol.cluster_abs;
                                    });
  if (!e.one_is_eigenvalue) return e;

  Matrix stacked(2 * m, m);
  stacked << sys.F - sys.G, Matrix::Identity(m, m) - consistency_projector(w, tol);
  const double top = norm2(stacked);
  auto ns = detail::null_space(stacked, tol.rank_rel * top);
  e.basis = std::move(ns.basis);
  for (Index c = 0; c < e.basis.cols(); ++c) e.basis.col(c) *= detail::phase_to_real(e.basis.col(c));
  e.dimension = e.basis.cols();
  return e;
}

/// Whether sup_k ||Jp^k|| is finite, decided from the Jordan blocks of Jp.
inline PowerBound is_power_bounded(const WeierstrassDecomposition& w, const Tolerances& tol,
                                   Index probe_horizon = kDefaultProbeHorizon) {
  PowerBound out;
  out.bounded = std::all_of(w.finite_blocks.begin(), w.finite_blocks.end(), [&](const FiniteBlock& b) {
    if (std::abs(b.eigenvalue) < 1.0 - tol.cluster_abs) return true;
    return detail::on_unit_circle(b.eigenvalue, tol) && b.size == 1;
  });
  out.c_estimate = detail::power_norm_sup(w, probe_horizon);
  return out;
}

inline StabilityVerdict classify_stability(const RegularSystem& /*sys*/,
                                           const WeierstrassDecomposition& w,
                                           const SpectralSummary& spec, const Tolerances& tol,
                                           Index probe_horizon = kDefaultProbeHorizon) {
  StabilityVerdict v;
  for (const auto& b : spec.finite_eigs) v.spectral_radius = std::max(v.spectral_radius, std::abs(b.eigenvalue));
  v.boundary_blocks_trivial = std::all_of(w.finite_blocks.begin(), w.finite_blocks.end(),
                                          [&](const FiniteBlock& b) {
                                            return !detail::on_unit_circle(b.eigenvalue, tol) || b.size == 1;
                                          });
  const PowerBound bound = is_power_bounded(w, tol, probe_horizon);
  v.power_bound_estimate = bound.c_estimate;
  v.evidence_horizon = probe_horizon;
  // p = 0 leaves the optimal solution identically zero: asymptotically stable.
  if (v.spectral_radius < 1.0 - tol.cluster_abs)
    v.classification = Stability::AsymptoticallyStable;
  else if (bound.bounded)
    v.classification = Stability::LyapunovStable;
  else
    v.classification = Stability::Unstable;
  return v;
}

/// Empirical cross-check: ||Y_K|| <= fraction (1 + ||Y_0||) along the optimal trajectory.
inline bool empirical_decay_check(const WeierstrassDecomposition& w, const Vector& y0, Index K,
                                  const Tolerances& tol, double fraction = 1e-6) {
  detail::require_length(y0, w.Q.rows(), "Y0");
  if (K < 1) throw std::invalid_argument("empirical_decay_check: horizon must be at least 1");
  const Vector c = least_squares_solve(w.Qp, y0, tol);
  const auto states = detail::propagate(w, c, K);
  return states.back().norm() <= fraction * (1.0 + states.front().norm());
}

}  // namespace descsys
