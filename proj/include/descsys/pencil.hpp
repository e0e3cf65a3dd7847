#pragma once

// Regularity certification and Weierstrass canonical decomposition of the
// pencil sF - G:
//
//   P F Q = diag(I_p, H_q),   P G Q = diag(J_p, I_q).
//
// The decomposition is built by shift-invert through the regularity witness
// s0: the matrix W = (s0 F - G)^-1 F has eigenvalue mu = 1/(s0 - a) for every
// finite pencil eigenvalue a, and eigenvalue 0 for the eigenvalue at infinity,
// with identical Jordan block sizes.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "descsys/errors.hpp"
#include "descsys/numerics.hpp"

namespace descsys {

/// A pencil sF - G certified regular by a point where det(s0 F - G) is nonzero.
struct RegularSystem {
  Matrix F;
  Matrix G;
  Index m = 0;
  Complex certificate;            // s0
  double certificate_rcond = 0;   // sigma_min / sigma_max of s0 F - G
};

struct FiniteBlock {
  Complex eigenvalue;
  Index size = 0;
};

/// Finite elementary divisors (s - a_j)^p_j and the infinite multiplicity q.
struct SpectralSummary {
  std::vector<FiniteBlock> finite_eigs;  // one entry per Jordan block
  std::vector<Index> infinite_blocks;    // block sizes at infinity, descending
  Index nu = 0;
  Index p = 0;
  Index q = 0;
};

struct WeierstrassDecomposition {
  Matrix P;
  Matrix Q;
  Matrix Jp;
  Matrix Hq;
  Index p = 0;
  Index q = 0;
  Index nilpotency_index = 0;  // 0 when q == 0
  Matrix Qp;                   // first p columns of Q
  Matrix Qq;                   // last q columns of Q
  std::vector<FiniteBlock> finite_blocks;  // Jordan blocks of Jp, in order
  std::vector<Index> infinite_blocks;      // Jordan blocks of Hq, in order
};

struct DecompositionResiduals {
  double f_residual = 0;  // ||P F Q - diag(I_p, H_q)||
  double g_residual = 0;  // ||P G Q - diag(J_p, I_q)||
};

namespace detail {

inline constexpr std::uint64_t kProbeSeed = 0x9e3779b97f4a7c15ULL;

/// Deterministic probe points on the circle |s| = radius.
inline std::vector<Complex> probe_points(Index count, double radius) {
  std::mt19937_64 rng(kProbeSeed);
  std::vector<Complex> pts;
  for (Index i = 0; i < count; ++i) {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    pts.push_back(std::polar(radius, 2.0 * std::numbers::pi * unit));
  }
  return pts;
}

/// sigma_min(A) / sigma_max(A); 0 for a matrix with a zero singular value.
inline double reciprocal_condition(const Matrix& a) {
  const Eigen::VectorXd sv = singular_values(a);
  if (sv(0) == 0.0) return 0.0;
  return sv(sv.size() - 1) / sv(0);
}

/// Strictly upper shift of order n (the nilpotent Jordan block).
inline Matrix shift_matrix(Index n) { return jordan_block(0.0, n); }

/// Columns N^(k-1) e_k, ..., N e_k, e_k: the Jordan chain of a nilpotent upper
/// triangular Toeplitz matrix whose superdiagonal is nonzero.
inline Matrix toeplitz_chain(const Matrix& nilpotent) {
  const Index k = nilpotent.rows();
  Matrix x(k, k);
  x.col(k - 1) = Vector::Unit(k, k - 1);
  for (Index i = k - 1; i > 0; --i) x.col(i - 1) = nilpotent * x.col(i);
  return x;
}

struct ShiftInvert {
  JordanStructure structure;         // of W = (s0 F - G)^-1 F
  std::vector<bool> at_infinity;     // per block of `structure`
};

inline ShiftInvert shift_invert(const RegularSystem& sys, const Tolerances& tol) {
  const Matrix pencil = sys.certificate * sys.F - sys.G;
  const Matrix w = pencil.partialPivLu().solve(sys.F);
  ShiftInvert out;
  const double zero_radius = tol.rank_rel * norm2(w);
  // cluster_abs is a radius for pencil eigenvalues a; near mu, |da| = |dmu| / |mu|^2.
  double smallest = 1.0;
  for (const Complex mu : Eigen::ComplexEigenSolver<Matrix>(w, false).eigenvalues())
    if (std::abs(mu) > zero_radius) smallest = std::min(smallest, std::abs(mu));
  Tolerances local = tol;
  smallest = std::max(smallest, 1e-4);
  local.cluster_abs = tol.cluster_abs * smallest * smallest;
  out.structure = jordan_structure(w, local);
  for (const Complex mu : out.structure.eigenvalues) out.at_infinity.push_back(std::abs(mu) <= zero_radius);
  return out;
}

}  // namespace detail

/// Certifies that det(sF - G) is not identically zero.
///
/// det(sF - G) has degree at most m, so sF - G is tested at m + 1 deterministic
/// points on the circle of radius 1 + ||G|| / (rank_rel + ||F||). The first
/// point where sF - G has full numerical rank (sigma_min > rank_rel sigma_max)
/// becomes the certificate.
inline RegularSystem certify_regularity(const Matrix& f, const Matrix& g, const Tolerances& tol) {
  tol.validate();
  if (f.rows() != f.cols() || g.rows() != g.cols() || f.rows() != g.rows() || f.rows() == 0)
    throw DimensionMismatch("F is " + std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
                            ", G is " + std::to_string(g.rows()) + "x" + std::to_string(g.cols()) +
                            "; expected equal nonempty square matrices");
  if (!all_finite(f) || !all_finite(g)) throw std::invalid_argument("F and G must be finite");

  const Index m = f.rows();
  const double radius = 1.0 + norm2(g) / (tol.rank_rel + norm2(f));
  std::vector<FailedProbe> failed;
  for (const Complex s : detail::probe_points(m + 1, radius)) {
    const double ratio = detail::reciprocal_condition(s * f - g);
    if (ratio > tol.rank_rel) return RegularSystem{f, g, m, s, ratio};
    failed.push_back({s, ratio});
  }
  throw SingularPencil("sF - G is numerically singular at all " + std::to_string(m + 1) +
                           " probe points; the pencil is not regular",
                       std::move(failed));
}

/// Finite eigenvalues with their Jordan block sizes, and the infinite multiplicity.
inline SpectralSummary finite_spectrum(const RegularSystem& sys, const Tolerances& tol) {
  const auto si = detail::shift_invert(sys, tol);
  SpectralSummary out;
  for (std::size_t b = 0; b < si.structure.eigenvalues.size(); ++b) {
    const Index size = si.structure.block_sizes[b];
    if (si.at_infinity[b]) {
      out.infinite_blocks.push_back(size);
      out.q += size;
    } else {
      out.finite_eigs.push_back({sys.certificate - 1.0 / si.structure.eigenvalues[b], size});
      out.p += size;
    }
  }
  detail::sort_blocks(
      out.finite_eigs, tol.cluster_abs, [](const FiniteBlock& b) { return b.eigenvalue; },
      [](const FiniteBlock& b) { return b.size; });
  std::sort(out.infinite_blocks.begin(), out.infinite_blocks.end(), std::greater<>());
  out.nu = static_cast<Index>(out.finite_eigs.size());
  return out;
}

/// ||P F Q - diag(I_p, H_q)|| and ||P G Q - diag(J_p, I_q)||.
inline DecompositionResiduals verify_decomposition(const RegularSystem& sys,
                                                   const WeierstrassDecomposition& w,
                                                   const Tolerances& /*tol*/ = {}) {
  if (w.P.rows() != sys.m || w.Q.rows() != sys.m || w.p + w.q != sys.m)
    throw DimensionMismatch("verify_decomposition: decomposition does not match the system");
  const Matrix ef = block_diagonal(Matrix::Identity(w.p, w.p), w.Hq);
  const Matrix eg = block_diagonal(w.Jp, Matrix::Identity(w.q, w.q));
  return {norm2(w.P * sys.F * w.Q - ef), norm2(w.P * sys.G * w.Q - eg)};
}

/// Acceptance bound for the F residual: residual_abs (1 + ||F||) ||P|| ||Q||.
inline double f_residual_bound(const RegularSystem& sys, const WeierstrassDecomposition& w,
                               const Tolerances& tol) {
  return tol.residual_abs * (1.0 + norm2(sys.F)) * norm2(w.P) * norm2(w.Q);
}

inline double g_residual_bound(const RegularSystem& sys, const WeierstrassDecomposition& w,
                               const Tolerances& tol) {
  return tol.residual_abs * (1.0 + norm2(sys.G)) * norm2(w.P) * norm2(w.Q);
}

/// Weierstrass canonical decomposition of a regular pencil.
///
/// Q collects the Jordan chains of W, re-chained per block so that the finite
/// part becomes a Jordan matrix in the pencil eigenvalue a = s0 - 1/mu and the
/// infinite part a nilpotent Jordan matrix. P is then the unique matrix with
/// P [F Qp | G Qq] = I. Throws ReconstructionFailure when either residual
/// exceeds its bound.
inline WeierstrassDecomposition weierstrass_decompose(const RegularSystem& sys,
                                                      const Tolerances& tol) {
  const auto si = detail::shift_invert(sys, tol);
  const auto& js = si.structure;
  const Index m = sys.m;
  const Complex s0 = sys.certificate;

  struct Piece {
    Complex eigenvalue;  // pencil eigenvalue (unused at infinity)
    Index size;
    Matrix columns;
  };
  std::vector<Piece> finite;
  std::vector<Piece> infinite;
  for (std::size_t b = 0; b < js.eigenvalues.size(); ++b) {
    const Index k = js.block_sizes[b];
    const Matrix chain = js.transform.middleCols(js.offset(b), k);
    const Matrix shift = detail::shift_matrix(k);
    if (si.at_infinity[b]) {
      // (s0 S - I)^-1 S is nilpotent with the same block structure as S.
      const Matrix scaled = (s0 * shift - Matrix::Identity(k, k)).partialPivLu().solve(shift);
      infinite.push_back({0.0, k, chain * detail::toeplitz_chain(scaled)});
    } else {
      const Complex mu = js.eigenvalues[b];
      const Complex a = s0 - 1.0 / mu;
      const Matrix jinv = jordan_block(mu, k)
                              .triangularView<Eigen::Upper>()
                              .solve(Matrix::Identity(k, k));
      // s0 I - Jmu^-1 - a I: strictly upper triangular Toeplitz, superdiagonal 1/mu^2.
      const Matrix nil = s0 * Matrix::Identity(k, k) - jinv - a * Matrix::Identity(k, k);
      Matrix strict = nil.triangularView<Eigen::StrictlyUpper>();
      finite.push_back({a, k, chain * detail::toeplitz_chain(strict)});
    }
  }
  detail::sort_blocks(
      finite, tol.cluster_abs, [](const Piece& x) { return x.eigenvalue; },
      [](const Piece& x) { return x.size; });
  std::stable_sort(infinite.begin(), infinite.end(),
                   [](const Piece& x, const Piece& y) { return x.size > y.size; });

  WeierstrassDecomposition out;
  for (const auto& f : finite) {
    out.p += f.size;
    out.finite_blocks.push_back({f.eigenvalue, f.size});
  }
  for (const auto& h : infinite) {
    out.q += h.size;
    out.infinite_blocks.push_back(h.size);
    out.nilpotency_index = std::max(out.nilpotency_index, h.size);
  }

  out.Q.resize(m, m);
  out.Jp = Matrix::Zero(out.p, out.p);
  out.Hq = Matrix::Zero(out.q, out.q);
  Index at = 0;
  auto place = [&](const Piece& piece) {
    Matrix cols = piece.columns;
    double biggest = 0.0;
    for (Index c = 0; c < cols.cols(); ++c) biggest = std::max(biggest, cols.col(c).norm());
    if (biggest > 0.0) cols /= biggest;
    cols *= detail::phase_to_real(cols.col(0));
    out.Q.middleCols(at, piece.size) = cols;
    at += piece.size;
  };
  Index jat = 0;
  for (const auto& f : finite) {
    place(f);
    out.Jp.block(jat, jat, f.size, f.size) = jordan_block(f.eigenvalue, f.size);
    jat += f.size;
  }
  Index hat = 0;
  for (const auto& h : infinite) {
    place(h);
    out.Hq.block(hat, hat, h.size, h.size) = detail::shift_matrix(h.size);
    hat += h.size;
  }
  out.Qp = out.Q.leftCols(out.p);
  out.Qq = out.Q.rightCols(out.q);

  if (numerical_rank(out.Q, tol) < m)
    throw ReconstructionFailure("weierstrass_decompose: Q is numerically singular");
  Matrix stacked(m, m);
  stacked << sys.F * out.Qp, sys.G * out.Qq;
  if (numerical_rank(stacked, tol) < m)
    throw ReconstructionFailure("weierstrass_decompose: [F Qp | G Qq] is numerically singular");
  out.P = stacked.partialPivLu().inverse();

  const auto res = verify_decomposition(sys, out, tol);
  if (res.f_residual > f_residual_bound(sys, out, tol) ||
      res.g_residual > g_residual_bound(sys, out, tol))
    throw ReconstructionFailure("weierstrass_decompose: residuals (" +
                                std::to_string(res.f_residual) + ", " +
                                std::to_string(res.g_residual) + ") exceed tolerance");
  return out;
}

}  // namespace descsys
