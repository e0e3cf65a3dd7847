#pragma once

// Dense complex linear-algebra kernel: rank decisions, orthonormal bases,
// least squares and numerical Jordan structure.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "descsys/errors.hpp"

namespace descsys {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Numerical thresholds shared by every decision in the library.
struct Tolerances {
  double rank_rel = 1e-10;      ///< relative singular-value cutoff
  double cluster_abs = 1e-8;    ///< eigenvalue clustering radius
  double residual_abs = 1e-8;   ///< reconstruction / residual acceptance

  /// Throws std::invalid_argument unless all values are positive and rank_rel < 1.
  void validate() const {
    auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!ok(rank_rel) || rank_rel >= 1.0)
      throw std::invalid_argument("rank_rel must lie in (0, 1)");
    if (!ok(cluster_abs)) throw std::invalid_argument("cluster_abs must be positive");
    if (!ok(residual_abs)) throw std::invalid_argument("residual_abs must be positive");
  }
};

inline bool all_finite(const Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

/// True when every imaginary part is at most `tol` in magnitude.
inline bool is_real(const Matrix& m, double tol) {
  return m.size() == 0 || m.imag().cwiseAbs().maxCoeff() <= tol;
}

inline Matrix to_complex(const Eigen::MatrixXd& m) { return m.cast<Complex>(); }

inline Eigen::VectorXd singular_values(const Matrix& m) {
  if (m.size() == 0) return Eigen::VectorXd(0);
  return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

/// Spectral (operator 2-) norm; 0 for empty matrices.
inline double norm2(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

inline Matrix block_diagonal(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

/// Upper Jordan block of order n: eigenvalue on the diagonal, ones above it.
inline Matrix jordan_block(Complex eigenvalue, Index n) {
  Matrix b = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    b(i, i) = eigenvalue;
    if (i + 1 < n) b(i, i + 1) = 1.0;
  }
  return b;
}

namespace detail {

struct RankDecision {
  Index rank = 0;
  bool ambiguous = false;  // a singular value sits within a factor 10 of the cutoff
};

inline RankDecision decide_rank(const Eigen::VectorXd& sv, double cutoff) {
  RankDecision d;
  const Index n = sv.size();
  while (d.rank < n && sv(d.rank) > cutoff) ++d.rank;
  if (cutoff > 0.0) {
    if (d.rank > 0 && sv(d.rank - 1) < 10.0 * cutoff) d.ambiguous = true;
    if (d.rank < n && sv(d.rank) > cutoff / 10.0) d.ambiguous = true;
  }
  return d;
}

struct NullSpace {
  Matrix basis;  // orthonormal columns
  RankDecision decision;
};

/// Orthonormal basis of the right null space of m; singular values <= cutoff count as zero.
inline NullSpace null_space(const Matrix& m, double cutoff) {
  NullSpace out;
  const Index n = m.cols();
  if (m.rows() == 0) {
    out.basis = Matrix::Identity(n, n);
    return out;
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  out.decision = decide_rank(svd.singularValues(), cutoff);
  out.basis = svd.matrixV().rightCols(n - out.decision.rank);
  return out;
}

/// Top-k left singular vectors: an orthonormal basis for the dominant k-dim range of m.
inline Matrix dominant_range(const Matrix& m, Index k) {
  if (k == 0 || m.cols() == 0) return Matrix(m.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  return svd.matrixU().leftCols(k);
}

/// Multiplies v by a unit phase so that its largest-magnitude entry is real and positive.
inline Complex phase_to_real(const Vector& v) {
  Index imax = 0;
  if (v.size() == 0) return 1.0;
  v.cwiseAbs().maxCoeff(&imax);
  const double mag = std::abs(v(imax));
  if (mag == 0.0) return 1.0;
  return std::conj(v(imax)) / mag;
}

}  // namespace detail

/// Number of singular values above rank_rel times the largest one.
inline Index numerical_rank(const Matrix& m, const Tolerances& tol) {
  const Eigen::VectorXd sv = singular_values(m);
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  return detail::decide_rank(sv, tol.rank_rel * sv(0)).rank;
}

/// Orthonormal columns spanning range(m); as many columns as numerical_rank(m).
inline Matrix orthonormal_range_basis(const Matrix& m, const Tolerances& tol) {
  if (m.size() == 0) return Matrix(m.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const Index r = sv(0) == 0.0 ? 0 : detail::decide_rank(sv, tol.rank_rel * sv(0)).rank;
  Matrix basis = svd.matrixU().leftCols(r);
  for (Index j = 0; j < r; ++j) basis.col(j) *= detail::phase_to_real(basis.col(j));
  return basis;
}

/// Minimizer of ||A x - b||_2 for A with full column rank.
///
/// Throws RankDeficient when A's columns are dependent at tol.rank_rel; the
/// caller is expected to reduce the basis first.
inline Matrix least_squares_solve(const Matrix& a, const Matrix& b, const Tolerances& tol = {}) {
  if (a.rows() != b.rows())
    throw DimensionMismatch("least_squares_solve: A has " + std::to_string(a.rows()) +
                            " rows but b has " + std::to_string(b.rows()));
  if (a.cols() == 0) return Matrix(0, b.cols());
  if (a.rows() < a.cols() || numerical_rank(a, tol) < a.cols())
    throw RankDeficient("least_squares_solve: columns of A are linearly dependent");
  return a.householderQr().solve(b);
}

/// Jordan data of a square matrix M: M * transform = transform * J, J block diagonal.
struct JordanStructure {
  std::vector<Complex> eigenvalues;  // one per block
  std::vector<Index> block_sizes;    // aligned with eigenvalues
  Matrix transform;                  // columns are chained generalized eigenvectors

  [[nodiscard]] Index order() const {
    return std::accumulate(block_sizes.begin(), block_sizes.end(), Index{0});
  }

  /// Column offset of block i inside transform.
  [[nodiscard]] Index offset(std::size_t i) const {
    return std::accumulate(block_sizes.begin(), block_sizes.begin() + static_cast<long>(i),
                           Index{0});
  }

  [[nodiscard]] Matrix jordan_matrix() const {
    const Index n = order();
    Matrix j = Matrix::Zero(n, n);
    Index at = 0;
    for (std::size_t b = 0; b < block_sizes.size(); ++b) {
      j.block(at, at, block_sizes[b], block_sizes[b]) = jordan_block(eigenvalues[b], block_sizes[b]);
      at += block_sizes[b];
    }
    return j;
  }
};

namespace detail {

/// M = unitary * triangular * unitary^*, triangular upper triangular.
struct SchurForm {
  Matrix unitary;
  Matrix triangular;
};

inline SchurForm schur_form(const Matrix& m) {
  Eigen::ComplexSchur<Matrix> schur(m);
  if (schur.info() != Eigen::Success)
    throw IllConditionedStructure("complex Schur decomposition did not converge");
  return {schur.matrixU(), schur.matrixT()};
}

/// Exchanges diagonal entries k and k+1 with a unitary rotation.
inline void swap_adjacent(SchurForm& s, Index k) {
  Matrix& t = s.triangular;
  const Complex a = t(k, k);
  const Complex c = t(k + 1, k + 1);
  // Eigenvector of the 2x2 block for eigenvalue c becomes the first basis vector.
  const Complex x1 = t(k, k + 1);
  const Complex x2 = c - a;
  const double len = std::hypot(std::abs(x1), std::abs(x2));
  if (len == 0.0) return;
  Eigen::Matrix2cd z;
  z << x1 / len, -std::conj(x2) / len, x2 / len, std::conj(x1) / len;
  t.middleRows(k, 2) = z.adjoint() * t.middleRows(k, 2);
  t.middleCols(k, 2) = t.middleCols(k, 2) * z;
  s.unitary.middleCols(k, 2) = s.unitary.middleCols(k, 2) * z;
  t(k + 1, k) = 0.0;
  t(k, k) = c;
  t(k + 1, k + 1) = a;
}

/// Reorders the Schur form so the diagonal entries at `positions` come first,
/// keeping their relative order.
inline SchurForm move_to_front(SchurForm s, const std::vector<Index>& positions) {
  const Index n = s.triangular.rows();
  std::vector<bool> selected(static_cast<std::size_t>(n), false);
  for (Index i : positions) selected[static_cast<std::size_t>(i)] = true;
  Index slot = 0;
  for (Index pos = 0; pos < n; ++pos) {
    if (!selected[static_cast<std::size_t>(pos)]) continue;
    for (Index k = pos; k > slot; --k) {
      swap_adjacent(s, k - 1);
      std::swap(selected[static_cast<std::size_t>(k - 1)], selected[static_cast<std::size_t>(k)]);
    }
    ++slot;
  }
  return s;
}

/// dim ker (B - aI)^j for j = 1, 2, ... until the dimension reaches `target`.
struct KernelSequence {
  std::vector<Index> nullity;  // nullity[j-1] = dim ker (B - aI)^j
  std::vector<Matrix> bases;   // orthonormal kernel bases (when requested)
  bool ambiguous = false;
};

/// `scale` is the norm of the matrix B was deflated from; rounding in B - aI is relative to it.
inline KernelSequence kernel_sequence(const Matrix& block, Complex a, Index target, double rank_rel,
                                      double scale, bool keep_bases) {
  KernelSequence seq;
  const Index n = block.rows();
  const Matrix shifted = block - a * Matrix::Identity(n, n);
  const double base = norm2(shifted);
  Matrix power = Matrix::Identity(n, n);
  for (Index j = 1; j <= target; ++j) {
    if (base == 0.0) {
      seq.nullity.push_back(n);
      if (keep_bases) seq.bases.push_back(Matrix::Identity(n, n));
      break;
    }
    power = power * shifted;
    // Each further factor of (B - aI) scales the rounding by at most ||B - aI||.
    const double cutoff = rank_rel * scale * std::pow(base, static_cast<double>(j - 1));
    NullSpace ns = null_space(power, cutoff);
    seq.ambiguous = seq.ambiguous || ns.decision.ambiguous;
    seq.nullity.push_back(ns.basis.cols());
    if (keep_bases) seq.bases.push_back(std::move(ns.basis));
    if (seq.nullity.back() >= target) break;
  }
  return seq;
}

/// Whether a nullity sequence is the rank profile of a single eigenvalue of multiplicity `size`.
inline bool consistent_pattern(const std::vector<Index>& d, Index size) {
  if (d.empty() || d.front() < 1 || d.back() != size) return false;
  Index previous_step = d.front();
  for (std::size_t j = 1; j < d.size(); ++j) {
    const Index step = d[j] - d[j - 1];
    if (step < 1 || step > previous_step) return false;
    previous_step = step;
  }
  return true;
}

struct EigenCluster {
  std::vector<Index> members;  // indices into the computed eigenvalue list
  Complex center;              // arithmetic mean of the members
};

inline Complex cluster_mean(const Eigen::VectorXcd& eig, const std::vector<Index>& members) {
  Complex sum = 0.0;
  for (Index i : members) sum += eig(i);
  return sum / static_cast<double>(members.size());
}

/// Single-linkage components of `points` at radius r.
inline std::vector<std::vector<std::size_t>> linkage_components(const std::vector<Complex>& points,
                                                                double r) {
  const std::size_t n = points.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(points[i] - points[j]) <= r) parent[find(i)] = find(j);
  std::vector<std::vector<std::size_t>> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& g : groups)
    if (!g.empty()) out.push_back(std::move(g));
  return out;
}

/// Groups computed eigenvalues into clusters that each represent one exact eigenvalue.
///
/// Eigenvalues within cluster_abs always merge. A defective eigenvalue splits
/// under rounding by roughly eps^(1/k) for a block of order k, so wider groups
/// are also tried on a growing radius; such a group is accepted only when the
/// kernels of (M - aI)^j at its mean form a valid Jordan profile.
inline std::vector<EigenCluster> cluster_eigenvalues(const SchurForm& schur, double scale,
                                                     const Tolerances& tol) {
  const Eigen::VectorXcd eig = schur.triangular.diagonal();
  std::vector<EigenCluster> clusters;
  {
    std::vector<Complex> pts(eig.data(), eig.data() + eig.size());
    for (const auto& comp : linkage_components(pts, tol.cluster_abs)) {
      EigenCluster c;
      for (std::size_t i : comp) c.members.push_back(static_cast<Index>(i));
      c.center = cluster_mean(eig, c.members);
      clusters.push_back(std::move(c));
    }
  }

  const double widest = std::max(tol.cluster_abs, 1e-2 * std::max(scale, 1.0));
  for (double r = 3.0 * std::max(tol.cluster_abs, std::numeric_limits<double>::min()); r <= 3.0 * widest;
       r *= 3.0) {
    std::vector<Complex> centers;
    for (const auto& c : clusters) centers.push_back(c.center);
    std::vector<EigenCluster> next;
    for (const auto& comp : linkage_components(centers, r)) {
      if (comp.size() == 1) {
        next.push_back(clusters[comp.front()]);
        continue;
      }
      EigenCluster merged;
      for (std::size_t ci : comp)
        merged.members.insert(merged.members.end(), clusters[ci].members.begin(),
                              clusters[ci].members.end());
      merged.center = cluster_mean(eig, merged.members);
      const auto size = static_cast<Index>(merged.members.size());
      const SchurForm front = move_to_front(schur, merged.members);
      const auto seq = kernel_sequence(front.triangular.topLeftCorner(size, size), merged.center, size,
                                       tol.rank_rel, scale, false);
      if (consistent_pattern(seq.nullity, size)) {
        next.push_back(std::move(merged));
      } else {
        for (std::size_t ci : comp) next.push_back(clusters[ci]);
      }
    }
    clusters = std::move(next);
  }
  return clusters;
}

struct Chain {
  Complex eigenvalue;
  Matrix vectors;  // columns t_1 (eigenvector) .. t_len
};

/// Jordan chains of one eigenvalue from the kernel bases of (M - aI)^j.
inline std::vector<Chain> build_chains(const Matrix& shifted, Complex a, const KernelSequence& seq) {
  const auto& d = seq.nullity;
  const Index depth = static_cast<Index>(d.size());
  auto dim = [&](Index j) { return j <= 0 ? Index{0} : d[static_cast<std::size_t>(j - 1)]; };

  struct Start {
    Vector v;
    Index length;
  };
  std::vector<Start> starts;
  for (Index j = depth; j >= 1; --j) {
    const Index exactly_j = (dim(j) - dim(j - 1)) - (j < depth ? dim(j + 1) - dim(j) : 0);
    if (exactly_j <= 0) continue;
    const Matrix& kernel = seq.bases[static_cast<std::size_t>(j - 1)];

    // Vectors already accounted for at level j: ker (M-aI)^(j-1) plus images of longer chains.
    std::vector<Vector> taken;
    if (j > 1) {
      const Matrix& lower = seq.bases[static_cast<std::size_t>(j - 2)];
      for (Index c = 0; c < lower.cols(); ++c) taken.push_back(lower.col(c));
    }
    for (const auto& s : starts) {
      Vector img = s.v;
      for (Index p = 0; p < s.length - j; ++p) img = shifted * img;
      taken.push_back(img);
    }
    Matrix complement = kernel;
    if (!taken.empty()) {
      Matrix w(shifted.rows(), static_cast<Index>(taken.size()));
      for (std::size_t c = 0; c < taken.size(); ++c) w.col(static_cast<Index>(c)) = taken[c];
      const Matrix qw = dominant_range(w, std::min<Index>(w.cols(), dim(j) - exactly_j));
      complement = kernel - qw * (qw.adjoint() * kernel);
    }
    const Matrix fresh = dominant_range(complement, exactly_j);
    for (Index c = 0; c < fresh.cols(); ++c) starts.push_back({fresh.col(c), j});
  }

  std::vector<Chain> chains;
  for (const auto& s : starts) {
    Matrix t(shifted.rows(), s.length);
    t.col(s.length - 1) = s.v;
    for (Index i = s.length - 1; i > 0; --i) t.col(i - 1) = shifted * t.col(i);
    double biggest = 0.0;
    for (Index i = 0; i < s.length; ++i) biggest = std::max(biggest, t.col(i).norm());
    if (biggest > 0.0) t /= biggest;
    t *= phase_to_real(t.col(0));
    chains.push_back({a, std::move(t)});
  }
  return chains;
}

/// Sorts blocks by modulus (descending), then argument, then size (descending).
///
/// Moduli within cluster_abs of each other are treated as equal so that
/// conjugate pairs order by argument.
template <typename Block, typename GetEig, typename GetSize>
void sort_blocks(std::vector<Block>& blocks, double cluster_abs, GetEig eig_of, GetSize size_of) {
  std::stable_sort(blocks.begin(), blocks.end(), [&](const Block& x, const Block& y) {
    return std::abs(eig_of(x)) > std::abs(eig_of(y));
  });
  auto clean_arg = [&](Complex z) {
    if (std::abs(z.imag()) <= cluster_abs) z = Complex(z.real(), 0.0);
    return std::arg(z);
  };
  std::size_t begin = 0;
  while (begin < blocks.size()) {
    std::size_t end = begin + 1;
    while (end < blocks.size() &&
           std::abs(eig_of(blocks[end - 1])) - std::abs(eig_of(blocks[end])) <= cluster_abs)
      ++end;
    std::stable_sort(blocks.begin() + static_cast<long>(begin), blocks.begin() + static_cast<long>(end),
                     [&](const Block& x, const Block& y) {
                       const double ax = clean_arg(eig_of(x));
                       const double ay = clean_arg(eig_of(y));
                       if (std::abs(ax - ay) > cluster_abs) return ax < ay;
                       return size_of(x) > size_of(y);
                     });
    begin = end;
  }
}

}  // namespace detail

/// Numerical Jordan structure of a square matrix.
///
/// Eigenvalues are grouped into clusters represented by their mean; block
/// sizes come from the kernel dimensions of (M - aI)^j. Throws
/// IllConditionedStructure when one of those rank decisions is within a factor
/// 10 of the cutoff, when the profile is not a valid Jordan profile, or when
/// the reconstruction residual exceeds residual_abs * ||M||.
inline JordanStructure jordan_structure(const Matrix& m, const Tolerances& tol) {
  if (m.rows() != m.cols())
    throw DimensionMismatch("jordan_structure: matrix is " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
  const Index n = m.rows();
  JordanStructure out;
  out.transform = Matrix(n, 0);
  if (n == 0) return out;

  const double scale = norm2(m);
  const detail::SchurForm schur = detail::schur_form(m);
  const auto clusters = detail::cluster_eigenvalues(schur, scale, tol);

  std::vector<detail::Chain> chains;
  for (const auto& c : clusters) {
    const Index size = static_cast<Index>(c.members.size());
    // Deflate: the leading block of the reordered Schur form carries only this cluster.
    const detail::SchurForm front = detail::move_to_front(schur, c.members);
    const Matrix block = front.triangular.topLeftCorner(size, size);
    const auto seq = detail::kernel_sequence(block, c.center, size, tol.rank_rel, scale, true);
    if (seq.ambiguous)
      throw IllConditionedStructure("jordan_structure: rank decision within a factor 10 of the "
                                    "cutoff near eigenvalue (" +
                                    std::to_string(c.center.real()) + ", " +
                                    std::to_string(c.center.imag()) + ")");
    if (!detail::consistent_pattern(seq.nullity, size))
      throw IllConditionedStructure("jordan_structure: kernel dimensions do not match the "
                                    "algebraic multiplicity " + std::to_string(size));
    const Matrix shifted = block - c.center * Matrix::Identity(size, size);
    auto found = detail::build_chains(shifted, c.center, seq);
    for (auto& chain : found) {
      chain.vectors = front.unitary.leftCols(size) * chain.vectors;
      chain.vectors *= detail::phase_to_real(chain.vectors.col(0));
    }
    chains.insert(chains.end(), std::make_move_iterator(found.begin()),
                  std::make_move_iterator(found.end()));
  }
  detail::sort_blocks(
      chains, tol.cluster_abs, [](const detail::Chain& c) { return c.eigenvalue; },
      [](const detail::Chain& c) { return c.vectors.cols(); });

  out.transform.resize(n, n);
  Index at = 0;
  for (const auto& c : chains) {
    out.eigenvalues.push_back(c.eigenvalue);
    out.block_sizes.push_back(c.vectors.cols());
    out.transform.middleCols(at, c.vectors.cols()) = c.vectors;
    at += c.vectors.cols();
  }

  if (numerical_rank(out.transform, tol) < n)
    throw IllConditionedStructure("jordan_structure: generalized eigenvectors are dependent");
  const double residual = norm2(m * out.transform - out.transform * out.jordan_matrix());
  if (residual > tol.residual_abs * norm2(m))
    throw IllConditionedStructure("jordan_structure: reconstruction residual " +
                                  std::to_string(residual) + " exceeds tolerance");
  return out;
}

}  // namespace descsys
