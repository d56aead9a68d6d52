#pragma once

#include <Eigen/Core>

#include <vector>

namespace hlsmm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Singular values at or below this fraction of the largest one are treated
/// as zero when deciding rank.
inline constexpr double kRelativeZeroTolerance = 1e-12;

/// Relative gap sigma_r - sigma_{r+1} below which a rank-r projection is
/// reported as non-unique.
inline constexpr double kProjectionTieTolerance = 1e-10;

/// Full SVD w = u * diag(sigma) * v^T with square orthonormal u (p x p) and
/// v (q x q). `gamma` holds the indices of the singular values above
/// `zero_tol`; since sigma is non-increasing it is always a prefix 0..k-1.
struct SvdFactors {
  Matrix u;
  Vector sigma;
  Matrix v;
  std::vector<Index> gamma;
  double zero_tol = 0.0;

  Index rank() const { return static_cast<Index>(gamma.size()); }

  /// Columns of u outside gamma (orthonormal basis of range(w)^perp).
  Matrix u_perp() const;
  /// Columns of v outside gamma.
  Matrix v_perp() const;
  /// Columns of u / v indexed by gamma.
  Matrix u_gamma() const;
  Matrix v_gamma() const;
};

/// Throws InvalidInput on NaN/Inf entries.
SvdFactors svd(const Matrix& w);

struct RankProjection {
  Matrix matrix;
  /// sigma_r and sigma_{r+1} are numerically tied, so the projection is
  /// set-valued and `matrix` is one member selected by the SVD ordering.
  bool ambiguous = false;
};

/// Nearest matrix of rank <= r in Frobenius norm (truncated SVD).
/// Requires 1 <= r < min(p, q).
RankProjection project_rank(const Matrix& w, Index r);

/// tr(a^T b). Throws InvalidArgument on shape mismatch.
double fro_inner(const Matrix& a, const Matrix& b);

/// Number of singular values above the relative zero tolerance.
Index numerical_rank(const Matrix& w);

double zero_tolerance(double sigma_max);

}  // namespace hlsmm
