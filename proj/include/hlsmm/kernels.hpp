#pragma once

// Per-sample data-parallel kernels used by the solver.
//
// Each kernel has a plain serial reference (`*_reference`) that follows the
// textbook loop order, and an OpenMP version. The OpenMP reductions split the
// samples into fixed-size chunks, reduce each chunk serially and then add the
// chunk partials in chunk order, so their result is bit-identical for every
// thread count. The reference versions are kept for tests and benchmarks.

#include "hlsmm/linalg.hpp"
#include "hlsmm/model.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace hlsmm {

/// Samples packed as an m x (p*q) row-major array; row i is X_i flattened in
/// the same (column-major) order Eigen uses for W, so ⟨W, X_i⟩ is a plain dot
/// product of row i with the storage of W.
class DesignMatrix {
 public:
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  explicit DesignMatrix(const Dataset& data);

  Index samples() const { return features_.rows(); }
  Index features() const { return features_.cols(); }
  Index p() const { return p_; }
  Index q() const { return q_; }
  const RowMajor& rows() const { return features_; }
  const Vector& labels() const { return labels_; }
  /// sum_i ‖X_i‖_F^2
  double total_squared_norm() const { return total_sq_norm_; }

 private:
  RowMajor features_;
  Vector labels_;
  Index p_;
  Index q_;
  double total_sq_norm_;
};

namespace kernels {

/// Samples per reduction chunk. Changing it changes rounding, not results'
/// validity; it is fixed so runs are reproducible.
inline constexpr Index kChunk = 64;

/// s_i = ⟨W, X_i⟩.
Vector scores_reference(const DesignMatrix& x, const Matrix& w);
Vector scores(const DesignMatrix& x, const Matrix& w, int threads);

/// sum_i c_i X_i as a p x q matrix.
Matrix weighted_sum_reference(const DesignMatrix& x, const Vector& c);
Matrix weighted_sum(const DesignMatrix& x, const Vector& c, int threads);

/// Largest eigenvalue of sum_i vec(X_i) vec(X_i)^T (= ‖A‖_2^2) by power
/// iteration from a seeded start vector.
double operator_norm_squared(const DesignMatrix& x, std::uint64_t seed, int iterations,
                             int threads);

}  // namespace kernels
}  // namespace hlsmm
