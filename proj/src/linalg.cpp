#include "hlsmm/linalg.hpp"

#include "hlsmm/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <string>

namespace hlsmm {

namespace {

void require_finite(const Matrix& w, const char* what) {
  if (!w.allFinite()) {
    throw InvalidInput(std::string(what) + ": matrix has non-finite entries");
  }
}

std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

double zero_tolerance(double sigma_max) {
  return sigma_max > 0.0 ? kRelativeZeroTolerance * sigma_max : 0.0;
}

Matrix SvdFactors::u_perp() const { return u.rightCols(u.cols() - rank()); }
Matrix SvdFactors::v_perp() const { return v.rightCols(v.cols() - rank()); }
Matrix SvdFactors::u_gamma() const { return u.leftCols(rank()); }
Matrix SvdFactors::v_gamma() const { return v.leftCols(rank()); }

SvdFactors svd(const Matrix& w) {
  require_finite(w, "svd");
  SvdFactors f;
  if (w.size() == 0) {
    f.u = Matrix::Identity(w.rows(), w.rows());
    f.v = Matrix::Identity(w.cols(), w.cols());
    f.sigma = Vector(0);
    return f;
  }
  // BDCSVD switches to one-sided Jacobi below its block size, so small
  // problems get Jacobi accuracy and large ones stay tractable.
  Eigen::BDCSVD<Matrix> dec(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
  f.u = dec.matrixU();
  f.v = dec.matrixV();
  f.sigma = dec.singularValues();
  f.zero_tol = zero_tolerance(f.sigma.size() ? f.sigma(0) : 0.0);
  for (Index i = 0; i < f.sigma.size(); ++i) {
    if (f.sigma(i) > f.zero_tol) f.gamma.push_back(i);
  }
  return f;
}

RankProjection project_rank(const Matrix& w, Index r) {
  const Index k = std::min(w.rows(), w.cols());
  if (r < 1 || r >= k) {
    throw InvalidArgument("project_rank: rank " + std::to_string(r) +
                          " must satisfy 1 <= r < min(p, q) for a " + shape_of(w) +
                          " matrix");
  }
  require_finite(w, "project_rank");

  Eigen::BDCSVD<Matrix> dec(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = dec.singularValues();

  RankProjection out;
  out.matrix = dec.matrixU().leftCols(r) * s.head(r).asDiagonal() *
               dec.matrixV().leftCols(r).transpose();
  const double tol = zero_tolerance(s(0));
  out.ambiguous = s(r - 1) > tol && (s(r - 1) - s(r)) <= kProjectionTieTolerance * s(0);
  return out;
}

double fro_inner(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument("fro_inner: shape mismatch " + shape_of(a) + " vs " + shape_of(b));
  }
  return a.cwiseProduct(b).sum();
}

Index numerical_rank(const Matrix& w) {
  require_finite(w, "numerical_rank");
  if (w.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> dec(w);
  const Vector& s = dec.singularValues();
  const double tol = zero_tolerance(s(0));
  return static_cast<Index>((s.array() > tol).count());
}

}  // namespace hlsmm
