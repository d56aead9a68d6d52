#include "hlsmm/kernels.hpp"

#include "hlsmm/error.hpp"
#include "hlsmm/rng.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <string>

namespace hlsmm {

DesignMatrix::DesignMatrix(const Dataset& data)
    : features_(static_cast<Index>(data.size()), data.rows() * data.cols()),
      labels_(data.labels()),
      p_(data.rows()),
      q_(data.cols()),
      total_sq_norm_(0.0) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Matrix& xi = data[i].x;
    features_.row(static_cast<Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(xi.data(), xi.size());
    total_sq_norm_ += xi.squaredNorm();
  }
}

namespace kernels {

namespace {

void check(const DesignMatrix& x, const Matrix& w) {
  if (w.rows() != x.p() || w.cols() != x.q()) {
    throw InvalidArgument("kernel: weight shape " + std::to_string(w.rows()) + "x" +
                          std::to_string(w.cols()) + " does not match samples " +
                          std::to_string(x.p()) + "x" + std::to_string(x.q()));
  }
}

void check(const DesignMatrix& x, const Vector& c) {
  if (c.size() != x.samples()) {
    throw InvalidArgument("kernel: coefficient vector has length " + std::to_string(c.size()) +
                          ", expected " + std::to_string(x.samples()));
  }
}

int clamp_threads(int threads) { return std::max(1, threads); }

}  // namespace

Vector scores_reference(const DesignMatrix& x, const Matrix& w) {
  check(x, w);
  const auto& a = x.rows();
  Vector s(x.samples());
  for (Index i = 0; i < x.samples(); ++i) {
    double acc = 0.0;
    for (Index j = 0; j < x.features(); ++j) acc += a(i, j) * w.data()[j];
    s(i) = acc;
  }
  return s;
}

Vector scores(const DesignMatrix& x, const Matrix& w, int threads) {
  check(x, w);
  const auto& a = x.rows();
  const Index m = x.samples();
  const Eigen::Map<const Vector> wv(w.data(), w.size());
  Vector s(m);
  // Rows are independent, so any schedule gives the same bits.
#pragma omp parallel for schedule(static) num_threads(clamp_threads(threads)) if (m >= 2 * kChunk)
  for (Index i = 0; i < m; ++i) {
    s(i) = a.row(i).dot(wv.transpose());
  }
  return s;
}

Matrix weighted_sum_reference(const DesignMatrix& x, const Vector& c) {
  check(x, c);
  const auto& a = x.rows();
  Matrix out = Matrix::Zero(x.p(), x.q());
  for (Index i = 0; i < x.samples(); ++i) {
    for (Index j = 0; j < x.features(); ++j) out.data()[j] += c(i) * a(i, j);
  }
  return out;
}

Matrix weighted_sum(const DesignMatrix& x, const Vector& c, int threads) {
  check(x, c);
  const auto& a = x.rows();
  const Index m = x.samples();
  const Index d = x.features();
  const Index chunks = (m + kChunk - 1) / kChunk;

  DesignMatrix::RowMajor partial(chunks, d);
#pragma omp parallel for schedule(static) num_threads(clamp_threads(threads)) if (chunks > 1)
  for (Index k = 0; k < chunks; ++k) {
    const Index lo = k * kChunk;
    const Index hi = std::min(m, lo + kChunk);
    auto row = partial.row(k);
    row.setZero();
    for (Index i = lo; i < hi; ++i) row.noalias() += c(i) * a.row(i);
  }

  Matrix out(x.p(), x.q());
  Eigen::Map<Eigen::RowVectorXd> flat(out.data(), d);
  flat.setZero();
  for (Index k = 0; k < chunks; ++k) flat += partial.row(k);
  return out;
}

double operator_norm_squared(const DesignMatrix& x, std::uint64_t seed, int iterations,
                             int threads) {
  Rng rng(seed);
  Matrix v(x.p(), x.q());
  for (Index j = 0; j < v.size(); ++j) v.data()[j] = rng.normal();
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double n = v.norm();
    if (n == 0.0) return 0.0;
    v /= n;
    const Vector s = scores(x, v, threads);
    Matrix next = weighted_sum(x, s, threads);
    // Rayleigh quotient of the unit vector v.
    const double rq = s.squaredNorm();
    const bool settled = it > 0 && std::abs(rq - lambda) <= 1e-10 * std::max(1.0, rq);
    lambda = rq;
    v = std::move(next);
    if (settled) break;
  }
  return lambda;
}

}  // namespace kernels
}  // namespace hlsmm
