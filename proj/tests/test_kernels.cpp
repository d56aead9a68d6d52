#include "hlsmm/kernels.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>

namespace hlsmm {
namespace {

// m = 203 leaves a partial last chunk.
constexpr std::size_t kSamples = 203;

TEST(DesignMatrix, RowsMatchFrobeniusInner) {
  oracle::Random rng(1);
  const Dataset d = rng.dataset(17, 3, 4);
  const DesignMatrix x(d);
  const Matrix w = rng.matrix(3, 4);
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Index r = static_cast<Index>(i);
    EXPECT_NEAR(x.rows().row(r).dot(Eigen::Map<const Vector>(w.data(), w.size())),
                oracle::inner(w, d[i].x), 1e-13);
    EXPECT_EQ(x.labels()(r), d[i].y);
    total += d[i].x.squaredNorm();
  }
  EXPECT_NEAR(x.total_squared_norm(), total, 1e-12 * total);
}

TEST(Scores, ThreadCountDoesNotChangeBits) {
  oracle::Random rng(2);
  const DesignMatrix x(rng.dataset(kSamples, 5, 6));
  const Matrix w = rng.matrix(5, 6);
  const Vector one = kernels::scores(x, w, 1);
  for (int threads : {2, 4}) EXPECT_EQ(kernels::scores(x, w, threads), one) << threads;
  const Vector ref = kernels::scores_reference(x, w);
  EXPECT_LE((one - ref).cwiseAbs().maxCoeff(), 1e-13 * ref.cwiseAbs().maxCoeff());
}

TEST(WeightedSum, ThreadCountDoesNotChangeBits) {
  oracle::Random rng(3);
  const DesignMatrix x(rng.dataset(kSamples, 5, 6));
  const Vector c = rng.vector(static_cast<Index>(kSamples));
  const Matrix one = kernels::weighted_sum(x, c, 1);
  for (int threads : {2, 4}) EXPECT_EQ(kernels::weighted_sum(x, c, threads), one) << threads;
  const Matrix ref = kernels::weighted_sum_reference(x, c);
  EXPECT_LE((one - ref).norm(), 1e-12 * ref.norm());
}

TEST(WeightedSum, MatchesLoopOracle) {
  oracle::Random rng(4);
  const Dataset d = rng.dataset(70, 3, 2);
  const Vector c = rng.vector(70);
  Matrix acc = Matrix::Zero(3, 2);
  for (std::size_t i = 0; i < d.size(); ++i) acc += c(static_cast<Index>(i)) * d[i].x;
  EXPECT_LE((kernels::weighted_sum(DesignMatrix(d), c, 2) - acc).norm(), 1e-12 * acc.norm());
}

TEST(OperatorNorm, MatchesLargestSingularValue) {
  oracle::Random rng(5);
  for (int t = 0; t < 5; ++t) {
    const DesignMatrix x(rng.dataset(static_cast<std::size_t>(rng.integer(10, 150)), 4, 3));
    const double expect = Eigen::JacobiSVD<DesignMatrix::RowMajor>(x.rows()).singularValues()(0);
    const double got = kernels::operator_norm_squared(x, 7, 500, 2);
    EXPECT_NEAR(got, expect * expect, 1e-6 * expect * expect);
    EXPECT_LE(got, x.total_squared_norm() * (1 + 1e-12));
    EXPECT_EQ(kernels::operator_norm_squared(x, 7, 500, 1), got);
  }
}

}  // namespace
}  // namespace hlsmm
