#include "hlsmm/error.hpp"
#include "hlsmm/model.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

namespace hlsmm {
namespace {

Dataset Single(double x, int y) {
  Matrix m(1, 1);
  m << x;
  return Dataset({{m, y}});
}

TEST(Dataset, RejectsInvalidSamples) {
  EXPECT_THROW(Dataset({}), InvalidArgument);
  EXPECT_THROW(Dataset({{Matrix::Ones(2, 2), 1}, {Matrix::Ones(2, 3), -1}}), InvalidArgument);
  EXPECT_THROW(Dataset({{Matrix::Ones(2, 2), 0}}), InvalidArgument);
  Matrix bad = Matrix::Ones(2, 2);
  bad(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(Dataset({{bad, 1}}), InvalidInput);
}

TEST(Dataset, TrainableNeedsBothLabels) {
  EXPECT_FALSE(Dataset({{Matrix::Ones(2, 2), 1}}).trainable());
  const Dataset d({{Matrix::Ones(2, 2), 1}, {Matrix::Zero(2, 2), -1}}, "toy", "memory");
  EXPECT_TRUE(d.trainable());
  EXPECT_EQ(d.count_label(1), 1u);
  EXPECT_EQ(d.labels(), Vector::Map(std::vector<double>{1.0, -1.0}.data(), 2));
  const Dataset s = d.subset({1}, "pick");
  EXPECT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].y, -1);
  EXPECT_NE(s.provenance().find("pick"), std::string::npos);
}

TEST(MarginResiduals, ZeroModelGivesOnes) {
  oracle::Random rng(1);
  const Dataset d = rng.dataset(7, 3, 4);
  EXPECT_EQ(margin_residuals(Matrix::Zero(3, 4), 0.0, d), Vector::Ones(7));
}

TEST(MarginResiduals, HandArithmetic) {
  Matrix w(1, 1);
  w << 2.0;
  const Vector v = margin_residuals(w, -1.0, Single(1.0, 1));
  ASSERT_EQ(v.size(), 1);
  EXPECT_EQ(v(0), 0.0);
}

TEST(MarginResiduals, MatchesLoopOracle) {
  oracle::Random rng(2);
  const Dataset d = rng.dataset(3, 4, 2);
  const Matrix w = rng.matrix(4, 2);
  const Vector v = margin_residuals(w, 0.3, d);
  const auto ref = oracle::residuals(w, 0.3, d);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(v(static_cast<Index>(i)), ref[i], 1e-14);
}

TEST(MarginResiduals, HomogeneousInModel) {
  oracle::Random rng(3);
  const Dataset d = rng.dataset(9, 3, 3);
  const Matrix w = rng.matrix(3, 3);
  const Vector v = margin_residuals(w, -0.4, d);
  for (double a : {-2.0, 0.0, 0.5, 3.0}) {
    const Vector va = margin_residuals(a * w, a * -0.4, d);
    EXPECT_LE((va - (Vector::Ones(9) - a * (Vector::Ones(9) - v))).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(MarginResiduals, ShapeMismatchThrows) {
  oracle::Random rng(3);
  EXPECT_THROW(margin_residuals(Matrix::Zero(2, 2), 0.0, rng.dataset(3, 3, 3)), InvalidArgument);
}

TEST(HeavisideCount, Examples) {
  Vector z(4);
  z << -1, 0, 2, 3;
  EXPECT_EQ(heaviside_count(z), 2u);
  EXPECT_EQ(heaviside_count(Vector::Zero(5)), 0u);
}

TEST(HeavisideCount, LoopOracleAndScaling) {
  oracle::Random rng(4);
  const Vector z = rng.vector(1000);
  EXPECT_EQ(heaviside_count(z), oracle::positives(z));
  for (double c : {1e-8, 0.5, 7.0, 1e8}) EXPECT_EQ(heaviside_count(c * z), heaviside_count(z));
}

TEST(PenalizedObjective, ZeroModelZeroSlack) {
  oracle::Random rng(5);
  const Dataset d = rng.dataset(6, 2, 3);
  Hyperparams hp;
  hp.sigma = 0.37;
  ModelState s{Matrix::Zero(2, 3), 0.0, Vector::Zero(6), 0};
  EXPECT_NEAR(penalized_objective(s, d, hp), 0.37 * 6, 1e-14);
}

TEST(PenalizedObjective, FeasibleSlackLeavesLoss) {
  oracle::Random rng(6);
  const Dataset d = rng.dataset(8, 3, 3);
  Hyperparams hp;
  hp.beta = 0.25;
  const Matrix w = Matrix::Zero(3, 3);
  ModelState s{w, 0.0, margin_residuals(w, 0.0, d), 0};
  EXPECT_EQ(penalized_objective(s, d, hp), 0.25 * static_cast<double>(heaviside_count(s.z)));
}

TEST(PenalizedObjective, MatchesIndependentEvaluation) {
  oracle::Random rng(7);
  for (int t = 0; t < 20; ++t) {
    const Dataset d = rng.dataset(5, 3, 2);
    Hyperparams hp;
    hp.beta = rng.log_uniform(1e-3, 1.0);
    hp.sigma = rng.log_uniform(1e-3, 1.0);
    ModelState s{rng.matrix(3, 2), rng.normal(), rng.vector(5), 0};
    EXPECT_NEAR(penalized_objective(s, d, hp),
                oracle::objective(s.w, s.z, s.b, d, hp.beta, hp.sigma), 1e-12);
  }
}

TEST(PenalizedObjective, InvariantUnderSamplePermutation) {
  oracle::Random rng(8);
  const Dataset d = rng.dataset(10, 2, 2);
  Hyperparams hp;
  ModelState s{rng.matrix(2, 2), 0.2, rng.vector(10), 0};
  std::vector<std::size_t> perm(10);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  std::vector<MatrixSample> samples;
  ModelState sp = s;
  for (std::size_t i = 0; i < 10; ++i) {
    samples.push_back(d[perm[i]]);
    sp.z(static_cast<Index>(i)) = s.z(static_cast<Index>(perm[i]));
  }
  EXPECT_NEAR(penalized_objective(sp, Dataset(samples), hp), penalized_objective(s, d, hp),
              1e-12);
}

TEST(ProxHeaviside, ThresholdExample) {
  Vector x(3);
  x << 1.5, 2.5, -3;
  const Vector z = prox_heaviside(x, 2.0);
  EXPECT_EQ(z(0), 0.0);
  EXPECT_EQ(z(1), 2.5);
  EXPECT_EQ(z(2), -3.0);
  // Dense grid over [-10, 10], step 1e-4: no grid point does better.
  for (Index i = 0; i < 3; ++i) {
    const double xi = x(i);
    const auto g = oracle::grid_minimum(
        [&](double t) { return oracle::prox_objective(t, xi, 2.0); }, -10.0, 10.0, 200001);
    EXPECT_LE(oracle::prox_objective(z(i), xi, 2.0), g.value);
  }
}

TEST(ProxHeaviside, NonPositiveEntriesUnchanged) {
  Vector x(4);
  x << 0.0, -1e-300, -2.0, -1e6;
  EXPECT_EQ(prox_heaviside(x, 3.0), x);
}

TEST(ProxHeaviside, BoundaryGoesToZero) {
  Vector x(1);
  x << 2.0;
  EXPECT_EQ(prox_heaviside(x, 2.0)(0), 0.0);
  x << std::nextafter(2.0, 3.0);
  EXPECT_EQ(prox_heaviside(x, 2.0)(0), x(0));
}

TEST(ProxHeaviside, AgreesWithTwoCandidateOracle) {
  oracle::Random rng(9);
  for (int t = 0; t < 10000; ++t) {
    const double gamma = rng.log_uniform(1e-4, 10.0);
    Vector x(1);
    x << rng.uniform(-6.0, 6.0);
    ASSERT_EQ(prox_heaviside(x, gamma)(0), oracle::prox_two_candidate(x(0), gamma))
        << "x=" << x(0) << " gamma=" << gamma;
  }
}

TEST(ProxHeaviside, RejectsNonPositiveGamma) {
  EXPECT_THROW(prox_heaviside(Vector::Ones(2), 0.0), InvalidArgument);
  EXPECT_THROW(prox_heaviside(Vector::Ones(2), -1.0), InvalidArgument);
}

TEST(Predict, ZeroScoreMapsToNegative) {
  const Matrix x = Matrix::Ones(2, 3);
  EXPECT_EQ(predict(Matrix::Zero(2, 3), 1.0, x), 1);
  EXPECT_EQ(predict(Matrix::Zero(2, 3), 0.0, x), -1);
  EXPECT_EQ(predict(Matrix::Ones(2, 3), -6.0, x), -1);
  EXPECT_EQ(predict(Matrix::Ones(2, 3), -5.5, x), 1);
  EXPECT_THROW(predict(Matrix::Zero(3, 2), 0.0, x), InvalidArgument);
}

TEST(Hyperparams, Validation) {
  Hyperparams hp;
  EXPECT_NO_THROW(hp.validate(5, 6));
  hp.rank = 5;
  EXPECT_THROW(hp.validate(5, 6), InvalidArgument);
  hp = {};
  hp.beta = 0.0;
  EXPECT_THROW(hp.validate(5, 6), InvalidArgument);
  hp = {};
  hp.tau2 = -1e-3;
  EXPECT_THROW(hp.validate(5, 6), InvalidArgument);
  hp = {};
  hp.step.shrink = 1.0;
  EXPECT_THROW(hp.validate(5, 6), InvalidArgument);
  hp = {};
  hp.maxit = 0;
  EXPECT_NO_THROW(hp.validate(5, 6));
  hp = {};
  hp.tau1 = 1e-2;
  hp.tau2 = 1e-4;
  hp.tau3 = 1e-3;
  EXPECT_EQ(hp.tau_min(), 1e-4);
}

TEST(Names, RoundTrip) {
  for (auto s : {SolverStatus::converged, SolverStatus::max_iter, SolverStatus::stalled})
    EXPECT_EQ(parse_solver_status(to_string(s)), s);
  for (auto p : {InitPolicy::residual, InitPolicy::zero_slack, InitPolicy::squared_hinge})
    EXPECT_EQ(parse_init_policy(to_string(p)), p);
  for (auto b : {LipschitzBound::trace, LipschitzBound::spectral})
    EXPECT_EQ(parse_lipschitz_bound(to_string(b)), b);
  for (auto r : {ZUpdateRule::exact, ZUpdateRule::paper}) EXPECT_EQ(parse_z_update(to_string(r)), r);
  EXPECT_THROW(parse_z_update("approx"), InvalidArgument);
}

}  // namespace
}  // namespace hlsmm
