#include "hlsmm/kkt.hpp"

#include "hlsmm/error.hpp"

#include <algorithm>
#include <cmath>

namespace hlsmm {

namespace {

void check_lengths(const Vector& v, const Dataset& data, const char* what) {
  if (v.size() != static_cast<Index>(data.size())) {
    throw InvalidArgument(std::string(what) + " length does not match the dataset");
  }
}

}  // namespace

Vector apply_operator(const Matrix& w, const Dataset& data) {
  Vector out(static_cast<Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    out(static_cast<Index>(i)) = -data[i].y * fro_inner(w, data[i].x);
  }
  return out;
}

Matrix adjoint(const Vector& lambda, const Dataset& data) {
  check_lengths(lambda, data, "lambda");
  Matrix out = Matrix::Zero(data.rows(), data.cols());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out -= (lambda(static_cast<Index>(i)) * data[i].y) * data[i].x;
  }
  return out;
}

Vector estimate_multiplier(const ModelState& state, const Dataset& data, double sigma) {
  check_lengths(state.z, data, "z");
  return -2.0 * sigma * (state.z - margin_residuals(state.w, state.b, data));
}

double z_stationarity(const Vector& z, const Vector& lambda, [[maybe_unused]] double beta,
                      double tol) {
  if (z.size() != lambda.size()) throw InvalidArgument("z and lambda lengths differ");
  // λ_i must equal β d_i for some d_i in the regular subdifferential of
  // ‖(·)₊‖₀ at z_i: {0} off zero, [0, ∞) at zero. β > 0 only rescales d_i.
  double worst = 0.0;
  for (Index i = 0; i < z.size(); ++i) {
    const double v = std::abs(z(i)) <= tol ? std::max(0.0, -lambda(i)) : std::abs(lambda(i));
    worst = std::max(worst, v);
  }
  return worst;
}

Matrix normal_cone_projection(const SvdFactors& f, const Matrix& g) {
  const Matrix up = f.u_perp();
  const Matrix vp = f.v_perp();
  return up * (up.transpose() * g * vp) * vp.transpose();
}

double normal_cone_distance(const Matrix& w, const Matrix& g, Index r) {
  if (w.rows() != g.rows() || w.cols() != g.cols()) {
    throw InvalidArgument("normal cone: W and G shapes differ");
  }
  const SvdFactors f = svd(w);
  if (f.rank() < r) return g.norm();
  return (g - normal_cone_projection(f, g)).norm();
}

double w_stationarity(const ModelState& state, const Vector& lambda, const Dataset& data,
                      Index r) {
  if (state.w.rows() != data.rows() || state.w.cols() != data.cols()) {
    throw InvalidArgument("W shape does not match the dataset");
  }
  return normal_cone_distance(state.w, state.w + adjoint(lambda, data), r);
}

KktReport kkt_report(const ModelState& state, const Dataset& data, const Hyperparams& hp,
                     double tol) {
  KktReport rep;
  rep.lambda = estimate_multiplier(state, data, hp.sigma);
  rep.w_residual = w_stationarity(state, rep.lambda, data, hp.rank);
  rep.z_residual = z_stationarity(state.z, rep.lambda, hp.beta, tol);
  // 2σ yᵀ(z − v) = −yᵀλ
  rep.b_residual = std::abs(data.labels().dot(rep.lambda));
  rep.feasibility_residual = (state.z - margin_residuals(state.w, state.b, data)).norm();

  const SvdFactors f = svd(state.w);
  rep.rank_at_solution = f.rank();
  rep.rank_bound = hp.rank;
  rep.rank_deficient = f.rank() < hp.rank;
  const Index r = hp.rank;
  if (r < f.sigma.size() && f.sigma(r - 1) > f.zero_tol) {
    rep.projection_ambiguous = f.sigma(r - 1) - f.sigma(r) <= kProjectionTieTolerance * f.sigma(0);
  }
  return rep;
}

Vector optimal_slack(const Matrix& w, double b, const Dataset& data, const Hyperparams& hp) {
  return prox_heaviside(margin_residuals(w, b, data), hp.beta / (2.0 * hp.sigma));
}

}  // namespace hlsmm
