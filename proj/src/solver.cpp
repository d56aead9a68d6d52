#include "hlsmm/solver.hpp"

#include "hlsmm/error.hpp"
#include "hlsmm/kernels.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace hlsmm {

namespace {

constexpr int kPowerIterations = 300;
// Acceptance slack for the W test, relative to the objective. Covers rounding
// in the objective evaluation once the step is at the noise floor.
constexpr double kAcceptRoundoff = 1e-13;
constexpr double kDecreaseSlack = 1e-9;

// Cached packed samples plus the block formulas, shared by the public
// single-step functions and the fit loop.
class Problem {
 public:
  Problem(const Dataset& data, const Hyperparams& hp, int threads)
      : x_(data), y_(x_.labels()), hp_(hp), threads_(threads) {}

  const DesignMatrix& design() const { return x_; }
  Index m() const { return x_.samples(); }

  Vector scores(const Matrix& w) const { return kernels::scores(x_, w, threads_); }

  // v = 1 − y ∘ (s + b)
  Vector residuals(const Vector& s, double b) const {
    return (1.0 - (y_.array() * (s.array() + b))).matrix();
  }

  double smooth_part(const Matrix& w, const Vector& z, double b) const {
    return 0.5 * w.squaredNorm() + hp_.sigma * (z - residuals(scores(w), b)).squaredNorm();
  }

  double objective(const Matrix& w, const Vector& z, double b) const {
    return smooth_part(w, z, b) + hp_.beta * static_cast<double>(heaviside_count(z));
  }

  Matrix gradient(const Matrix& w, const Vector& z, double b) const {
    const Vector r = z - residuals(scores(w), b);
    const Vector coef = (2.0 * hp_.sigma) * (y_.array() * r.array()).matrix();
    return w + kernels::weighted_sum(x_, coef, threads_);
  }

  WUpdate update_w(const ModelState& s, double alpha0, double g_smooth) const {
    const Matrix grad = gradient(s.w, s.z, s.b);
    if (!grad.allFinite()) throw NumericalFailure("non-finite gradient in W update", s.iter);

    WUpdate out;
    if (hp_.step.kind == StepPolicy::Kind::fixed) {
      out.step = alpha0;
      out.w = project_rank(s.w - alpha0 * grad, hp_.rank).matrix;
      return out;
    }

    const double slack = kAcceptRoundoff * std::max(1.0, std::abs(g_smooth));
    double alpha = alpha0;
    for (int h = 0; h <= hp_.step.max_halvings; ++h) {
      Matrix cand = project_rank(s.w - alpha * grad, hp_.rank).matrix;
      const double lhs =
          smooth_part(cand, s.z, s.b) + 0.5 * hp_.tau1 * (cand - s.w).squaredNorm();
      if (lhs <= g_smooth + slack) {
        out.w = std::move(cand);
        out.halvings = h;
        out.step = alpha;
        return out;
      }
      alpha *= hp_.step.shrink;
    }
    out.w = s.w;
    out.halvings = hp_.step.max_halvings;
    out.stalled = true;
    out.step = 0.0;
    return out;
  }

  // `hinge` solves the z <= 0 constrained block used by the warm start.
  Vector update_z(const Matrix& w, const Vector& z_prev, double b, bool hinge = false) const {
    const Vector v = residuals(scores(w), b);
    Vector out(v.size());
    if (hinge) {
      const double two_sigma = 2.0 * hp_.sigma;
      out = ((two_sigma * v + hp_.tau2 * z_prev) / (two_sigma + hp_.tau2)).cwiseMin(0.0);
      return out;
    }
    for (Index i = 0; i < v.size(); ++i) out(i) = update_z_coordinate(v(i), z_prev(i), hp_);
    return out;
  }

  double update_b(const Matrix& w, const Vector& z, double b_prev) const {
    const Vector s = scores(w);
    // y^T (z − 1 + A(W)) with A(W)_i = y_i s_i.
    const double ytr = (y_.array() * (z.array() - 1.0 + y_.array() * s.array())).sum();
    const double two_sigma = 2.0 * hp_.sigma;
    return (hp_.tau3 * b_prev - two_sigma * ytr) / (two_sigma * y_.squaredNorm() + hp_.tau3);
  }

  double lipschitz() const {
    if (hp_.lipschitz == LipschitzBound::trace) {
      return 1.0 + 2.0 * hp_.sigma * x_.total_squared_norm();
    }
    return 1.0 +
           2.0 * hp_.sigma * kernels::operator_norm_squared(x_, hp_.seed, kPowerIterations, threads_);
  }

  double initial_step() const {
    return hp_.step.alpha0 > 0.0 ? hp_.step.alpha0 : 1.0 / (lipschitz() + hp_.tau1);
  }

 private:
  DesignMatrix x_;
  Vector y_;
  const Hyperparams& hp_;
  int threads_;
};

void check_state(const ModelState& s, const Dataset& data) {
  if (s.w.rows() != data.rows() || s.w.cols() != data.cols()) {
    throw InvalidArgument("state W shape does not match the dataset");
  }
  if (s.z.size() != static_cast<Index>(data.size())) {
    throw InvalidArgument("state z length does not match the dataset");
  }
}

}  // namespace

double update_z_coordinate(double v, double z_prev, const Hyperparams& hp) {
  const double two_sigma = 2.0 * hp.sigma;
  if (hp.z_update == ZUpdateRule::paper) {
    const double denom = hp.sigma + hp.tau2;
    const double c = (two_sigma * v + hp.tau2 * z_prev) / denom;
    return c > 0.0 && c <= std::sqrt(4.0 * hp.beta / denom) ? 0.0 : c;
  }
  // Completing the square: β·1[z>0] + (2σ+τ₂)/2 (z − c)², i.e. the
  // Heaviside prox of c with γ = β / (2σ + τ₂).
  const double denom = two_sigma + hp.tau2;
  const double c = (two_sigma * v + hp.tau2 * z_prev) / denom;
  return c > 0.0 && c <= std::sqrt(2.0 * hp.beta / denom) ? 0.0 : c;
}

Matrix grad_h(const Matrix& w, const Vector& z, double b, const Dataset& data, double sigma) {
  Hyperparams hp;
  hp.sigma = sigma;
  check_state(ModelState{w, b, z, 0}, data);
  return Problem(data, hp, 1).gradient(w, z, b);
}

double lipschitz_constant(const Dataset& data, const Hyperparams& hp) {
  return Problem(data, hp, 1).lipschitz();
}

double default_step(const Dataset& data, const Hyperparams& hp) {
  return 1.0 / (lipschitz_constant(data, hp) + hp.tau1);
}

WUpdate update_w(const ModelState& state, const Dataset& data, const Hyperparams& hp) {
  hp.validate(data.rows(), data.cols());
  check_state(state, data);
  Problem prob(data, hp, 1);
  return prob.update_w(state, prob.initial_step(), prob.smooth_part(state.w, state.z, state.b));
}

Vector update_z(const ModelState& state, const Dataset& data, const Hyperparams& hp) {
  check_state(state, data);
  return Problem(data, hp, 1).update_z(state.w, state.z, state.b);
}

double update_b(const ModelState& state, const Dataset& data, const Hyperparams& hp) {
  check_state(state, data);
  return Problem(data, hp, 1).update_b(state.w, state.z, state.b);
}

ModelState initial_state(const Dataset& data, const Hyperparams& hp) {
  ModelState s;
  s.w = Matrix::Zero(data.rows(), data.cols());
  s.b = 0.0;
  const Index m = static_cast<Index>(data.size());
  s.z = hp.init == InitPolicy::zero_slack ? Vector::Zero(m) : Vector::Ones(m);
  s.iter = 0;
  return s;
}

namespace {

// Runs up to hp.maxit iterations from `s`, appending to `trace`. With `hinge`
// the z block is restricted to z <= 0 and the Heaviside term never fires.
void iterate(const Problem& prob, const Hyperparams& hp, ModelState& s, SolverTrace& trace,
             bool hinge) {
  const double tau_min = hp.tau_min();
  const double beta = hinge ? 0.0 : hp.beta;
  auto objective = [&](const ModelState& st) {
    return prob.smooth_part(st.w, st.z, st.b) + beta * static_cast<double>(heaviside_count(st.z));
  };
  double g = objective(s);
  trace.records.push_back({s.iter, g, 0.0, 0.0, 0.0, 0, false, true});
  trace.status = SolverStatus::max_iter;
  if (hp.maxit <= 0) return;

  const double alpha0 = prob.initial_step();
  for (int k = 0; k < hp.maxit; ++k) {
    const double g_smooth = g - beta * static_cast<double>(heaviside_count(s.z));
    WUpdate wu = prob.update_w(s, alpha0, g_smooth);
    const double w_prev_norm = s.w.norm();
    const double dw = (wu.w - s.w).norm();

    Vector z_next = prob.update_z(wu.w, s.z, s.b, hinge);
    const double dz = (z_next - s.z).norm();
    const double b_next = prob.update_b(wu.w, z_next, s.b);
    const double db = std::abs(b_next - s.b);

    s.w = std::move(wu.w);
    s.z = std::move(z_next);
    s.b = b_next;
    ++s.iter;

    const double g_next = objective(s);
    if (!std::isfinite(g_next) || !s.z.allFinite() || !std::isfinite(s.b)) {
      throw NumericalFailure("non-finite objective", s.iter);
    }

    IterationRecord rec;
    rec.iter = s.iter;
    rec.objective = g_next;
    rec.w_step = dw;
    rec.z_step = dz;
    rec.b_step = db;
    rec.halvings = wu.halvings;
    rec.w_stalled = wu.stalled;
    rec.sufficient_decrease =
        g - g_next >= 0.5 * tau_min * (dw * dw + dz * dz + db * db) - kDecreaseSlack;
    trace.records.push_back(rec);
    if (wu.stalled) ++trace.stalled_w_blocks;
    if (!rec.sufficient_decrease) ++trace.decrease_violations;

    const bool small_step = dw / std::max(1.0, w_prev_norm) <= hp.tol_step;
    const bool flat = std::abs(g - g_next) <= hp.tol_obj;
    g = g_next;
    if (small_step && flat) {
      trace.status = SolverStatus::converged;
      return;
    }
    if (wu.stalled && dz == 0.0 && db == 0.0) {
      trace.status = SolverStatus::stalled;
      return;
    }
  }
}

}  // namespace

FitResult fit(const Dataset& data, const Hyperparams& hp, const std::optional<ModelState>& init,
              const FitOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  hp.validate(data.rows(), data.cols());
  if (!data.trainable()) {
    throw InvalidArgument("training data must contain samples of both classes");
  }

  FitResult result;
  result.hyperparams = hp;
  ModelState s = init ? *init : initial_state(data, hp);
  check_state(s, data);
  if (!s.w.allFinite() || !s.z.allFinite() || !std::isfinite(s.b)) {
    throw InvalidInput("initial state has non-finite entries");
  }

  Problem prob(data, hp, options.threads);
  if (!init && hp.init == InitPolicy::squared_hinge && hp.maxit > 0) {
    SolverTrace warm;
    iterate(prob, hp, s, warm, true);
    result.trace.warm_start_iterations = s.iter;
    s.iter = 0;
  }
  iterate(prob, hp, s, result.trace, false);

  result.model = std::move(s);
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace hlsmm
