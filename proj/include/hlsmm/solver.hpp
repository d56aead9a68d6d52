#pragma once

// Proximal alternating minimisation for the rank-constrained Heaviside-loss
// support matrix machine
//
//   min  g(W, z, b) = ½‖W‖_F² + β‖z₊‖₀ + σ‖z − v(W, b)‖²,   rank(W) <= r,
//   v_i(W, b) = 1 − y_i(⟨W, X_i⟩ + b),
//
// cycling three proximally regularised block updates:
//
//   W ← Π_rank≤r(W − α∇h(W))                 projected gradient, step α
//   z ← argmin β‖z₊‖₀ + σ‖z − v‖² + τ₂/2‖z − z_prev‖²   (closed form)
//   b ← argmin σ‖z − v(b)‖² + τ₃/2 (b − b_prev)²       (closed form)
//
// With the backtracking step policy every accepted W step satisfies
// g(W⁺, z, b) + τ₁/2‖W⁺ − W‖² <= g(W, z, b), and the z and b blocks are exact
// minimisers, so each iteration decreases g by at least
// τ_min/2 (‖ΔW‖² + ‖Δz‖² + Δb²). The trace records whether that held.

#include "hlsmm/linalg.hpp"
#include "hlsmm/model.hpp"

#include <optional>

namespace hlsmm {

struct FitResult {
  ModelState model;
  SolverTrace trace;
  Hyperparams hyperparams;
  double wall_time = 0.0;  // seconds
};

struct FitOptions {
  /// OpenMP threads for the per-sample kernels. Results do not depend on it.
  int threads = 1;
};

struct WUpdate {
  Matrix w;
  int halvings = 0;
  /// Backtracking ran out of halvings; w is the previous iterate.
  bool stalled = false;
  double step = 0.0;
};

/// ∇h(W) = W + 2σ Σ_i y_i (z_i − 1 + y_i⟨W, X_i⟩ + b y_i) X_i.
Matrix grad_h(const Matrix& w, const Vector& z, double b, const Dataset& data, double sigma);

/// Upper bound (trace) or estimate (spectral) of the Lipschitz constant of ∇h.
double lipschitz_constant(const Dataset& data, const Hyperparams& hp);

/// Initial step used when hp.step.alpha0 is 0: 1 / (L + τ₁), the largest
/// step for which the W acceptance test is guaranteed when L is exact.
double default_step(const Dataset& data, const Hyperparams& hp);

/// One coordinate of the z block: the minimiser of
/// β·1[z>0] + σ(z − v)² + τ₂/2 (z − z_prev)² (hp.z_update = exact), or the
/// published closed form with centre (2σv + τ₂z_prev)/(σ + τ₂) and threshold
/// √(4β/(σ + τ₂)) (hp.z_update = paper).
double update_z_coordinate(double v, double z_prev, const Hyperparams& hp);

WUpdate update_w(const ModelState& state, const Dataset& data, const Hyperparams& hp);
Vector update_z(const ModelState& state, const Dataset& data, const Hyperparams& hp);
double update_b(const ModelState& state, const Dataset& data, const Hyperparams& hp);

/// W = 0, b = 0 and z = 0 (zero_slack) or z = 1 (other policies).
ModelState initial_state(const Dataset& data, const Hyperparams& hp);

/// Runs the alternating scheme until the stopping rule or hp.maxit. Without
/// `init`, starts from initial_state() and, for InitPolicy::squared_hinge,
/// first runs up to hp.maxit warm-start iterations.
/// Throws InvalidArgument for untrainable data or invalid hyperparameters and
/// NumericalFailure when an iterate becomes non-finite.
FitResult fit(const Dataset& data, const Hyperparams& hp,
              const std::optional<ModelState>& init = std::nullopt,
              const FitOptions& options = {});

}  // namespace hlsmm
