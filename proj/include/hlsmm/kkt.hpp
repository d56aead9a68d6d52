#pragma once

// Residual diagnostics for KKT points of the rank-constrained problem in its
// penalty form. With the multiplier estimate λ = −2σ(z − v), a KKT point has
//
//   W + A*(λ) in the normal cone of {rank <= r} at W,
//   λ_i = 0 where z_i != 0, λ_i >= 0 where z_i = 0,
//   yᵀλ = 0,
//
// where A*(λ) = Σ λ_i (−y_i X_i). Each report entry measures the violation of
// one of these conditions.

#include "hlsmm/linalg.hpp"
#include "hlsmm/model.hpp"

namespace hlsmm {

struct KktReport {
  Vector lambda;
  double w_residual = 0.0;
  double z_residual = 0.0;
  double b_residual = 0.0;
  /// ‖z − v‖. Stays O(1/σ) in the penalty form rather than vanishing.
  double feasibility_residual = 0.0;
  Index rank_at_solution = 0;
  Index rank_bound = 0;
  bool rank_deficient = false;
  /// σ_r and σ_{r+1} of W are numerically tied.
  bool projection_ambiguous = false;
};

/// A(W)_i = −y_i ⟨W, X_i⟩.
Vector apply_operator(const Matrix& w, const Dataset& data);

/// A*(λ) = Σ_i λ_i (−y_i X_i).
Matrix adjoint(const Vector& lambda, const Dataset& data);

/// λ_i = −2σ (z_i − 1 + y_i(⟨W, X_i⟩ + b)).
Vector estimate_multiplier(const ModelState& state, const Dataset& data, double sigma);

/// max_i of |λ_i| (z_i != 0) or max(0, −λ_i) (z_i = 0). Entries with
/// |z_i| <= tol count as zero.
double z_stationarity(const Vector& z, const Vector& lambda, double beta, double tol);

/// Distance of G = W + A*(λ) from the normal cone at W: ‖G‖ when rank(W) < r,
/// otherwise ‖G − U⊥ U⊥ᵀ G V⊥ V⊥ᵀ‖.
double w_stationarity(const ModelState& state, const Vector& lambda, const Dataset& data,
                      Index r);

/// Same as above with G given directly.
double normal_cone_distance(const Matrix& w, const Matrix& g, Index r);

/// Component of G in the normal cone at a rank-r W: U⊥ U⊥ᵀ G V⊥ V⊥ᵀ.
Matrix normal_cone_projection(const SvdFactors& f, const Matrix& g);

KktReport kkt_report(const ModelState& state, const Dataset& data, const Hyperparams& hp,
                     double tol = 1e-10);

/// Exact z minimiser at fixed (W, b) without proximal weight: the Heaviside
/// prox of v with γ = β / (2σ). Used to rebuild z for models stored
/// without it.
Vector optimal_slack(const Matrix& w, double b, const Dataset& data, const Hyperparams& hp);

}  // namespace hlsmm
