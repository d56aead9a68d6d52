#pragma once

#include "hlsmm/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace hlsmm {

/// One labeled observation. Labels are -1 or +1.
struct MatrixSample {
  Matrix x;
  int y = 1;
};

/// Ordered, non-empty collection of same-shaped samples.
///
/// The constructor validates every invariant (finite entries, labels in
/// {-1, +1}, uniform shape, non-empty); a constructed Dataset is never
/// modified afterwards. Transformations in data.hpp return new datasets.
class Dataset {
 public:
  Dataset(std::vector<MatrixSample> samples, std::string name = {},
          std::string provenance = {});

  std::size_t size() const { return samples_.size(); }
  Index rows() const { return samples_.front().x.rows(); }
  Index cols() const { return samples_.front().x.cols(); }

  const MatrixSample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<MatrixSample>& samples() const { return samples_; }
  const std::string& name() const { return name_; }
  const std::string& provenance() const { return provenance_; }

  std::size_t count_label(int label) const;
  /// Both classes present; required before fitting.
  bool trainable() const { return count_label(1) > 0 && count_label(-1) > 0; }
  Vector labels() const;

  /// Copy with the same samples and an extra provenance step appended.
  Dataset with_provenance(const std::string& step) const;
  Dataset subset(const std::vector<std::size_t>& indices, const std::string& step) const;

 private:
  std::vector<MatrixSample> samples_;
  std::string name_;
  std::string provenance_;
};

/// Step-size rule for the projected-gradient W block.
struct StepPolicy {
  enum class Kind { fixed, backtracking };

  Kind kind = Kind::backtracking;
  /// Initial (or fixed) step. 0 selects 1 / L from the Lipschitz estimate.
  double alpha0 = 0.0;
  double shrink = 0.5;
  int max_halvings = 30;

  static StepPolicy fixed(double alpha) { return {Kind::fixed, alpha, 0.5, 0}; }
  static StepPolicy backtracking(double alpha0 = 0.0, double shrink = 0.5,
                                 int max_halvings = 30) {
    return {Kind::backtracking, alpha0, shrink, max_halvings};
  }

  friend bool operator==(const StepPolicy&, const StepPolicy&) = default;
};

/// How the Lipschitz constant of the smooth W-part is bounded when the step
/// size is chosen automatically.
enum class LipschitzBound {
  /// 1 + 2 sigma * sum_i ||X_i||_F^2. Cheap and always an upper bound.
  trace,
  /// 1 + 2 sigma * ||A||_2^2 with the operator norm from power iteration.
  spectral,
};

/// z-block update. `exact` is the global minimiser of the z subproblem;
/// `paper` reproduces the published closed-form constants for comparison.
enum class ZUpdateRule { exact, paper };

/// Starting point when no initial state is supplied. Every policy starts
/// from W = 0, b = 0.
enum class InitPolicy {
  /// z = 1, the margin residual of the zero model.
  residual,
  /// z = 0: every sample starts on the active (margin) branch.
  zero_slack,
  /// z = 1, then a warm-start run of the same scheme with z restricted to
  /// z <= 0 (the β → ∞ limit, a squared-hinge SMM) before the main run.
  squared_hinge,
};

struct Hyperparams {
  double beta = 0.1;
  double sigma = 0.1;
  Index rank = 4;
  double tau1 = 1e-3;
  double tau2 = 1e-3;
  double tau3 = 1e-3;
  int maxit = 1000;
  double tol_step = 1e-6;
  double tol_obj = 1e-8;
  StepPolicy step{};
  LipschitzBound lipschitz = LipschitzBound::spectral;
  ZUpdateRule z_update = ZUpdateRule::exact;
  InitPolicy init = InitPolicy::squared_hinge;
  std::uint64_t seed = 1;

  /// Throws InvalidArgument when a constraint is violated for p x q data.
  void validate(Index p, Index q) const;
  double tau_min() const;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Iterate (W, z, b) of the alternating scheme.
struct ModelState {
  Matrix w;
  double b = 0.0;
  Vector z;
  std::size_t iter = 0;
};

struct IterationRecord {
  std::size_t iter = 0;
  double objective = 0.0;
  double w_step = 0.0;
  double z_step = 0.0;
  double b_step = 0.0;
  int halvings = 0;
  bool w_stalled = false;
  /// Full-iteration sufficient decrease with tau_min held.
  bool sufficient_decrease = true;
};

enum class SolverStatus { converged, max_iter, stalled };

const char* to_string(SolverStatus s);
const char* to_string(InitPolicy p);
const char* to_string(LipschitzBound b);
const char* to_string(ZUpdateRule r);
const char* to_string(StepPolicy::Kind k);

/// Inverse of to_string; throws InvalidArgument on unknown names.
InitPolicy parse_init_policy(const std::string& s);
LipschitzBound parse_lipschitz_bound(const std::string& s);
ZUpdateRule parse_z_update(const std::string& s);
SolverStatus parse_solver_status(const std::string& s);

struct SolverTrace {
  /// records[0] describes the initial state (all steps zero).
  std::vector<IterationRecord> records;
  SolverStatus status = SolverStatus::max_iter;
  std::size_t stalled_w_blocks = 0;
  std::size_t decrease_violations = 0;
  /// Iterations spent in the squared-hinge warm start (not in `records`).
  std::size_t warm_start_iterations = 0;

  /// Largest increase between consecutive objective values (0 if monotone).
  double max_objective_increase() const;
};

/// ⟨W, X⟩ + b.
double decision_score(const Matrix& w, double b, const Matrix& x);

/// v_i = 1 - y_i (⟨W, X_i⟩ + b), in dataset order.
Vector margin_residuals(const Matrix& w, double b, const Dataset& data);

/// Number of strictly positive entries.
std::size_t heaviside_count(const Vector& z);

/// ½‖W‖² + β‖z₊‖₀ + σ‖z − v(W, b)‖².
double penalized_objective(const ModelState& state, const Dataset& data,
                           const Hyperparams& hp);

/// Elementwise minimiser of γ‖z₊‖₀ + ½‖z − x‖²: entries in (0, √(2γ)] go to
/// zero (the tie at √(2γ) resolves to zero), everything else is kept.
Vector prox_heaviside(const Vector& x, double gamma);

/// +1 when ⟨W, X⟩ + b > 0, otherwise -1.
int predict(const Matrix& w, double b, const Matrix& x);

}  // namespace hlsmm
