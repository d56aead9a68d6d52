#pragma once

#include "hlsmm/model.hpp"
#include "hlsmm/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace hlsmm {

/// Confusion counts with +1 as the positive class. accuracy is in percent.
struct Metrics {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double accuracy = 0.0;

  std::size_t total() const { return tp + tn + fp + fn; }
  Metrics& operator+=(const Metrics& o);
};

Metrics evaluate(const Matrix& w, double b, const Dataset& test);
Metrics evaluate(const ModelState& model, const Dataset& test);

/// Accuracy with two decimals, as reported in tables.
std::string format_accuracy(double accuracy);

// ---------------------------------------------------------------------------
// Grid search

struct ParamGrid {
  std::vector<double> beta;
  std::vector<double> sigma;
  std::vector<Index> rank;
  std::vector<double> tau1;
  std::vector<double> tau2;
  std::vector<double> tau3;

  /// β ∈ {0.01, 0.1, 0.5}, σ ∈ {0.01, 0.1}, r ∈ {4, 10},
  /// τ₁, τ₂, τ₃ ∈ {1e-4, 1e-3, 1e-2}.
  static ParamGrid paper();
  /// One-point grid at hp.
  static ParamGrid single(const Hyperparams& hp);

  std::size_t size() const;
  /// Cartesian product in the order β, σ, r, τ₁, τ₂, τ₃ (β outermost); every
  /// other field is copied from `base`.
  std::vector<Hyperparams> expand(const Hyperparams& base) const;
};

enum class TuningMode { tune_on_test, cross_validation };

const char* to_string(TuningMode m);

struct GridRow {
  Hyperparams hp;
  /// Validation metrics; for cross-validation the fold confusion counts are
  /// summed. Empty when the configuration failed.
  std::optional<Metrics> metrics;
  /// Final objective (mean over folds for cross-validation).
  double objective = 0.0;
  /// Main-phase iterations (summed over folds).
  std::size_t iterations = 0;
  SolverStatus status = SolverStatus::max_iter;
  /// Iterations failing the sufficient-decrease test, and the largest
  /// objective increase seen (summed / maximised over folds).
  std::size_t decrease_violations = 0;
  double max_objective_increase = 0.0;
  double wall_time = 0.0;
  std::string error;
};

struct GridSearchResult {
  TuningMode mode = TuningMode::tune_on_test;
  std::vector<GridRow> rows;
  /// Index of the selected row; empty if every configuration failed.
  std::optional<std::size_t> best;
};

struct SweepOptions {
  /// Concurrent fits. Output order never depends on it.
  int jobs = 1;
};

/// Fits every configuration on `train` and scores it on `validation`.
GridSearchResult grid_search(const Dataset& train, const Dataset& validation,
                             const ParamGrid& grid, const Hyperparams& base,
                             const SweepOptions& options = {});

/// k-fold stratified cross-validation on `train` (fold split from `seed`).
GridSearchResult grid_search_cv(const Dataset& train, const ParamGrid& grid,
                                const Hyperparams& base, int folds, std::uint64_t seed,
                                const SweepOptions& options = {});

/// Highest accuracy wins; ties go to the smallest (r, β, σ, τ₁, τ₂, τ₃).
std::optional<std::size_t> select_best(const std::vector<GridRow>& rows);

// ---------------------------------------------------------------------------
// Noise robustness

enum class NoiseKind { gaussian, salt_pepper };
/// Which split is corrupted. `both` refits on noisy training data per row.
enum class NoiseTarget { test, both };

const char* to_string(NoiseKind k);
const char* to_string(NoiseTarget t);
NoiseKind parse_noise_kind(const std::string& s);
NoiseTarget parse_noise_target(const std::string& s);

Dataset add_noise(const Dataset& data, NoiseKind kind, double level, std::uint64_t seed);

struct NoiseRow {
  double level = 0.0;
  std::uint64_t seed = 0;
  std::optional<Metrics> metrics;
  /// Final objective of the fit; unknown when a ready model was supplied.
  std::optional<double> objective;
  std::size_t iterations = 0;
  std::size_t decrease_violations = 0;
  double max_objective_increase = 0.0;
  double wall_time = 0.0;
  std::string error;
};

struct LevelMean {
  double level = 0.0;
  /// Mean accuracy over the seeds that completed.
  double accuracy = 0.0;
  std::size_t completed = 0;
};

struct NoiseSweepResult {
  Hyperparams hp;
  NoiseKind kind = NoiseKind::gaussian;
  NoiseTarget target = NoiseTarget::test;
  std::vector<NoiseRow> rows;  // level-major, then seed
  std::vector<LevelMean> means;
};

/// Rows for every (level, seed). The noise seed of a row is its seed; with
/// target `both` the training noise uses derive_seed(seed, 1).
NoiseSweepResult noise_sweep(const Dataset& train, const Dataset& test, const Hyperparams& hp,
                             NoiseKind kind, const std::vector<double>& levels,
                             const std::vector<std::uint64_t>& seeds,
                             NoiseTarget target = NoiseTarget::test,
                             const SweepOptions& options = {});

/// Same sweep for an already fitted model (target `test` only).
NoiseSweepResult noise_sweep(const ModelState& model, const Hyperparams& hp, const Dataset& test,
                             NoiseKind kind, const std::vector<double>& levels,
                             const std::vector<std::uint64_t>& seeds);

// ---------------------------------------------------------------------------
// Sensitivity

struct SensitivityCell {
  Index rank = 0;
  double beta = 0.0;
  std::optional<Metrics> metrics;
  std::string error;
};

/// Test accuracy over r x β (r-major), all other settings from `base`.
std::vector<SensitivityCell> sensitivity_grid(const Dataset& train, const Dataset& test,
                                              const Hyperparams& base,
                                              const std::vector<Index>& r_values,
                                              const std::vector<double>& beta_values,
                                              const SweepOptions& options = {});

// ---------------------------------------------------------------------------
// Output
//
// CSV numbers use the shortest representation that round-trips, accuracies two
// decimals. Wall-clock columns are only written when `timing` is set, so that
// repeated runs produce identical files.

void write_grid_csv(std::ostream& out, const GridSearchResult& result, bool timing = false);
void write_noise_csv(std::ostream& out, const NoiseSweepResult& result, bool timing = false);
void write_noise_means_csv(std::ostream& out, const NoiseSweepResult& result);
void write_sensitivity_csv(std::ostream& out, const std::vector<SensitivityCell>& cells);
void write_trace_csv(std::ostream& out, const SolverTrace& trace);

/// Columns iter, objective, w_step_norm, z_step_norm, b_step, halvings.
void export_convergence_trace(const SolverTrace& trace, const std::filesystem::path& path);

struct HeatmapFiles {
  std::filesystem::path csv;
  std::filesystem::path pgm;
};

/// Writes `stem`.csv (17 significant digits) and `stem`.pgm (binary 8-bit,
/// min-max scaled, a constant W maps to 128).
HeatmapFiles export_weight_heatmap(const Matrix& w, const std::filesystem::path& stem);

/// Gray levels used for the PGM, row-major.
std::vector<std::uint8_t> heatmap_pixels(const Matrix& w);

/// Shortest round-trip decimal representation.
std::string format_number(double v);

}  // namespace hlsmm
