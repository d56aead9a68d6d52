#include "hlsmm/model.hpp"

#include "hlsmm/error.hpp"

#include <algorithm>
#include <cmath>

namespace hlsmm {

namespace {

std::string shape_str(Index p, Index q) {
  return std::to_string(p) + "x" + std::to_string(q);
}

void check_shape(const Matrix& w, const Dataset& data, const char* op) {
  if (w.rows() != data.rows() || w.cols() != data.cols()) {
    throw InvalidArgument(std::string(op) + ": model is " + shape_str(w.rows(), w.cols()) +
                          " but data is " + shape_str(data.rows(), data.cols()));
  }
}

}  // namespace

Dataset::Dataset(std::vector<MatrixSample> samples, std::string name, std::string provenance)
    : samples_(std::move(samples)), name_(std::move(name)), provenance_(std::move(provenance)) {
  if (samples_.empty()) throw InvalidArgument("dataset must contain at least one sample");
  const Index p = samples_.front().x.rows();
  const Index q = samples_.front().x.cols();
  if (p < 1 || q < 1) throw InvalidArgument("dataset samples must be non-empty matrices");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (s.x.rows() != p || s.x.cols() != q) {
      throw InvalidArgument("sample " + std::to_string(i) + " has shape " +
                            shape_str(s.x.rows(), s.x.cols()) + ", expected " + shape_str(p, q));
    }
    if (s.y != 1 && s.y != -1) {
      throw InvalidArgument("sample " + std::to_string(i) + " has label " +
                            std::to_string(s.y) + ", expected -1 or +1");
    }
    if (!s.x.allFinite()) {
      throw InvalidInput("sample " + std::to_string(i) + " has non-finite entries");
    }
  }
}

std::size_t Dataset::count_label(int label) const {
  return static_cast<std::size_t>(std::count_if(
      samples_.begin(), samples_.end(), [label](const MatrixSample& s) { return s.y == label; }));
}

Vector Dataset::labels() const {
  Vector y(static_cast<Index>(samples_.size()));
  for (std::size_t i = 0; i < samples_.size(); ++i) y(static_cast<Index>(i)) = samples_[i].y;
  return y;
}

Dataset Dataset::with_provenance(const std::string& step) const {
  Dataset out = *this;
  out.provenance_ = provenance_.empty() ? step : provenance_ + "; " + step;
  return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices, const std::string& step) const {
  std::vector<MatrixSample> picked;
  picked.reserve(indices.size());
  for (auto i : indices) picked.push_back(samples_.at(i));
  return Dataset(std::move(picked), name_, provenance_.empty() ? step : provenance_ + "; " + step);
}

void Hyperparams::validate(Index p, Index q) const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument(std::string(name) + " must be a positive finite number");
    }
  };
  positive(beta, "beta");
  positive(sigma, "sigma");
  positive(tau1, "tau1");
  positive(tau2, "tau2");
  positive(tau3, "tau3");
  positive(tol_step, "tol_step");
  positive(tol_obj, "tol_obj");
  if (maxit < 0) throw InvalidArgument("maxit must be non-negative");
  if (rank < 1 || rank >= std::min(p, q)) {
    throw InvalidArgument("rank " + std::to_string(rank) + " must satisfy 1 <= r < min(p, q) = " +
                          std::to_string(std::min(p, q)) + " for " + shape_str(p, q) + " samples");
  }
  if (step.alpha0 < 0.0 || !std::isfinite(step.alpha0)) {
    throw InvalidArgument("step size must be a non-negative finite number");
  }
  if (step.kind == StepPolicy::Kind::fixed && step.alpha0 == 0.0) {
    throw InvalidArgument("fixed step policy needs a positive step size");
  }
  if (step.kind == StepPolicy::Kind::backtracking) {
    if (!(step.shrink > 0.0 && step.shrink < 1.0)) {
      throw InvalidArgument("backtracking shrink factor must lie in (0, 1)");
    }
    if (step.max_halvings < 0) throw InvalidArgument("max_halvings must be non-negative");
  }
}

double Hyperparams::tau_min() const { return std::min({tau1, tau2, tau3}); }

const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::converged: return "converged";
    case SolverStatus::max_iter: return "max_iter";
    case SolverStatus::stalled: return "stalled";
  }
  return "unknown";
}

const char* to_string(InitPolicy p) {
  switch (p) {
    case InitPolicy::residual: return "residual";
    case InitPolicy::zero_slack: return "zero_slack";
    case InitPolicy::squared_hinge: return "squared_hinge";
  }
  return "unknown";
}

const char* to_string(LipschitzBound b) {
  return b == LipschitzBound::trace ? "trace" : "spectral";
}

const char* to_string(ZUpdateRule r) { return r == ZUpdateRule::exact ? "exact" : "paper"; }

const char* to_string(StepPolicy::Kind k) {
  return k == StepPolicy::Kind::fixed ? "fixed" : "backtracking";
}

InitPolicy parse_init_policy(const std::string& s) {
  for (auto p : {InitPolicy::residual, InitPolicy::zero_slack, InitPolicy::squared_hinge}) {
    if (s == to_string(p)) return p;
  }
  throw InvalidArgument("unknown initialisation '" + s + "'");
}

LipschitzBound parse_lipschitz_bound(const std::string& s) {
  if (s == "trace") return LipschitzBound::trace;
  if (s == "spectral") return LipschitzBound::spectral;
  throw InvalidArgument("unknown Lipschitz bound '" + s + "'");
}

ZUpdateRule parse_z_update(const std::string& s) {
  if (s == "exact") return ZUpdateRule::exact;
  if (s == "paper") return ZUpdateRule::paper;
  throw InvalidArgument("unknown z update '" + s + "'");
}

SolverStatus parse_solver_status(const std::string& s) {
  for (auto st : {SolverStatus::converged, SolverStatus::max_iter, SolverStatus::stalled}) {
    if (s == to_string(st)) return st;
  }
  throw InvalidArgument("unknown solver status '" + s + "'");
}

double SolverTrace::max_objective_increase() const {
  double worst = 0.0;
  for (std::size_t k = 1; k < records.size(); ++k) {
    worst = std::max(worst, records[k].objective - records[k - 1].objective);
  }
  return worst;
}

double decision_score(const Matrix& w, double b, const Matrix& x) { return fro_inner(w, x) + b; }

Vector margin_residuals(const Matrix& w, double b, const Dataset& data) {
  check_shape(w, data, "margin_residuals");
  Vector v(static_cast<Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    v(static_cast<Index>(i)) = 1.0 - s.y * (w.cwiseProduct(s.x).sum() + b);
  }
  return v;
}

std::size_t heaviside_count(const Vector& z) {
  return static_cast<std::size_t>((z.array() > 0.0).count());
}

double penalized_objective(const ModelState& state, const Dataset& data, const Hyperparams& hp) {
  if (state.z.size() != static_cast<Index>(data.size())) {
    throw InvalidArgument("penalized_objective: z has length " + std::to_string(state.z.size()) +
                          " but dataset has " + std::to_string(data.size()) + " samples");
  }
  const Vector v = margin_residuals(state.w, state.b, data);
  return 0.5 * state.w.squaredNorm() + hp.beta * static_cast<double>(heaviside_count(state.z)) +
         hp.sigma * (state.z - v).squaredNorm();
}

Vector prox_heaviside(const Vector& x, double gamma) {
  if (!(gamma > 0.0)) throw InvalidArgument("prox_heaviside: gamma must be positive");
  const double threshold = std::sqrt(2.0 * gamma);
  Vector out = x;
  for (Index i = 0; i < out.size(); ++i) {
    if (out(i) > 0.0 && out(i) <= threshold) out(i) = 0.0;
  }
  return out;
}

int predict(const Matrix& w, double b, const Matrix& x) {
  return decision_score(w, b, x) > 0.0 ? 1 : -1;
}

}  // namespace hlsmm
