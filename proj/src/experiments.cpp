#include "hlsmm/experiments.hpp"

#include "hlsmm/data.hpp"
#include "hlsmm/error.hpp"
#include "hlsmm/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <tuple>

namespace hlsmm {

namespace fs = std::filesystem;

Metrics& Metrics::operator+=(const Metrics& o) {
  tp += o.tp;
  tn += o.tn;
  fp += o.fp;
  fn += o.fn;
  accuracy = total() ? 100.0 * static_cast<double>(tp + tn) / static_cast<double>(total()) : 0.0;
  return *this;
}

Metrics evaluate(const Matrix& w, double b, const Dataset& test) {
  if (w.rows() != test.rows() || w.cols() != test.cols()) {
    throw InvalidArgument("model is " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                          " but samples are " + std::to_string(test.rows()) + "x" +
                          std::to_string(test.cols()));
  }
  Metrics m;
  for (const auto& s : test.samples()) {
    const int pred = predict(w, b, s.x);
    if (s.y == 1) (pred == 1 ? m.tp : m.fn)++;
    else (pred == -1 ? m.tn : m.fp)++;
  }
  m.accuracy = 100.0 * static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
  return m;
}

Metrics evaluate(const ModelState& model, const Dataset& test) {
  return evaluate(model.w, model.b, test);
}

std::string format_accuracy(double accuracy) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", accuracy);
  return buf;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------

ParamGrid ParamGrid::paper() {
  return {{0.01, 0.1, 0.5}, {0.01, 0.1}, {4, 10}, {1e-4, 1e-3, 1e-2}, {1e-4, 1e-3, 1e-2},
          {1e-4, 1e-3, 1e-2}};
}

ParamGrid ParamGrid::single(const Hyperparams& hp) {
  return {{hp.beta}, {hp.sigma}, {hp.rank}, {hp.tau1}, {hp.tau2}, {hp.tau3}};
}

std::size_t ParamGrid::size() const {
  return beta.size() * sigma.size() * rank.size() * tau1.size() * tau2.size() * tau3.size();
}

std::vector<Hyperparams> ParamGrid::expand(const Hyperparams& base) const {
  std::vector<Hyperparams> out;
  out.reserve(size());
  for (double b : beta)
    for (double s : sigma)
      for (Index r : rank)
        for (double t1 : tau1)
          for (double t2 : tau2)
            for (double t3 : tau3) {
              Hyperparams hp = base;
              hp.beta = b;
              hp.sigma = s;
              hp.rank = r;
              hp.tau1 = t1;
              hp.tau2 = t2;
              hp.tau3 = t3;
              out.push_back(hp);
            }
  return out;
}

const char* to_string(TuningMode m) {
  return m == TuningMode::tune_on_test ? "tune_on_test" : "cross_validation";
}

std::optional<std::size_t> select_best(const std::vector<GridRow>& rows) {
  auto key = [](const Hyperparams& h) {
    return std::make_tuple(h.rank, h.beta, h.sigma, h.tau1, h.tau2, h.tau3);
  };
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].metrics) continue;
    if (!best) {
      best = i;
      continue;
    }
    const double a = rows[i].metrics->accuracy;
    const double a_best = rows[*best].metrics->accuracy;
    if (a > a_best || (a == a_best && key(rows[i].hp) < key(rows[*best].hp))) best = i;
  }
  return best;
}

namespace {

void check_grid(const ParamGrid& grid) {
  if (grid.size() == 0) throw InvalidArgument("every parameter grid needs at least one value");
}

// Evaluates `n` independent tasks, possibly concurrently. Each task writes
// only its own slot, so the result order is the task order.
template <typename Task>
void run_tasks(std::size_t n, int jobs, Task&& task) {
  const int threads = std::max(1, jobs);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (threads > 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    task(static_cast<std::size_t>(i));
  }
}

GridRow fit_and_score(const Dataset& train, const Dataset& validation, const Hyperparams& hp) {
  GridRow row;
  row.hp = hp;
  try {
    const FitResult fr = fit(train, hp);
    row.metrics = evaluate(fr.model, validation);
    row.objective = fr.trace.records.back().objective;
    row.iterations = fr.model.iter;
    row.status = fr.trace.status;
    row.decrease_violations = fr.trace.decrease_violations;
    row.max_objective_increase = fr.trace.max_objective_increase();
    row.wall_time = fr.wall_time;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

}  // namespace

GridSearchResult grid_search(const Dataset& train, const Dataset& validation,
                             const ParamGrid& grid, const Hyperparams& base,
                             const SweepOptions& options) {
  check_grid(grid);
  const auto configs = grid.expand(base);
  GridSearchResult result;
  result.mode = TuningMode::tune_on_test;
  result.rows.resize(configs.size());
  run_tasks(configs.size(), options.jobs, [&](std::size_t i) {
    result.rows[i] = fit_and_score(train, validation, configs[i]);
  });
  result.best = select_best(result.rows);
  return result;
}

GridSearchResult grid_search_cv(const Dataset& train, const ParamGrid& grid,
                                const Hyperparams& base, int folds, std::uint64_t seed,
                                const SweepOptions& options) {
  check_grid(grid);
  const auto fold_idx = stratified_folds(train, folds, seed);
  std::vector<Dataset> fold_train, fold_val;
  for (std::size_t f = 0; f < fold_idx.size(); ++f) {
    std::vector<std::size_t> rest;
    for (std::size_t g = 0; g < fold_idx.size(); ++g) {
      if (g != f) rest.insert(rest.end(), fold_idx[g].begin(), fold_idx[g].end());
    }
    std::sort(rest.begin(), rest.end());
    const std::string tag = "fold " + std::to_string(f + 1) + "/" + std::to_string(folds);
    fold_train.push_back(train.subset(rest, tag + " [train]"));
    fold_val.push_back(train.subset(fold_idx[f], tag + " [validation]"));
  }

  const auto configs = grid.expand(base);
  GridSearchResult result;
  result.mode = TuningMode::cross_validation;
  result.rows.resize(configs.size());
  run_tasks(configs.size(), options.jobs, [&](std::size_t i) {
    GridRow row;
    row.hp = configs[i];
    Metrics total;
    double objective_sum = 0.0;
    row.status = SolverStatus::converged;
    for (std::size_t f = 0; f < fold_train.size(); ++f) {
      GridRow part = fit_and_score(fold_train[f], fold_val[f], configs[i]);
      if (!part.metrics) {
        row.error = "fold " + std::to_string(f + 1) + ": " + part.error;
        break;
      }
      total += *part.metrics;
      objective_sum += part.objective;
      row.iterations += part.iterations;
      row.wall_time += part.wall_time;
      row.decrease_violations += part.decrease_violations;
      row.max_objective_increase = std::max(row.max_objective_increase, part.max_objective_increase);
      if (part.status != SolverStatus::converged) row.status = part.status;
    }
    if (row.error.empty()) {
      row.metrics = total;
      row.objective = objective_sum / static_cast<double>(fold_train.size());
    }
    result.rows[i] = std::move(row);
  });
  result.best = select_best(result.rows);
  return result;
}

// ---------------------------------------------------------------------------

const char* to_string(NoiseKind k) { return k == NoiseKind::gaussian ? "gaussian" : "salt_pepper"; }
const char* to_string(NoiseTarget t) { return t == NoiseTarget::test ? "test" : "both"; }

NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "gaussian") return NoiseKind::gaussian;
  if (s == "salt_pepper" || s == "salt-pepper") return NoiseKind::salt_pepper;
  throw InvalidArgument("unknown noise kind '" + s + "'");
}

NoiseTarget parse_noise_target(const std::string& s) {
  if (s == "test") return NoiseTarget::test;
  if (s == "both") return NoiseTarget::both;
  throw InvalidArgument("unknown noise target '" + s + "'");
}

Dataset add_noise(const Dataset& data, NoiseKind kind, double level, std::uint64_t seed) {
  return kind == NoiseKind::gaussian ? add_gaussian_noise(data, level, seed)
                                     : add_salt_pepper_noise(data, level, seed);
}

namespace {

void check_levels(NoiseKind kind, const std::vector<double>& levels,
                  const std::vector<std::uint64_t>& seeds) {
  if (levels.empty() || seeds.empty()) throw InvalidArgument("noise sweep needs levels and seeds");
  for (double l : levels) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw InvalidArgument("noise levels must be >= 0");
    if (kind == NoiseKind::salt_pepper && l > 1.0) {
      throw InvalidArgument("salt-and-pepper levels must lie in [0, 1]");
    }
  }
}

void summarise(NoiseSweepResult& r, const std::vector<double>& levels, std::size_t n_seeds) {
  for (std::size_t l = 0; l < levels.size(); ++l) {
    LevelMean m;
    m.level = levels[l];
    double sum = 0.0;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const auto& row = r.rows[l * n_seeds + s];
      if (!row.metrics) continue;
      sum += row.metrics->accuracy;
      ++m.completed;
    }
    m.accuracy = m.completed ? sum / static_cast<double>(m.completed) : 0.0;
    r.means.push_back(m);
  }
}

}  // namespace

NoiseSweepResult noise_sweep(const ModelState& model, const Hyperparams& hp, const Dataset& test,
                             NoiseKind kind, const std::vector<double>& levels,
                             const std::vector<std::uint64_t>& seeds) {
  check_levels(kind, levels, seeds);
  NoiseSweepResult r;
  r.hp = hp;
  r.kind = kind;
  r.target = NoiseTarget::test;
  for (double level : levels) {
    for (std::uint64_t seed : seeds) {
      NoiseRow row;
      row.level = level;
      row.seed = seed;
      row.iterations = model.iter;
      try {
        row.metrics = evaluate(model, add_noise(test, kind, level, seed));
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      r.rows.push_back(std::move(row));
    }
  }
  summarise(r, levels, seeds.size());
  return r;
}

NoiseSweepResult noise_sweep(const Dataset& train, const Dataset& test, const Hyperparams& hp,
                             NoiseKind kind, const std::vector<double>& levels,
                             const std::vector<std::uint64_t>& seeds, NoiseTarget target,
                             const SweepOptions& options) {
  check_levels(kind, levels, seeds);
  if (target == NoiseTarget::test) {
    const FitResult fr = fit(train, hp);
    NoiseSweepResult r = noise_sweep(fr.model, hp, test, kind, levels, seeds);
    for (auto& row : r.rows) {
      row.objective = fr.trace.records.back().objective;
      row.decrease_violations = fr.trace.decrease_violations;
      row.max_objective_increase = fr.trace.max_objective_increase();
      row.wall_time = fr.wall_time;
    }
    return r;
  }

  NoiseSweepResult r;
  r.hp = hp;
  r.kind = kind;
  r.target = target;
  r.rows.resize(levels.size() * seeds.size());
  run_tasks(r.rows.size(), options.jobs, [&](std::size_t i) {
    NoiseRow& row = r.rows[i];
    row.level = levels[i / seeds.size()];
    row.seed = seeds[i % seeds.size()];
    try {
      const Dataset noisy_train = add_noise(train, kind, row.level, derive_seed(row.seed, 1));
      const FitResult fr = fit(noisy_train, hp);
      row.metrics = evaluate(fr.model, add_noise(test, kind, row.level, row.seed));
      row.objective = fr.trace.records.back().objective;
      row.iterations = fr.model.iter;
      row.decrease_violations = fr.trace.decrease_violations;
      row.max_objective_increase = fr.trace.max_objective_increase();
      row.wall_time = fr.wall_time;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });
  summarise(r, levels, seeds.size());
  return r;
}

// ---------------------------------------------------------------------------

std::vector<SensitivityCell> sensitivity_grid(const Dataset& train, const Dataset& test,
                                              const Hyperparams& base,
                                              const std::vector<Index>& r_values,
                                              const std::vector<double>& beta_values,
                                              const SweepOptions& options) {
  if (r_values.empty() || beta_values.empty()) {
    throw InvalidArgument("sensitivity grid needs at least one r and one beta");
  }
  std::vector<SensitivityCell> cells(r_values.size() * beta_values.size());
  run_tasks(cells.size(), options.jobs, [&](std::size_t i) {
    SensitivityCell& c = cells[i];
    c.rank = r_values[i / beta_values.size()];
    c.beta = beta_values[i % beta_values.size()];
    Hyperparams hp = base;
    hp.rank = c.rank;
    hp.beta = c.beta;
    GridRow row = fit_and_score(train, test, hp);
    c.metrics = row.metrics;
    c.error = row.error;
  });
  return cells;
}

// ---------------------------------------------------------------------------

namespace {

// Error messages go into a CSV field; quote them and drop line breaks.
std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    else if (ch == '\n' || ch == '\r') out += ' ';
    else out += ch;
  }
  return out + "\"";
}

void write_metrics(std::ostream& out, const std::optional<Metrics>& m) {
  if (m) {
    out << m->tp << ',' << m->tn << ',' << m->fp << ',' << m->fn << ','
        << format_accuracy(m->accuracy);
  } else {
    out << ",,,,";
  }
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

void write_grid_csv(std::ostream& out, const GridSearchResult& result, bool timing) {
  out << "config,mode,beta,sigma,rank,tau1,tau2,tau3,tp,tn,fp,fn,accuracy,objective,iterations,"
         "status,selected";
  if (timing) out << ",wall_time";
  out << ",error\n";
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& r = result.rows[i];
    out << i << ',' << to_string(result.mode) << ',' << format_number(r.hp.beta) << ','
        << format_number(r.hp.sigma) << ',' << r.hp.rank << ',' << format_number(r.hp.tau1) << ','
        << format_number(r.hp.tau2) << ',' << format_number(r.hp.tau3) << ',';
    write_metrics(out, r.metrics);
    out << ',';
    if (r.metrics) {
      out << format_number(r.objective) << ',' << r.iterations << ',' << to_string(r.status);
    } else {
      out << ",,error";
    }
    out << ',' << (result.best && *result.best == i ? 1 : 0);
    if (timing) out << ',' << (r.metrics ? format_number(r.wall_time) : "");
    out << ',' << (r.error.empty() ? "" : csv_quote(r.error)) << '\n';
  }
}

void write_noise_csv(std::ostream& out, const NoiseSweepResult& result, bool timing) {
  out << "kind,target,level,seed,beta,sigma,rank,tau1,tau2,tau3,tp,tn,fp,fn,accuracy,objective,"
         "iterations";
  if (timing) out << ",wall_time";
  out << ",error\n";
  const auto& hp = result.hp;
  for (const auto& r : result.rows) {
    out << to_string(result.kind) << ',' << to_string(result.target) << ','
        << format_number(r.level) << ',' << r.seed << ',' << format_number(hp.beta) << ','
        << format_number(hp.sigma) << ',' << hp.rank << ',' << format_number(hp.tau1) << ','
        << format_number(hp.tau2) << ',' << format_number(hp.tau3) << ',';
    write_metrics(out, r.metrics);
    out << ',';
    if (r.metrics) out << (r.objective ? format_number(*r.objective) : "") << ',' << r.iterations;
    else out << ',';
    if (timing) out << ',' << (r.metrics ? format_number(r.wall_time) : "");
    out << ',' << (r.error.empty() ? "" : csv_quote(r.error)) << '\n';
  }
}

void write_noise_means_csv(std::ostream& out, const NoiseSweepResult& result) {
  out << "kind,target,level,mean_accuracy,completed\n";
  for (const auto& m : result.means) {
    out << to_string(result.kind) << ',' << to_string(result.target) << ','
        << format_number(m.level) << ',' << format_accuracy(m.accuracy) << ',' << m.completed
        << '\n';
  }
}

void write_sensitivity_csv(std::ostream& out, const std::vector<SensitivityCell>& cells) {
  out << "rank,beta,tp,tn,fp,fn,accuracy,error\n";
  for (const auto& c : cells) {
    out << c.rank << ',' << format_number(c.beta) << ',';
    write_metrics(out, c.metrics);
    out << ',' << (c.error.empty() ? "" : csv_quote(c.error)) << '\n';
  }
}

void write_trace_csv(std::ostream& out, const SolverTrace& trace) {
  out << "iter,objective,w_step_norm,z_step_norm,b_step,halvings\n";
  for (const auto& r : trace.records) {
    out << r.iter << ',' << format_number(r.objective) << ',' << format_number(r.w_step) << ','
        << format_number(r.z_step) << ',' << format_number(r.b_step) << ',' << r.halvings << '\n';
  }
}

void export_convergence_trace(const SolverTrace& trace, const fs::path& path) {
  auto out = open_output(path);
  write_trace_csv(out, trace);
  finish(out, path);
}

std::vector<std::uint8_t> heatmap_pixels(const Matrix& w) {
  std::vector<std::uint8_t> px;
  px.reserve(static_cast<std::size_t>(w.size()));
  const double lo = w.size() ? w.minCoeff() : 0.0;
  const double hi = w.size() ? w.maxCoeff() : 0.0;
  for (Index r = 0; r < w.rows(); ++r) {
    for (Index c = 0; c < w.cols(); ++c) {
      if (!(hi > lo)) {
        px.push_back(128);
      } else {
        const double t = (w(r, c) - lo) / (hi - lo);
        px.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * t), 0L, 255L)));
      }
    }
  }
  return px;
}

HeatmapFiles export_weight_heatmap(const Matrix& w, const fs::path& stem) {
  HeatmapFiles files{fs::path(stem).concat(".csv"), fs::path(stem).concat(".pgm")};
  {
    auto out = open_output(files.csv);
    char buf[40];
    for (Index r = 0; r < w.rows(); ++r) {
      for (Index c = 0; c < w.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", w(r, c));
        out << (c ? "," : "") << buf;
      }
      out << '\n';
    }
    finish(out, files.csv);
  }
  {
    auto out = open_output(files.pgm);
    out << "P5\n" << w.cols() << ' ' << w.rows() << "\n255\n";
    const auto px = heatmap_pixels(w);
    out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
    finish(out, files.pgm);
  }
  return files;
}

}  // namespace hlsmm
