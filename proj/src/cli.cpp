#include "hlsmm/cli.hpp"

#include "hlsmm/data.hpp"
#include "hlsmm/error.hpp"
#include "hlsmm/experiments.hpp"
#include "hlsmm/kkt.hpp"
#include "hlsmm/model_file.hpp"
#include "hlsmm/solver.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace hlsmm::cli {

namespace {

using ojson = nlohmann::ordered_json;

// Bad flag values detected after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint64_t env_seed() {
  const char* v = std::getenv("HLSMM_SEED");
  if (!v || !*v) return 1;
  std::uint64_t seed = 0;
  const std::string_view s(v);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw UsageError("HLSMM_SEED must be an unsigned integer, got '" + std::string(s) + "'");
  }
  return seed;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

ojson metrics_json(const Metrics& m) {
  return {{"tp", m.tp}, {"tn", m.tn}, {"fp", m.fp}, {"fn", m.fn}, {"accuracy", round2(m.accuracy)}};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  return f;
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  auto f = open_out(path);
  body(f);
  f.flush();
  if (!f) throw IoError("failed writing " + path);
}

// ---------------------------------------------------------------------------
// Shared option groups

struct DataArgs {
  std::string manifest;
  std::string data;
  std::string format = "csv";
  std::size_t label_column = 0;
  bool has_header = false;
  std::vector<Index> reshape;
  bool pad = false;
  std::string normalize = "none";
  double split = 0.0;
  std::uint64_t split_seed = 1;
  bool no_stratify = false;

  CLI::Option* split_seed_opt = nullptr;

  void attach(CLI::App& app) {
    app.add_option("--manifest", manifest, "Dataset manifest (JSON)");
    app.add_option("--data", data, "Dataset file");
    app.add_option("--format", format, "Dataset format")
        ->check(CLI::IsMember({"csv", "smm1"}))
        ->capture_default_str();
    app.add_option("--label-column", label_column, "CSV label column (0-based)")
        ->capture_default_str();
    app.add_flag("--has-header", has_header, "CSV has a header row");
    app.add_option("--reshape", reshape, "Refill each sample as a P x Q matrix (row-major)")
        ->expected(2)
        ->type_name("P Q");
    app.add_flag("--pad", pad, "Allow P*Q above the feature count (zero fill)");
    app.add_option("--normalize", normalize, "Normalisation")
        ->check(CLI::IsMember({"none", "per_sample_zscore", "feature_zscore"}))
        ->capture_default_str();
    app.add_option("--split", split, "Train fraction of a train/test split (0 = no split)")
        ->capture_default_str();
    split_seed_opt = app.add_option("--split-seed", split_seed,
                                    "Split seed (default: the run seed)");
    app.add_flag("--no-stratify", no_stratify, "Plain instead of stratified split");
  }

  PreparedData load(std::uint64_t seed) const {
    if (!manifest.empty() && !data.empty()) {
      throw UsageError("--manifest and --data are mutually exclusive");
    }
    if (manifest.empty() && data.empty()) throw UsageError("one of --manifest or --data is required");
    if (split != 0.0 && !(split > 0.0 && split < 1.0)) throw UsageError("--split must lie in (0, 1)");

    DatasetManifest m;
    if (!manifest.empty()) {
      m = load_manifest(manifest);
    } else {
      m.format = format == "csv" ? DataFormat::csv : DataFormat::smm1;
      m.path = data;
      if (m.format == DataFormat::smm1) m.shape.reset();
      m.label_column = label_column;
      m.has_header = has_header;
      if (!reshape.empty()) m.reshape = Shape{reshape[0], reshape[1]};
      m.pad = pad;
      m.normalization = parse_normalization(normalize);
      if (split > 0.0) {
        m.split = SplitSpec{split, !no_stratify, split_seed_opt->count() ? split_seed : seed};
      }
    }
    return prepare(m);
  }
};

struct HyperArgs {
  Hyperparams hp;
  std::string step = "backtracking";
  std::string z_update = "exact";
  std::string lipschitz = "spectral";
  std::string init = "squared_hinge";
  std::string params;
  std::vector<std::pair<CLI::Option*, std::function<void(Hyperparams&)>>> overrides;

  template <typename T>
  void number(CLI::App& app, const std::string& name, T Hyperparams::*field, const std::string& help) {
    auto* opt = app.add_option(name, hp.*field, help)->capture_default_str();
    overrides.emplace_back(opt, [this, field](Hyperparams& h) { h.*field = hp.*field; });
  }

  void attach(CLI::App& app) {
    app.add_option("--params", params,
                   "Start from the hyperparameters in a JSON file (model file, sweep "
                   "summary or plain object); explicit flags override it");
    number(app, "--beta", &Hyperparams::beta, "Loss weight beta");
    number(app, "--sigma", &Hyperparams::sigma, "Penalty sigma");
    number(app, "--rank", &Hyperparams::rank, "Rank bound r");
    number(app, "--tau1", &Hyperparams::tau1, "Proximal weight tau1 (W block)");
    number(app, "--tau2", &Hyperparams::tau2, "Proximal weight tau2 (z block)");
    number(app, "--tau3", &Hyperparams::tau3, "Proximal weight tau3 (b block)");
    number(app, "--maxit", &Hyperparams::maxit, "Iteration limit");
    number(app, "--tol-step", &Hyperparams::tol_step, "Relative W step tolerance");
    number(app, "--tol-obj", &Hyperparams::tol_obj, "Objective change tolerance");
    number(app, "--seed", &Hyperparams::seed, "Seed (default: HLSMM_SEED or 1)");
    auto* o = app.add_option("--step", step, "backtracking[:ALPHA0] or fixed:ALPHA (ALPHA0 0 = 1/L)")
                  ->capture_default_str();
    overrides.emplace_back(o, [this](Hyperparams& h) { h.step = parse_step(step); });
    o = app.add_option("--z-update", z_update, "z block rule")
            ->check(CLI::IsMember({"exact", "paper"}))
            ->capture_default_str();
    overrides.emplace_back(o, [this](Hyperparams& h) { h.z_update = parse_z_update(z_update); });
    o = app.add_option("--lipschitz", lipschitz, "Lipschitz estimate for the automatic step")
            ->check(CLI::IsMember({"spectral", "trace"}))
            ->capture_default_str();
    overrides.emplace_back(o, [this](Hyperparams& h) { h.lipschitz = parse_lipschitz_bound(lipschitz); });
    o = app.add_option("--init", init, "Starting point")
            ->check(CLI::IsMember({"squared_hinge", "residual", "zero_slack"}))
            ->capture_default_str();
    overrides.emplace_back(o, [this](Hyperparams& h) { h.init = parse_init_policy(init); });
  }

  static StepPolicy parse_step(const std::string& s) {
    const auto colon = s.find(':');
    const std::string kind = s.substr(0, colon);
    double alpha = 0.0;
    if (colon != std::string::npos) {
      const std::string num = s.substr(colon + 1);
      const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), alpha);
      if (ec != std::errc() || ptr != num.data() + num.size() || !(alpha > 0.0)) {
        throw UsageError("--step: '" + num + "' is not a positive number");
      }
    }
    if (kind == "backtracking") return StepPolicy::backtracking(alpha);
    if (kind == "fixed") {
      if (colon == std::string::npos) throw UsageError("--step fixed needs a step size (fixed:ALPHA)");
      return StepPolicy::fixed(alpha);
    }
    throw UsageError("--step must be backtracking[:ALPHA0] or fixed:ALPHA");
  }

  static Hyperparams read_params(const std::string& path, const Hyperparams& defaults) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(path + ": " + e.what());
    }
    if (j.contains("best") && j["best"].is_object()) j = j["best"];
    if (j.contains("hyperparams")) j = j["hyperparams"];
    return hyperparams_from_json(j, defaults);
  }

  // Defaults <- --params file <- explicit flags.
  Hyperparams resolve() {
    Hyperparams out;
    out.seed = 1;
    if (!params.empty()) out = read_params(params, out);
    bool seed_given = false;
    for (auto& [opt, apply] : overrides) {
      if (opt->count()) {
        apply(out);
        if (opt->get_name() == "--seed") seed_given = true;
      }
    }
    if (!seed_given && params.empty()) out.seed = env_seed();
    try {
      out.validate(std::numeric_limits<Index>::max(), std::numeric_limits<Index>::max());
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    return out;
  }
};

ModelFile read_model(const std::string& path) {
  if (path.empty()) throw UsageError("--model is required");
  return load_model(path);
}

// Evaluation target: the test side of a split, otherwise everything.
const Dataset& eval_part(const PreparedData& d) { return d.test ? *d.test : d.train; }

void check_model_shape(const ModelFile& m, const Dataset& d) {
  if (m.w.rows() != d.rows() || m.w.cols() != d.cols()) {
    throw InvalidArgument("model expects " + std::to_string(m.w.rows()) + "x" +
                          std::to_string(m.w.cols()) + " samples but the data is " +
                          std::to_string(d.rows()) + "x" + std::to_string(d.cols()));
  }
}

ojson fit_json(const FitResult& fr, const Dataset& train, bool timing) {
  ojson j;
  j["dataset"] = train.name();
  j["provenance"] = train.provenance();
  j["hyperparams"] = hyperparams_to_json(fr.hyperparams);
  j["status"] = to_string(fr.trace.status);
  j["iterations"] = fr.model.iter;
  j["warm_start_iterations"] = fr.trace.warm_start_iterations;
  j["objective"] = fr.trace.records.back().objective;
  j["rank"] = numerical_rank(fr.model.w);
  j["heaviside_count"] = heaviside_count(fr.model.z);
  j["b"] = fr.model.b;
  j["stalled_w_blocks"] = fr.trace.stalled_w_blocks;
  j["decrease_violations"] = fr.trace.decrease_violations;
  j["max_objective_increase"] = fr.trace.max_objective_increase();
  if (timing) j["wall_time"] = fr.wall_time;
  return j;
}

std::vector<double> parse_list(const std::vector<std::string>& items, const char* flag) {
  std::vector<double> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.empty()) continue;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
        throw UsageError(std::string(flag) + ": '" + tok + "' is not a number");
      }
      out.push_back(v);
    }
  }
  if (out.empty()) throw UsageError(std::string(flag) + " needs at least one value");
  return out;
}

std::vector<Index> parse_index_list(const std::vector<std::string>& items, const char* flag) {
  std::vector<Index> out;
  for (double v : parse_list(items, flag)) {
    if (v != std::floor(v) || v < 1) throw UsageError(std::string(flag) + " values must be positive integers");
    out.push_back(static_cast<Index>(v));
  }
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::vector<std::string>& items, const char* flag) {
  std::vector<std::uint64_t> out;
  for (double v : parse_list(items, flag)) {
    if (v != std::floor(v) || v < 0) throw UsageError(std::string(flag) + " values must be non-negative integers");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

struct Context {
  std::ostream& out;
  std::ostream& err;
};

struct Command {
  CLI::App* app = nullptr;
  std::function<void(Context&)> run;
};

Command add_train(CLI::App& root) {
  auto* app = root.add_subcommand("train", "Fit a model");
  auto data = std::make_shared<DataArgs>();
  auto hyper = std::make_shared<HyperArgs>();
  auto out_path = std::make_shared<std::string>();
  auto trace_path = std::make_shared<std::string>();
  auto jobs = std::make_shared<int>(1);
  auto timing = std::make_shared<bool>(false);
  data->attach(*app);
  hyper->attach(*app);
  app->add_option("--out", *out_path, "Model file to write");
  app->add_option("--trace", *trace_path, "Convergence trace CSV to write");
  app->add_option("--jobs", *jobs, "Threads for the per-sample kernels")->capture_default_str();
  app->add_flag("--timing", *timing, "Report wall-clock time");
  return {app, [=](Context& ctx) {
            const Hyperparams hp = hyper->resolve();
            const PreparedData d = data->load(hp.seed);
            const FitResult fr = fit(d.train, hp, std::nullopt, FitOptions{std::max(1, *jobs)});
            ojson j = fit_json(fr, d.train, *timing);
            j["train"] = metrics_json(evaluate(fr.model, d.train));
            if (d.test) j["test"] = metrics_json(evaluate(fr.model, *d.test));
            if (!out_path->empty()) {
              save_model(ModelFile::from_fit(fr, d.train), *out_path);
              j["model"] = *out_path;
            }
            if (!trace_path->empty()) {
              export_convergence_trace(fr.trace, *trace_path);
              j["trace"] = *trace_path;
            }
            ctx.out << j.dump(2) << '\n';
          }};
}

Command add_predict(CLI::App& root) {
  auto* app = root.add_subcommand("predict", "Write one predicted label per sample");
  auto data = std::make_shared<DataArgs>();
  auto model = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  data->attach(*app);
  app->add_option("--model", *model, "Model file")->required();
  app->add_option("--out", *out_path, "Output file (default: standard output)");
  return {app, [=](Context& ctx) {
            const ModelFile m = read_model(*model);
            const PreparedData d = data->load(env_seed());
            const Dataset& target = eval_part(d);
            check_model_shape(m, target);
            std::ostringstream labels;
            for (const auto& s : target.samples()) labels << predict(m.w, m.b, s.x) << '\n';
            if (out_path->empty()) ctx.out << labels.str();
            else write_file(*out_path, [&](std::ostream& f) { f << labels.str(); });
          }};
}

Command add_eval(CLI::App& root) {
  auto* app = root.add_subcommand("eval", "Print accuracy and confusion counts");
  auto data = std::make_shared<DataArgs>();
  auto model = std::make_shared<std::string>();
  data->attach(*app);
  app->add_option("--model", *model, "Model file")->required();
  return {app, [=](Context& ctx) {
            const ModelFile m = read_model(*model);
            const PreparedData d = data->load(env_seed());
            const Dataset& target = eval_part(d);
            check_model_shape(m, target);
            ojson j = metrics_json(evaluate(m.w, m.b, target));
            j["dataset"] = target.name();
            j["part"] = d.test ? "test" : "all";
            j["samples"] = target.size();
            ctx.out << j.dump(2) << '\n';
          }};
}

Command add_sweep(CLI::App& root) {
  auto* app = root.add_subcommand("sweep", "Grid search over hyperparameters");
  auto data = std::make_shared<DataArgs>();
  auto hyper = std::make_shared<HyperArgs>();
  struct Grid {
    std::vector<std::string> beta{"0.01,0.1,0.5"}, sigma{"0.01,0.1"}, rank{"4,10"},
        tau1{"1e-4,1e-3,1e-2"}, tau2{"1e-4,1e-3,1e-2"}, tau3{"1e-4,1e-3,1e-2"};
  };
  auto g = std::make_shared<Grid>();
  auto tune_on_test = std::make_shared<bool>(false);
  auto folds = std::make_shared<int>(3);
  auto jobs = std::make_shared<int>(1);
  auto out_path = std::make_shared<std::string>();
  auto best_path = std::make_shared<std::string>();
  auto timing = std::make_shared<bool>(false);
  data->attach(*app);
  hyper->attach(*app);
  app->add_option("--betas", g->beta, "beta candidates")->capture_default_str()->delimiter(' ');
  app->add_option("--sigmas", g->sigma, "sigma candidates")->capture_default_str()->delimiter(' ');
  app->add_option("--ranks", g->rank, "r candidates")->capture_default_str()->delimiter(' ');
  app->add_option("--tau1s", g->tau1, "tau1 candidates")->capture_default_str()->delimiter(' ');
  app->add_option("--tau2s", g->tau2, "tau2 candidates")->capture_default_str()->delimiter(' ');
  app->add_option("--tau3s", g->tau3, "tau3 candidates")->capture_default_str()->delimiter(' ');
  app->add_flag("--tune-on-test", *tune_on_test, "Select on the test split instead of cross-validation");
  app->add_option("--folds", *folds, "Cross-validation folds")->capture_default_str();
  app->add_option("--jobs", *jobs, "Concurrent fits")->capture_default_str();
  app->add_option("--out", *out_path, "Grid table CSV (default: standard output)");
  app->add_option("--best", *best_path, "Summary JSON file");
  app->add_flag("--timing", *timing, "Add wall-clock columns");
  return {app, [=](Context& ctx) {
            const Hyperparams base = hyper->resolve();
            ParamGrid grid{parse_list(g->beta, "--betas"),  parse_list(g->sigma, "--sigmas"),
                           parse_index_list(g->rank, "--ranks"), parse_list(g->tau1, "--tau1s"),
                           parse_list(g->tau2, "--tau2s"), parse_list(g->tau3, "--tau3s")};
            if (*folds < 2) throw UsageError("--folds must be at least 2");
            const PreparedData d = data->load(base.seed);
            if (*tune_on_test && !d.test) throw UsageError("--tune-on-test needs a train/test split");
            const SweepOptions opts{std::max(1, *jobs)};
            const GridSearchResult res =
                *tune_on_test ? grid_search(d.train, *d.test, grid, base, opts)
                              : grid_search_cv(d.train, grid, base, *folds, base.seed, opts);

            std::ostringstream table;
            write_grid_csv(table, res, *timing);
            if (out_path->empty()) ctx.out << table.str();
            else write_file(*out_path, [&](std::ostream& f) { f << table.str(); });

            ojson j;
            j["mode"] = to_string(res.mode);
            j["dataset"] = d.train.name();
            j["configurations"] = res.rows.size();
            std::size_t failed = 0;
            for (const auto& r : res.rows) failed += r.metrics ? 0 : 1;
            j["failed"] = failed;
            if (res.best) {
              const GridRow& b = res.rows[*res.best];
              ojson best;
              best["config"] = *res.best;
              best["hyperparams"] = hyperparams_to_json(b.hp);
              best["validation"] = metrics_json(*b.metrics);
              if (d.test) {
                const FitResult fr = fit(d.train, b.hp);
                best["test"] = metrics_json(evaluate(fr.model, *d.test));
              }
              j["best"] = best;
            } else {
              j["best"] = nullptr;
            }
            const std::string summary = j.dump(2) + "\n";
            if (!best_path->empty()) write_file(*best_path, [&](std::ostream& f) { f << summary; });
            if (!out_path->empty()) ctx.out << summary;
            if (!res.best) throw InvalidArgument("every configuration failed");
          }};
}

Command add_noise_bench(CLI::App& root) {
  auto* app = root.add_subcommand("noise-bench", "Accuracy under corrupted test data");
  auto data = std::make_shared<DataArgs>();
  auto hyper = std::make_shared<HyperArgs>();
  auto model = std::make_shared<std::string>();
  auto kind = std::make_shared<std::string>("gaussian");
  auto target = std::make_shared<std::string>("test");
  auto levels = std::make_shared<std::vector<std::string>>(std::vector<std::string>{"0,0.05,0.1,0.15,0.2"});
  auto seeds = std::make_shared<std::vector<std::string>>(std::vector<std::string>{"1,2,3,4,5"});
  auto jobs = std::make_shared<int>(1);
  auto out_path = std::make_shared<std::string>();
  auto means_path = std::make_shared<std::string>();
  auto timing = std::make_shared<bool>(false);
  data->attach(*app);
  hyper->attach(*app);
  app->add_option("--model", *model, "Evaluate this model instead of fitting one");
  app->add_option("--kind", *kind, "Noise model")
      ->check(CLI::IsMember({"gaussian", "salt_pepper"}))
      ->capture_default_str();
  app->add_option("--noise-target", *target, "Corrupt the test split only, or train and test")
      ->check(CLI::IsMember({"test", "both"}))
      ->capture_default_str();
  app->add_option("--levels", *levels, "Noise levels")->capture_default_str()->delimiter(' ');
  app->add_option("--seeds", *seeds, "Noise seeds")->capture_default_str()->delimiter(' ');
  app->add_option("--jobs", *jobs, "Concurrent fits (target both)")->capture_default_str();
  app->add_option("--out", *out_path, "Per-seed CSV (default: standard output)");
  app->add_option("--means", *means_path, "Per-level mean CSV");
  app->add_flag("--timing", *timing, "Add wall-clock columns");
  return {app, [=](Context& ctx) {
            const auto lv = parse_list(*levels, "--levels");
            const auto sd = parse_seed_list(*seeds, "--seeds");
            const NoiseKind k = parse_noise_kind(*kind);
            const NoiseTarget t = parse_noise_target(*target);
            NoiseSweepResult res;
            if (!model->empty()) {
              if (t != NoiseTarget::test) throw UsageError("--model works with --noise-target test only");
              const ModelFile m = read_model(*model);
              const PreparedData d = data->load(env_seed());
              check_model_shape(m, eval_part(d));
              res = noise_sweep(m.state(), m.hyperparams, eval_part(d), k, lv, sd);
            } else {
              const Hyperparams hp = hyper->resolve();
              const PreparedData d = data->load(hp.seed);
              res = noise_sweep(d.train, eval_part(d), hp, k, lv, sd, t, SweepOptions{std::max(1, *jobs)});
            }
            std::ostringstream table;
            write_noise_csv(table, res, *timing);
            if (out_path->empty()) ctx.out << table.str();
            else write_file(*out_path, [&](std::ostream& f) { f << table.str(); });
            if (!means_path->empty()) {
              write_file(*means_path, [&](std::ostream& f) { write_noise_means_csv(f, res); });
            }
            if (!out_path->empty()) {
              ojson j;
              j["kind"] = to_string(res.kind);
              j["target"] = to_string(res.target);
              j["hyperparams"] = hyperparams_to_json(res.hp);
              ojson means = ojson::array();
              for (const auto& m : res.means) {
                means.push_back({{"level", m.level},
                                 {"mean_accuracy", round2(m.accuracy)},
                                 {"completed", m.completed}});
              }
              j["levels"] = means;
              ctx.out << j.dump(2) << '\n';
            }
          }};
}

Command add_sensitivity(CLI::App& root) {
  auto* app = root.add_subcommand("sensitivity", "Test accuracy over an r x beta grid");
  auto data = std::make_shared<DataArgs>();
  auto hyper = std::make_shared<HyperArgs>();
  auto ranks = std::make_shared<std::vector<std::string>>(std::vector<std::string>{"1,2,3,4"});
  auto betas = std::make_shared<std::vector<std::string>>(std::vector<std::string>{"0.01,0.1,0.5"});
  auto jobs = std::make_shared<int>(1);
  auto out_path = std::make_shared<std::string>();
  data->attach(*app);
  hyper->attach(*app);
  app->add_option("--ranks", *ranks, "r values")->capture_default_str()->delimiter(' ');
  app->add_option("--betas", *betas, "beta values")->capture_default_str()->delimiter(' ');
  app->add_option("--jobs", *jobs, "Concurrent fits")->capture_default_str();
  app->add_option("--out", *out_path, "CSV file (default: standard output)");
  return {app, [=](Context& ctx) {
            const Hyperparams base = hyper->resolve();
            const auto rv = parse_index_list(*ranks, "--ranks");
            const auto bv = parse_list(*betas, "--betas");
            const PreparedData d = data->load(base.seed);
            const auto cells =
                sensitivity_grid(d.train, eval_part(d), base, rv, bv, SweepOptions{std::max(1, *jobs)});
            std::ostringstream table;
            write_sensitivity_csv(table, cells);
            if (out_path->empty()) ctx.out << table.str();
            else write_file(*out_path, [&](std::ostream& f) { f << table.str(); });
          }};
}

Command add_kkt_check(CLI::App& root) {
  auto* app = root.add_subcommand("kkt-check", "Stationarity residuals of a model on its training data");
  auto data = std::make_shared<DataArgs>();
  auto model = std::make_shared<std::string>();
  auto tol_w = std::make_shared<double>(1e-3);
  auto tol_z = std::make_shared<double>(1e-3);
  auto tol_b = std::make_shared<double>(1e-3);
  auto text = std::make_shared<bool>(false);
  data->attach(*app);
  app->add_option("--model", *model, "Model file")->required();
  app->add_option("--tol-w", *tol_w, "Tolerance for the W residual")->capture_default_str();
  app->add_option("--tol-z", *tol_z, "Tolerance for the z residual")->capture_default_str();
  app->add_option("--tol-b", *tol_b, "Tolerance for the b residual")->capture_default_str();
  app->add_flag("--text", *text, "Flat key=value output instead of JSON");
  return {app, [=](Context& ctx) {
            const ModelFile m = read_model(*model);
            const PreparedData d = data->load(m.seed);
            check_model_shape(m, d.train);
            ModelState s = m.state();
            // The file stores W and b only; z is the slack minimiser at (W, b).
            s.z = optimal_slack(s.w, s.b, d.train, m.hyperparams);
            const KktReport r = kkt_report(s, d.train, m.hyperparams);
            const bool ok = r.w_residual <= *tol_w && r.z_residual <= *tol_z && r.b_residual <= *tol_b;
            if (*text) {
              ctx.out << "samples=" << d.train.size() << '\n'
                      << "w_residual=" << format_number(r.w_residual) << '\n'
                      << "z_residual=" << format_number(r.z_residual) << '\n'
                      << "b_residual=" << format_number(r.b_residual) << '\n'
                      << "feasibility_residual=" << format_number(r.feasibility_residual) << '\n'
                      << "rank=" << r.rank_at_solution << '\n'
                      << "rank_bound=" << r.rank_bound << '\n'
                      << "rank_deficient=" << (r.rank_deficient ? "true" : "false") << '\n'
                      << "projection_ambiguous=" << (r.projection_ambiguous ? "true" : "false") << '\n'
                      << "within_tolerance=" << (ok ? "true" : "false") << '\n';
              return;
            }
            ojson j;
            j["dataset"] = d.train.name();
            j["samples"] = d.train.size();
            j["w_residual"] = r.w_residual;
            j["z_residual"] = r.z_residual;
            j["b_residual"] = r.b_residual;
            j["feasibility_residual"] = r.feasibility_residual;
            j["rank"] = r.rank_at_solution;
            j["rank_bound"] = r.rank_bound;
            j["rank_deficient"] = r.rank_deficient;
            j["projection_ambiguous"] = r.projection_ambiguous;
            j["tolerances"] = {{"w", *tol_w}, {"z", *tol_z}, {"b", *tol_b}};
            j["within_tolerance"] = ok;
            ctx.out << j.dump(2) << '\n';
          }};
}

Command add_export_weights(CLI::App& root) {
  auto* app = root.add_subcommand("export-weights", "Write W as CSV and as a PGM heatmap");
  auto model = std::make_shared<std::string>();
  auto stem = std::make_shared<std::string>();
  app->add_option("--model", *model, "Model file")->required();
  app->add_option("--out", *stem, "Output path without extension")->required();
  return {app, [=](Context& ctx) {
            const ModelFile m = read_model(*model);
            const HeatmapFiles files = export_weight_heatmap(m.w, *stem);
            ojson j;
            j["csv"] = files.csv.string();
            j["pgm"] = files.pgm.string();
            ctx.out << j.dump(2) << '\n';
          }};
}

Command add_synth(CLI::App& root) {
  auto* app = root.add_subcommand("synth", "Generate a low-rank synthetic dataset (SMM1)");
  auto spec = std::make_shared<SyntheticSpec>();
  auto out_path = std::make_shared<std::string>();
  auto w_path = std::make_shared<std::string>();
  auto seed_opt = std::make_shared<CLI::Option*>(nullptr);
  app->add_option("--out", *out_path, "SMM1 file to write")->required();
  app->add_option("--w-true", *w_path, "Also write the ground-truth W as CSV");
  app->add_option("--p", spec->p, "Rows")->capture_default_str();
  app->add_option("--q", spec->q, "Columns")->capture_default_str();
  app->add_option("--rank", spec->rank, "Rank of the ground truth")->capture_default_str();
  app->add_option("--samples", spec->samples, "Sample count")->capture_default_str();
  app->add_option("--bias", spec->bias, "Ground-truth bias")->capture_default_str();
  app->add_option("--min-margin", spec->min_margin, "Redraw samples with a smaller |score|")
      ->capture_default_str();
  *seed_opt = app->add_option("--seed", spec->seed, "Seed (default: HLSMM_SEED or 1)");
  return {app, [=](Context& ctx) {
            SyntheticSpec s = *spec;
            if (!(*seed_opt)->count()) s.seed = env_seed();
            const SyntheticData syn = make_synthetic(s);
            save_smm1(syn.data, *out_path);
            if (!w_path->empty()) {
              write_file(*w_path, [&](std::ostream& f) {
                for (Index r = 0; r < syn.w_true.rows(); ++r) {
                  for (Index c = 0; c < syn.w_true.cols(); ++c) {
                    f << (c ? "," : "") << format_number(syn.w_true(r, c));
                  }
                  f << '\n';
                }
              });
            }
            ojson j;
            j["out"] = *out_path;
            j["samples"] = syn.data.size();
            j["positive"] = syn.data.count_label(1);
            j["negative"] = syn.data.count_label(-1);
            j["provenance"] = syn.data.provenance();
            ctx.out << j.dump(2) << '\n';
          }};
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heaviside-loss support matrix machine: training, evaluation and experiments",
               "hlsmm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("hlsmm ") + build_id());

  std::vector<Command> commands{add_train(app),       add_predict(app),     add_eval(app),
                                add_sweep(app),       add_noise_bench(app), add_sensitivity(app),
                                add_kkt_check(app),   add_export_weights(app), add_synth(app)};

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kUsage;
  }

  Context ctx{out, err};
  for (auto& cmd : commands) {
    if (!cmd.app->parsed()) continue;
    try {
      cmd.run(ctx);
      return kOk;
    } catch (const UsageError& e) {
      err << "error: " << e.what() << '\n' << cmd.app->help();
      return kUsage;
    } catch (const NumericalFailure& e) {
      err << "numerical failure: " << e.what() << '\n';
      return kNumericalFailure;
    } catch (const IngestionError& e) {
      err << "data error: " << e.what() << '\n';
      return kDataError;
    } catch (const FormatError& e) {
      err << "data error: " << e.what() << '\n';
      return kDataError;
    } catch (const IoError& e) {
      err << "data error: " << e.what() << '\n';
      return kDataError;
    } catch (const std::invalid_argument& e) {
      err << "data error: " << e.what() << '\n';
      return kDataError;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kDataError;
    }
  }
  return kUsage;
}

}  // namespace hlsmm::cli
