#include "hlsmm/cli.hpp"
#include "hlsmm/experiments.hpp"
#include "hlsmm/model_file.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <sstream>

namespace hlsmm {
namespace {

using testing::ReadFile;
using testing::ScratchDir;
using testing::WriteFile;

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;

  nlohmann::json json() const { return nlohmann::json::parse(out); }
};

Outcome Invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "hlsmm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::size_t CountLines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// One synthetic SMM1 file and one trained model shared by the suite.
class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    unsetenv("HLSMM_SEED");
    dir_ = new ScratchDir("cli");
    data_ = (*dir_ / "syn.smm1").string();
    model_ = (*dir_ / "syn.json").string();
    const Outcome s = Invoke({"synth", "--out", data_, "--seed", "1"});
    ASSERT_EQ(s.code, 0) << s.err;
    const Outcome t = Invoke(Train({"--out", model_}));
    ASSERT_EQ(t.code, 0) << t.err;
    train_json_ = t.out;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  static std::vector<std::string> DataFlags() { return {"--data", data_, "--format", "smm1"}; }

  static std::vector<std::string> Train(std::vector<std::string> extra) {
    std::vector<std::string> a{"train"};
    for (const auto& f : DataFlags()) a.push_back(f);
    for (const auto& f : {"--rank", "2", "--beta", "0.1", "--sigma", "0.1"}) a.emplace_back(f);
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  }

  static std::vector<std::string> With(std::string cmd, std::vector<std::string> extra) {
    std::vector<std::string> a{std::move(cmd)};
    for (const auto& f : DataFlags()) a.push_back(f);
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  }

  static inline ScratchDir* dir_ = nullptr;
  static inline std::string data_;
  static inline std::string model_;
  static inline std::string train_json_;
};

TEST_F(Cli, TrainWritesVerifiedModel) {
  const auto j = nlohmann::json::parse(train_json_);
  EXPECT_EQ(j["status"], "converged");
  EXPECT_EQ(j["train"]["accuracy"], 100.0);
  EXPECT_EQ(j["decrease_violations"], 0);
  EXPECT_LE(j["rank"].get<int>(), 2);
  const ModelFile m = load_model(model_);
  EXPECT_EQ(m.hyperparams.rank, 2);
  EXPECT_EQ(m.w.rows(), 8);
  EXPECT_EQ(m.w.cols(), 6);
}

TEST_F(Cli, ZeroIterationsGiveZeroModel) {
  const std::string path = (*dir_ / "zero.json").string();
  const Outcome o = Invoke(Train({"--maxit", "0", "--out", path}));
  ASSERT_EQ(o.code, 0) << o.err;
  const ModelFile m = load_model(path);
  EXPECT_EQ(m.w, Matrix::Zero(8, 6));
  EXPECT_EQ(m.b, 0.0);
  EXPECT_EQ(o.json()["iterations"], 0);
}

TEST_F(Cli, PredictAndEval) {
  const Outcome p = Invoke(With("predict", {"--model", model_}));
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_EQ(CountLines(p.out), 200u);
  for (std::istringstream in(p.out); !in.eof();) {
    std::string line;
    if (!std::getline(in, line)) break;
    EXPECT_TRUE(line == "1" || line == "-1") << line;
  }
  const Outcome e = Invoke(With("eval", {"--model", model_}));
  ASSERT_EQ(e.code, 0) << e.err;
  const auto j = e.json();
  EXPECT_EQ(j["accuracy"], 100.0);
  EXPECT_EQ(j["samples"], 200);
  EXPECT_EQ(j["tp"].get<int>() + j["tn"].get<int>(), 200);
}

TEST_F(Cli, ShapeMismatchIsDataError) {
  std::string csv;
  for (int i = 0; i < 6; ++i) {
    csv += i % 2 ? "-1" : "1";
    for (int k = 0; k < 57; ++k) csv += "," + std::to_string((i * 57 + k) % 7 - 3);
    csv += '\n';
  }
  const std::string path = (*dir_ / "wide.csv").string();
  const std::string model = (*dir_ / "wide.json").string();
  WriteFile(path, csv);
  // r < min(p, q) rules out training a 1x57 model, so build the file directly.
  ModelFile wide;
  wide.w = Matrix::Ones(1, 57);
  wide.status = "converged";
  save_model(wide, model);
  ASSERT_EQ(Invoke({"eval", "--data", path, "--reshape", "1", "57", "--model", model}).code, 0);
  const Outcome e = Invoke({"eval", "--data", path, "--reshape", "3", "19", "--model", model});
  EXPECT_EQ(e.code, 3);
  EXPECT_NE(e.err.find("1x57"), std::string::npos) << e.err;
}

TEST_F(Cli, KktCheckWithinTolerance) {
  const Outcome o = Invoke(With("kkt-check", {"--model", model_}));
  ASSERT_EQ(o.code, 0) << o.err;
  const auto j = o.json();
  EXPECT_TRUE(j["within_tolerance"].get<bool>()) << o.out;
  EXPECT_LE(j["rank"].get<int>(), 2);
  const Outcome t = Invoke(With("kkt-check", {"--model", model_, "--text"}));
  EXPECT_NE(t.out.find("within_tolerance=true\n"), std::string::npos);
}

TEST_F(Cli, NoiseBenchAtLevelZeroMatchesEval) {
  const Outcome e = Invoke(With("eval", {"--model", model_, "--split", "0.7"}));
  ASSERT_EQ(e.code, 0) << e.err;
  const Outcome n = Invoke(With("noise-bench", {"--model", model_, "--split", "0.7", "--levels", "0",
                                             "--seeds", "1,2,3"}));
  ASSERT_EQ(n.code, 0) << n.err;
  const std::string acc = format_accuracy(e.json()["accuracy"].get<double>());
  std::istringstream in(n.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("kind,target,level,seed,", 0), 0u);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_NE(line.find("," + acc + ","), std::string::npos) << line;
  }
  EXPECT_EQ(rows, 3);
}

TEST_F(Cli, SeedFallsBackToEnvironment) {
  const std::string a = (*dir_ / "a.smm1").string();
  const std::string b = (*dir_ / "b.smm1").string();
  setenv("HLSMM_SEED", "5", 1);
  const Outcome env = Invoke({"synth", "--out", a, "--samples", "20"});
  unsetenv("HLSMM_SEED");
  const Outcome flag = Invoke({"synth", "--out", b, "--samples", "20", "--seed", "5"});
  ASSERT_EQ(env.code, 0);
  ASSERT_EQ(flag.code, 0);
  EXPECT_EQ(ReadFile(a), ReadFile(b));
  setenv("HLSMM_SEED", "abc", 1);
  EXPECT_EQ(Invoke({"synth", "--out", a}).code, 2);
  unsetenv("HLSMM_SEED");
}

TEST_F(Cli, SmallSweepSelectsOneRow) {
  const std::string best = (*dir_ / "best.json").string();
  const Outcome o = Invoke(With("sweep", {"--split", "0.7", "--tune-on-test", "--betas", "0.1",
                                       "--sigmas", "0.01,0.1", "--ranks", "2", "--tau1s", "1e-3",
                                       "--tau2s", "1e-3", "--tau3s", "1e-3", "--best", best}));
  ASSERT_EQ(o.code, 0) << o.err;
  std::istringstream in(o.out);
  std::string line;
  int rows = 0, selected = 0;
  std::getline(in, line);
  while (std::getline(in, line)) {
    ++rows;
    if (line.find(",1,") != std::string::npos && line.find("tune_on_test") != std::string::npos) {
      selected += line.substr(0, line.rfind(',')).ends_with(",1");
    }
  }
  EXPECT_EQ(rows, 2);
  EXPECT_EQ(selected, 1);
  const auto summary = nlohmann::json::parse(ReadFile(best));
  EXPECT_TRUE(summary.contains("best"));
  // The summary feeds straight back into train.
  const Outcome t = Invoke(Train({"--params", best, "--maxit", "5"}));
  EXPECT_EQ(t.code, 0) << t.err;
}

TEST_F(Cli, ExportWeights) {
  const std::string stem = (*dir_ / "w").string();
  const Outcome o = Invoke({"export-weights", "--model", model_, "--out", stem});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(CountLines(ReadFile(stem + ".csv")), 8u);
  EXPECT_EQ(ReadFile(stem + ".pgm").size(), std::string("P5\n6 8\n255\n").size() + 48);
}

TEST_F(Cli, PaperZRuleReportsNumericalFailure) {
  const Outcome o = Invoke(Train({"--z-update", "paper"}));
  EXPECT_EQ(o.code, 4) << o.out;
  EXPECT_NE(o.err.find("numerical failure"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  const Outcome missing = Invoke({"train", "--rank", "2"});
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("--data"), std::string::npos);
  EXPECT_EQ(Invoke({}).code, 2);
  EXPECT_EQ(Invoke({"train", "--bogus"}).code, 2);
  EXPECT_EQ(Invoke(Train({"--beta", "-1"})).code, 2);
  EXPECT_EQ(Invoke(Train({"--step", "fixed"})).code, 2);
  EXPECT_EQ(Invoke(Train({"--init", "nope"})).code, 2);
  EXPECT_EQ(Invoke(With("noise-bench", {"--levels", "x"})).code, 2);
  EXPECT_EQ(Invoke({"train", "--data", data_, "--manifest", data_}).code, 2);
}

TEST_F(Cli, DataErrors) {
  const std::string bad = (*dir_ / "bad.csv").string();
  WriteFile(bad, "1,2,3\n-1,4\n");
  const Outcome o = Invoke({"train", "--data", bad, "--rank", "1"});
  EXPECT_EQ(o.code, 3);
  EXPECT_NE(o.err.find("line 2"), std::string::npos) << o.err;
  EXPECT_EQ(Invoke({"train", "--data", (*dir_ / "absent.csv").string()}).code, 3);
  const std::string corrupt = (*dir_ / "corrupt.json").string();
  WriteFile(corrupt, "{}");
  EXPECT_EQ(Invoke(With("eval", {"--model", corrupt})).code, 3);
}

TEST_F(Cli, OutputIsDeterministic) {
  const Outcome a = Invoke(Train({"--maxit", "50"}));
  const Outcome b = Invoke(Train({"--maxit", "50"}));
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.find("wall_time"), std::string::npos);
  EXPECT_NE(Invoke(Train({"--maxit", "50", "--timing"})).out.find("wall_time"), std::string::npos);
}

TEST_F(Cli, HelpAndVersion) {
  const Outcome h = Invoke({"--help"});
  EXPECT_EQ(h.code, 0);
  EXPECT_NE(h.out.find("noise-bench"), std::string::npos);
  EXPECT_EQ(Invoke({"--version"}).code, 0);
}

}  // namespace
}  // namespace hlsmm
