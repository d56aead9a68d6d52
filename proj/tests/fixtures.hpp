#pragma once
// Shared test helpers: the standard synthetic problem, descent checks and
// scratch directories.

#include "hlsmm/data.hpp"
#include "hlsmm/solver.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace hlsmm::testing {

inline const SyntheticData& Synthetic() {
  static const SyntheticData data = make_synthetic(SyntheticSpec{});
  return data;
}

/// r = 2, β = σ = 0.1, τ's = 1e-3, maxit 1000.
inline Hyperparams SyntheticHyperparams() {
  Hyperparams hp;
  hp.rank = 2;
  hp.beta = 0.1;
  hp.sigma = 0.1;
  hp.tau1 = hp.tau2 = hp.tau3 = 1e-3;
  hp.maxit = 1000;
  return hp;
}

inline const FitResult& SyntheticFit() {
  static const FitResult fit_result = fit(Synthetic().data, SyntheticHyperparams());
  return fit_result;
}

/// Objective non-increasing within 1e-10 and the per-iteration sufficient
/// decrease test (τ_min form, slack 1e-9) never failed.
inline void ExpectDescent(const SolverTrace& trace) {
  EXPECT_LE(trace.max_objective_increase(), 1e-10);
  EXPECT_EQ(trace.decrease_violations, 0u);
  for (const auto& rec : trace.records) EXPECT_TRUE(rec.sufficient_decrease) << "iter " << rec.iter;
}

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = "hlsmm_" + tag;
    if (info) name += std::string("_") + info->test_suite_name() + "_" + info->name();
    path_ = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string ReadFile(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void WriteFile(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::filesystem::path DataDir() { return HLSMM_DATA_DIR; }

}  // namespace hlsmm::testing
