#pragma once

// JSON model container.
//
//   {
//     "format": "hlsmm-model", "format_version": 1,
//     "p": 5, "q": 6, "rank_bound": 4, "b": -0.12,
//     "hyperparams": {...},
//     "w": {"encoding": "base64-f64le-rowmajor", "data": "...", "sha256": "..."},
//     "training": {"status": "converged", "iterations": 211, "warm_start_iterations": 250},
//     "provenance": {"dataset": "wdbc", "source": "...", "seed": 1, "build": "3f2a1c0"}
//   }
//
// The digest covers the decoded W bytes. Keys are written in a fixed order, so
// saving a loaded model reproduces the file byte for byte.

#include "hlsmm/model.hpp"
#include "hlsmm/solver.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hlsmm {

struct ModelFile {
  Matrix w;
  double b = 0.0;
  Hyperparams hyperparams;
  std::string status;
  std::size_t iterations = 0;
  std::size_t warm_start_iterations = 0;
  std::string dataset;
  std::string source;
  std::uint64_t seed = 0;
  std::string build;

  static ModelFile from_fit(const FitResult& fit, const Dataset& data);
  ModelState state() const;
};

/// Identifier of this build (git describe output at configure time).
const char* build_id();

nlohmann::ordered_json hyperparams_to_json(const Hyperparams& hp);
/// Missing keys keep the values of `defaults`.
Hyperparams hyperparams_from_json(const nlohmann::json& j, const Hyperparams& defaults = {});

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);

std::string serialize_model(const ModelFile& model);
/// Throws FormatError on a malformed document or a digest mismatch.
ModelFile parse_model(const std::string& text);

void save_model(const ModelFile& model, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace hlsmm
