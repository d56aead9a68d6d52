#pragma once

#include "hlsmm/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hlsmm {

struct Shape {
  Index p = 1;
  Index q = 1;
  friend bool operator==(const Shape&, const Shape&) = default;
};

// ---------------------------------------------------------------------------
// Ingestion

struct CsvOptions {
  std::size_t label_column = 0;
  bool has_header = false;
  /// Refill each feature vector row-major into p x q. Without it rows become
  /// 1 x d matrices.
  std::optional<Shape> reshape;
  /// Allow p*q > d, zero-filling the trailing entries.
  bool pad = false;
};

/// Comma-separated rows, one sample per row. Accepted label encodings are
/// {-1, 1}, {0, 1} (0 -> -1) and {1, 2} (2 -> -1). Errors are IngestionError
/// with the offending 1-based line number.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// SMM1 binary container (little-endian):
///   "SMM1" | u32 version = 1 | u64 m | u64 p | u64 q | m x i8 labels |
///   m*p*q x f64, sample-major then row-major.
std::vector<std::uint8_t> encode_smm1(const Dataset& data);
Dataset decode_smm1(std::span<const std::uint8_t> bytes, const std::string& name = {});
Dataset load_smm1(const std::filesystem::path& path);
void save_smm1(const Dataset& data, const std::filesystem::path& path);

/// Flattens each sample row-major and refills it as p x q (row-major).
/// p*q must equal the entry count unless `pad`, which zero-fills the tail.
Dataset reshape(const Dataset& data, Shape shape, bool pad = false);

// ---------------------------------------------------------------------------
// Preprocessing

/// Per-sample z-score with the population standard deviation. Samples with
/// all-equal entries become zero matrices.
Dataset normalize_per_sample(const Dataset& data);

/// Entry-wise standardisation with statistics estimated on one dataset and
/// applied to others (train statistics for both train and test). Entries that
/// are constant in the fitting data map to zero.
class FeatureScaler {
 public:
  static FeatureScaler fit(const Dataset& data);
  Dataset apply(const Dataset& data) const;

  const Matrix& mean() const { return mean_; }
  const Matrix& scale() const { return scale_; }

 private:
  Matrix mean_;
  Matrix scale_;
};

struct TrainTest {
  Dataset train;
  Dataset test;
};

/// Deterministic partition. Stratified mode draws round(ratio * n_c) training
/// samples from each class c. Both sides keep the input order.
TrainTest split(const Dataset& data, double ratio, bool stratified, std::uint64_t seed);

/// k disjoint stratified folds (index lists into `data`).
std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& data, int k,
                                                       std::uint64_t seed);

// ---------------------------------------------------------------------------
// Corruption

/// Adds N(0, (level * s)^2) to every entry, s being the sample's own entry
/// standard deviation. Level 0 returns the input unchanged.
Dataset add_gaussian_noise(const Dataset& data, double level, std::uint64_t seed);

/// Sets round(level * p * q) distinct entries per sample to the sample's
/// minimum or maximum (probability ½ each).
Dataset add_salt_pepper_noise(const Dataset& data, double level, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic data

/// Low-rank ground truth W* = U V^T (standard normal factors), samples with
/// standard normal entries labelled by sign(⟨W*, X⟩ + b*). Samples whose
/// |⟨W*, X⟩ + b*| falls below min_margin are redrawn.
struct SyntheticSpec {
  Index p = 8;
  Index q = 6;
  Index rank = 2;
  std::size_t samples = 200;
  double bias = 0.1;
  double min_margin = 0.5;
  std::uint64_t seed = 1;
};

struct SyntheticData {
  Dataset data;
  Matrix w_true;
  double b_true;
};

SyntheticData make_synthetic(const SyntheticSpec& spec);

// ---------------------------------------------------------------------------
// Manifest

enum class DataFormat { csv, smm1 };
enum class Normalization { none, per_sample_zscore, feature_zscore };

struct SplitSpec {
  double ratio = 0.7;
  bool stratified = true;
  std::uint64_t seed = 1;
};

/// JSON-describable recipe for loading and preparing a dataset:
///
///   {"format": "csv", "path": "wdbc.csv", "shape": "vector",
///    "reshape": [5, 6], "pad": false, "label_column": 0,
///    "has_header": false, "normalization": "feature_zscore",
///    "split": {"ratio": 0.7, "stratified": true, "seed": 1}}
///
/// `shape` is "vector" or [p, q] and is checked against the loaded data
/// (before any reshape); when absent nothing is checked. Relative paths
/// resolve against the manifest's directory.
struct DeclaredShape {
  bool vector = true;
  Shape dims{};  // used when !vector
};

struct DatasetManifest {
  DataFormat format = DataFormat::csv;
  std::filesystem::path path;
  std::optional<DeclaredShape> shape = DeclaredShape{};
  std::optional<Shape> reshape;
  bool pad = false;
  std::size_t label_column = 0;
  bool has_header = false;
  Normalization normalization = Normalization::none;
  std::optional<SplitSpec> split;
};

nlohmann::json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir = {});
DatasetManifest load_manifest(const std::filesystem::path& path);

const char* to_string(Normalization n);
Normalization parse_normalization(const std::string& s);

struct PreparedData {
  Dataset train;
  /// Present when the manifest requests a split.
  std::optional<Dataset> test;
};

/// load -> reshape -> split -> normalise (feature statistics from train).
PreparedData prepare(const DatasetManifest& manifest);

}  // namespace hlsmm
