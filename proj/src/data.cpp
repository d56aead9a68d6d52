#include "hlsmm/data.hpp"

#include "hlsmm/error.hpp"
#include "hlsmm/rng.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

namespace hlsmm {

namespace fs = std::filesystem;

namespace {

// Row-major flattening of a sample (the CSV / SMM1 convention).
std::vector<double> flatten_row_major(const Matrix& x) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(x.size()));
  for (Index r = 0; r < x.rows(); ++r)
    for (Index c = 0; c < x.cols(); ++c) out.push_back(x(r, c));
  return out;
}

Matrix fill_row_major(const std::vector<double>& v, Shape s) {
  Matrix x = Matrix::Zero(s.p, s.q);
  const std::size_t n = std::min(v.size(), static_cast<std::size_t>(s.p * s.q));
  for (std::size_t k = 0; k < n; ++k) {
    x(static_cast<Index>(k) / s.q, static_cast<Index>(k) % s.q) = v[k];
  }
  return x;
}

void check_reshape(std::size_t entries, Shape s, bool pad, std::size_t line) {
  if (s.p < 1 || s.q < 1) throw IngestionError("reshape dimensions must be positive", line);
  const auto target = static_cast<std::size_t>(s.p * s.q);
  if (target == entries || (pad && target > entries)) return;
  throw IngestionError("cannot reshape " + std::to_string(entries) + " features into " +
                           std::to_string(s.p) + "x" + std::to_string(s.q) +
                           (pad ? "" : " (use padding to allow p*q > d)"),
                       line);
}

std::string shape_tag(Shape s) { return std::to_string(s.p) + "x" + std::to_string(s.q); }

// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

// Label encodings in priority order; the first one containing every label
// seen so far is used.
constexpr int kEncodings[3][2] = {{-1, 1}, {0, 1}, {1, 2}};

int encoding_for(const std::set<int>& seen) {
  for (int e = 0; e < 3; ++e) {
    const bool ok = std::all_of(seen.begin(), seen.end(), [e](int v) {
      return v == kEncodings[e][0] || v == kEncodings[e][1];
    });
    if (ok) return e;
  }
  return -1;
}

int map_label(int raw, int encoding) {
  switch (encoding) {
    case 0: return raw;
    case 1: return raw == 0 ? -1 : 1;
    default: return raw == 2 ? -1 : 1;
  }
}

// Little-endian byte helpers.
template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t k = 0; k < sizeof(T); ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t offset) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
  U bits = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k) bits |= static_cast<U>(in[offset + k]) << (8 * k);
  return std::bit_cast<T>(bits);
}

double population_std(const Matrix& x) {
  const double mean = x.mean();
  return std::sqrt((x.array() - mean).square().mean());
}

}  // namespace

// ---------------------------------------------------------------------------

Dataset load_csv(const fs::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string(), 0);

  struct Row {
    std::vector<double> features;
    int raw_label;
  };
  std::vector<Row> rows;
  std::set<int> seen;
  std::size_t expected_fields = 0;
  std::size_t line_no = 0;
  std::string line;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (options.has_header && line_no == 1) continue;

    const auto fields = split_record(line);
    if (expected_fields == 0) {
      expected_fields = fields.size();
      if (options.label_column >= expected_fields) {
        throw IngestionError("label column " + std::to_string(options.label_column) +
                                 " is out of range for " + std::to_string(expected_fields) +
                                 " fields",
                             line_no);
      }
      if (expected_fields < 2) throw IngestionError("rows need a label and at least one feature", line_no);
    } else if (fields.size() != expected_fields) {
      throw IngestionError("row has " + std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(expected_fields),
                           line_no);
    }

    Row row;
    row.features.reserve(expected_fields - 1);
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double value = 0.0;
      if (!parse_double(fields[c], value)) {
        throw IngestionError("field " + std::to_string(c + 1) + " ('" + fields[c] +
                                 "') is not a finite number",
                             line_no);
      }
      if (c == options.label_column) {
        if (value != std::round(value)) {
          throw IngestionError("label '" + fields[c] + "' is not an integer", line_no);
        }
        row.raw_label = static_cast<int>(value);
      } else {
        row.features.push_back(value);
      }
    }
    seen.insert(row.raw_label);
    if (encoding_for(seen) < 0) {
      throw IngestionError("label " + std::to_string(row.raw_label) +
                               " does not fit any supported encoding ({-1,1}, {0,1}, {1,2})",
                           line_no);
    }
    if (options.reshape) check_reshape(row.features.size(), *options.reshape, options.pad, line_no);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IngestionError(path.string() + " contains no samples", 0);

  const int encoding = encoding_for(seen);
  const Shape shape = options.reshape.value_or(Shape{1, static_cast<Index>(expected_fields - 1)});
  std::vector<MatrixSample> samples;
  samples.reserve(rows.size());
  for (const auto& r : rows) {
    samples.push_back({fill_row_major(r.features, shape), map_label(r.raw_label, encoding)});
  }
  std::string prov = "csv:" + path.filename().string();
  if (options.reshape) prov += "; reshape " + shape_tag(shape) + (options.pad ? " (padded)" : "");
  return Dataset(std::move(samples), path.stem().string(), prov);
}

std::vector<std::uint8_t> encode_smm1(const Dataset& data) {
  const auto m = static_cast<std::uint64_t>(data.size());
  const auto p = static_cast<std::uint64_t>(data.rows());
  const auto q = static_cast<std::uint64_t>(data.cols());
  std::vector<std::uint8_t> out;
  out.reserve(4 + 4 + 24 + m + 8 * m * p * q);
  for (char ch : {'S', 'M', 'M', '1'}) out.push_back(static_cast<std::uint8_t>(ch));
  put_le<std::uint32_t>(out, 1);
  put_le<std::uint64_t>(out, m);
  put_le<std::uint64_t>(out, p);
  put_le<std::uint64_t>(out, q);
  for (const auto& s : data.samples()) out.push_back(static_cast<std::uint8_t>(static_cast<std::int8_t>(s.y)));
  for (const auto& s : data.samples()) {
    for (Index r = 0; r < s.x.rows(); ++r)
      for (Index c = 0; c < s.x.cols(); ++c) put_le<double>(out, s.x(r, c));
  }
  return out;
}

Dataset decode_smm1(std::span<const std::uint8_t> bytes, const std::string& name) {
  constexpr std::size_t kHeader = 4 + 4 + 24;
  if (bytes.size() < kHeader) throw FormatError("SMM1: truncated header");
  if (std::memcmp(bytes.data(), "SMM1", 4) != 0) throw FormatError("SMM1: bad magic");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != 1) throw FormatError("SMM1: unsupported version " + std::to_string(version));
  const auto m = get_le<std::uint64_t>(bytes, 8);
  const auto p = get_le<std::uint64_t>(bytes, 16);
  const auto q = get_le<std::uint64_t>(bytes, 24);
  if (m == 0) throw FormatError("SMM1: dataset has no samples");
  if (p == 0 || q == 0) throw FormatError("SMM1: sample shape must be positive");
  // Guard the size arithmetic against absurd headers before multiplying.
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 40;
  if (m > kLimit || p > kLimit || q > kLimit || p * q > kLimit / std::max<std::uint64_t>(m, 1) / 8) {
    throw FormatError("SMM1: header dimensions are implausibly large");
  }
  const std::uint64_t expected = kHeader + m + 8 * m * p * q;
  if (bytes.size() != expected) {
    throw FormatError("SMM1: size is " + std::to_string(bytes.size()) + " bytes, header implies " +
                      std::to_string(expected));
  }

  std::vector<MatrixSample> samples(m);
  std::size_t off = kHeader;
  for (std::uint64_t i = 0; i < m; ++i) {
    const auto y = static_cast<std::int8_t>(bytes[off++]);
    if (y != 1 && y != -1) {
      throw FormatError("SMM1: label " + std::to_string(int{y}) + " of sample " +
                        std::to_string(i) + " is not -1/+1");
    }
    samples[i].y = y;
  }
  for (std::uint64_t i = 0; i < m; ++i) {
    Matrix x(static_cast<Index>(p), static_cast<Index>(q));
    for (Index r = 0; r < x.rows(); ++r) {
      for (Index c = 0; c < x.cols(); ++c) {
        x(r, c) = get_le<double>(bytes, off);
        off += 8;
      }
    }
    if (!x.allFinite()) throw FormatError("SMM1: sample " + std::to_string(i) + " has non-finite entries");
    samples[i].x = std::move(x);
  }
  return Dataset(std::move(samples), name, "smm1:" + name);
}

Dataset load_smm1(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Dataset d = decode_smm1(bytes, path.stem().string());
  return d;
}

void save_smm1(const Dataset& data, const fs::path& path) {
  const auto bytes = encode_smm1(data);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Dataset reshape(const Dataset& data, Shape shape, bool pad) {
  check_reshape(static_cast<std::size_t>(data.rows() * data.cols()), shape, pad, 0);
  std::vector<MatrixSample> out;
  out.reserve(data.size());
  for (const auto& s : data.samples()) out.push_back({fill_row_major(flatten_row_major(s.x), shape), s.y});
  return Dataset(std::move(out), data.name(),
                 data.provenance() + "; reshape " + shape_tag(shape) + (pad ? " (padded)" : ""));
}

// ---------------------------------------------------------------------------

Dataset normalize_per_sample(const Dataset& data) {
  std::vector<MatrixSample> out;
  out.reserve(data.size());
  for (const auto& s : data.samples()) {
    const double mean = s.x.mean();
    const double sd = population_std(s.x);
    Matrix x = sd > 0.0 ? Matrix((s.x.array() - mean) / sd) : Matrix::Zero(s.x.rows(), s.x.cols());
    out.push_back({std::move(x), s.y});
  }
  return Dataset(std::move(out), data.name(), data.provenance() + "; per-sample z-score");
}

FeatureScaler FeatureScaler::fit(const Dataset& data) {
  FeatureScaler f;
  const double m = static_cast<double>(data.size());
  f.mean_ = Matrix::Zero(data.rows(), data.cols());
  for (const auto& s : data.samples()) f.mean_ += s.x;
  f.mean_ /= m;
  Matrix var = Matrix::Zero(data.rows(), data.cols());
  for (const auto& s : data.samples()) var.array() += (s.x - f.mean_).array().square();
  var /= m;
  f.scale_ = var.array().sqrt();
  return f;
}

Dataset FeatureScaler::apply(const Dataset& data) const {
  if (data.rows() != mean_.rows() || data.cols() != mean_.cols()) {
    throw InvalidArgument("FeatureScaler: data shape does not match fitted shape");
  }
  // Constant entries (scale 0) map to zero.
  const Matrix inv = scale_.unaryExpr([](double s) { return s > 0.0 ? 1.0 / s : 0.0; });
  std::vector<MatrixSample> out;
  out.reserve(data.size());
  for (const auto& s : data.samples()) out.push_back({(s.x - mean_).cwiseProduct(inv), s.y});
  return Dataset(std::move(out), data.name(), data.provenance() + "; feature z-score");
}

TrainTest split(const Dataset& data, double ratio, bool stratified, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidArgument("split ratio must lie in (0, 1)");
  if (stratified && !data.trainable()) {
    throw InvalidArgument("stratified split needs samples of both classes");
  }
  Rng rng(seed);
  std::vector<std::size_t> train, test;

  auto take = [&](std::vector<std::size_t> idx) {
    rng.shuffle(idx);
    const auto n_train = static_cast<std::size_t>(std::lround(ratio * static_cast<double>(idx.size())));
    train.insert(train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.insert(test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  };

  if (stratified) {
    for (int label : {1, -1}) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < data.size(); ++i)
        if (data[i].y == label) idx.push_back(i);
      take(std::move(idx));
    }
  } else {
    std::vector<std::size_t> idx(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    take(std::move(idx));
  }
  if (train.empty() || test.empty()) {
    throw InvalidArgument("split ratio " + std::to_string(ratio) + " leaves an empty side for " +
                          std::to_string(data.size()) + " samples");
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  std::ostringstream tag;
  tag << "split ratio=" << ratio << (stratified ? " stratified" : "") << " seed=" << seed;
  return {data.subset(train, tag.str() + " [train]"), data.subset(test, tag.str() + " [test]")};
}

std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& data, int k,
                                                       std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("need at least two folds");
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  for (int label : {1, -1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data[i].y == label) idx.push_back(i);
    rng.shuffle(idx);
    for (std::size_t j = 0; j < idx.size(); ++j) folds[j % folds.size()].push_back(idx[j]);
  }
  for (auto& f : folds) {
    if (f.empty()) throw InvalidArgument("too few samples for the requested number of folds");
    std::sort(f.begin(), f.end());
  }
  return folds;
}

// ---------------------------------------------------------------------------

Dataset add_gaussian_noise(const Dataset& data, double level, std::uint64_t seed) {
  if (!(level >= 0.0) || !std::isfinite(level)) throw InvalidArgument("noise level must be >= 0");
  if (level == 0.0) return data;
  Rng rng(seed);
  std::vector<MatrixSample> out;
  out.reserve(data.size());
  for (const auto& s : data.samples()) {
    const double sd = level * population_std(s.x);
    Matrix x = s.x;
    for (Index r = 0; r < x.rows(); ++r)
      for (Index c = 0; c < x.cols(); ++c) x(r, c) += sd * rng.normal();
    out.push_back({std::move(x), s.y});
  }
  std::ostringstream tag;
  tag << "gaussian noise level=" << level << " seed=" << seed;
  return Dataset(std::move(out), data.name(), data.provenance() + "; " + tag.str());
}

Dataset add_salt_pepper_noise(const Dataset& data, double level, std::uint64_t seed) {
  if (!(level >= 0.0 && level <= 1.0)) throw InvalidArgument("salt-and-pepper level must lie in [0, 1]");
  if (level == 0.0) return data;
  Rng rng(seed);
  const auto entries = static_cast<std::size_t>(data.rows() * data.cols());
  const auto corrupt = static_cast<std::size_t>(std::lround(level * static_cast<double>(entries)));
  std::vector<MatrixSample> out;
  out.reserve(data.size());
  std::vector<std::size_t> pos(entries);
  for (const auto& s : data.samples()) {
    const double lo = s.x.minCoeff();
    const double hi = s.x.maxCoeff();
    for (std::size_t k = 0; k < entries; ++k) pos[k] = k;
    Matrix x = s.x;
    // Partial Fisher-Yates: the first `corrupt` slots are a uniform sample
    // without replacement.
    for (std::size_t k = 0; k < corrupt; ++k) {
      std::swap(pos[k], pos[k + rng.index(entries - k)]);
      const auto flat = static_cast<Index>(pos[k]);
      x(flat / x.cols(), flat % x.cols()) = rng.uniform01() < 0.5 ? lo : hi;
    }
    out.push_back({std::move(x), s.y});
  }
  std::ostringstream tag;
  tag << "salt-and-pepper noise level=" << level << " seed=" << seed;
  return Dataset(std::move(out), data.name(), data.provenance() + "; " + tag.str());
}

// ---------------------------------------------------------------------------

SyntheticData make_synthetic(const SyntheticSpec& spec) {
  if (spec.p < 1 || spec.q < 1 || spec.rank < 1 || spec.samples < 2) {
    throw InvalidArgument("synthetic: dimensions and sample count must be positive");
  }
  Rng rng(spec.seed);
  Matrix u(spec.p, spec.rank), v(spec.q, spec.rank);
  for (Index j = 0; j < u.size(); ++j) u.data()[j] = rng.normal();
  for (Index j = 0; j < v.size(); ++j) v.data()[j] = rng.normal();
  Matrix w_true = u * v.transpose();

  std::vector<MatrixSample> samples;
  samples.reserve(spec.samples);
  while (samples.size() < spec.samples) {
    Matrix x(spec.p, spec.q);
    for (Index j = 0; j < x.size(); ++j) x.data()[j] = rng.normal();
    const double score = fro_inner(w_true, x) + spec.bias;
    if (std::abs(score) < spec.min_margin) continue;
    samples.push_back({std::move(x), score > 0.0 ? 1 : -1});
  }
  std::ostringstream prov;
  prov << "synthetic rank-" << spec.rank << " " << spec.p << "x" << spec.q << " m=" << spec.samples
       << " bias=" << spec.bias << " margin=" << spec.min_margin << " seed=" << spec.seed;
  return {Dataset(std::move(samples), "synthetic", prov.str()), std::move(w_true), spec.bias};
}

// ---------------------------------------------------------------------------

const char* to_string(Normalization n) {
  switch (n) {
    case Normalization::none: return "none";
    case Normalization::per_sample_zscore: return "per_sample_zscore";
    case Normalization::feature_zscore: return "feature_zscore";
  }
  return "none";
}

Normalization parse_normalization(const std::string& s) {
  if (s == "none") return Normalization::none;
  if (s == "per_sample_zscore" || s == "per_sample") return Normalization::per_sample_zscore;
  if (s == "feature_zscore" || s == "feature") return Normalization::feature_zscore;
  throw InvalidArgument("unknown normalization '" + s + "'");
}

nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::ordered_json j;
  j["format"] = m.format == DataFormat::csv ? "csv" : "smm1";
  j["path"] = m.path.string();
  if (m.shape) {
    if (m.shape->vector) j["shape"] = "vector";
    else j["shape"] = {m.shape->dims.p, m.shape->dims.q};
  }
  if (m.reshape) j["reshape"] = {m.reshape->p, m.reshape->q};
  j["pad"] = m.pad;
  j["label_column"] = m.label_column;
  j["has_header"] = m.has_header;
  j["normalization"] = to_string(m.normalization);
  if (m.split) {
    j["split"] = {{"ratio", m.split->ratio}, {"stratified", m.split->stratified}, {"seed", m.split->seed}};
  }
  return nlohmann::json(j);
}

DatasetManifest manifest_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  auto shape_of = [](const nlohmann::json& v, const char* key) {
    if (!v.is_array() || v.size() != 2) {
      throw InvalidArgument(std::string("manifest: '") + key + "' must be [p, q]");
    }
    return Shape{v[0].get<Index>(), v[1].get<Index>()};
  };
  try {
    DatasetManifest m;
    const std::string fmt = j.at("format").get<std::string>();
    if (fmt == "csv") m.format = DataFormat::csv;
    else if (fmt == "smm1") m.format = DataFormat::smm1;
    else throw InvalidArgument("manifest: unknown format '" + fmt + "'");

    m.path = j.at("path").get<std::string>();
    if (m.path.is_relative() && !base_dir.empty()) m.path = base_dir / m.path;
    m.shape.reset();
    if (j.contains("shape") && !j["shape"].is_null()) {
      const auto& s = j["shape"];
      if (s.is_string()) {
        if (s.get<std::string>() != "vector") throw InvalidArgument("manifest: shape must be \"vector\" or [p, q]");
        m.shape = DeclaredShape{};
      } else {
        m.shape = DeclaredShape{false, shape_of(s, "shape")};
      }
    }
    if (j.contains("reshape") && !j["reshape"].is_null()) m.reshape = shape_of(j["reshape"], "reshape");
    m.pad = j.value("pad", false);
    m.label_column = j.value("label_column", std::size_t{0});
    m.has_header = j.value("has_header", false);
    m.normalization = parse_normalization(j.value("normalization", std::string("none")));
    if (j.contains("split") && !j["split"].is_null()) {
      const auto& s = j["split"];
      SplitSpec sp;
      sp.ratio = s.at("ratio").get<double>();
      sp.stratified = s.value("stratified", true);
      sp.seed = s.value("seed", std::uint64_t{1});
      if (!(sp.ratio > 0.0 && sp.ratio < 1.0)) throw InvalidArgument("manifest: split ratio must lie in (0, 1)");
      m.split = sp;
    }
    if (m.reshape && m.reshape->p * m.reshape->q < 1) throw InvalidArgument("manifest: reshape must be positive");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("manifest: ") + e.what());
  }
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("manifest " + path.string() + ": " + e.what());
  }
  return manifest_from_json(j, path.parent_path());
}

PreparedData prepare(const DatasetManifest& manifest) {
  Dataset raw = [&] {
    if (manifest.format == DataFormat::csv) {
      CsvOptions opts;
      opts.label_column = manifest.label_column;
      opts.has_header = manifest.has_header;
      return load_csv(manifest.path, opts);
    }
    return load_smm1(manifest.path);
  }();

  if (manifest.shape && manifest.shape->vector && raw.rows() != 1) {
    throw InvalidArgument("manifest declares vector data but samples are " +
                          shape_tag({raw.rows(), raw.cols()}));
  }
  if (manifest.shape && !manifest.shape->vector && manifest.shape->dims != Shape{raw.rows(), raw.cols()}) {
    throw InvalidArgument("manifest declares shape " + shape_tag(manifest.shape->dims) +
                          " but data is " + shape_tag({raw.rows(), raw.cols()}));
  }
  if (manifest.reshape) raw = reshape(raw, *manifest.reshape, manifest.pad);

  auto normalize = [&](const Dataset& fit_on, std::vector<Dataset*> targets) {
    switch (manifest.normalization) {
      case Normalization::none: break;
      case Normalization::per_sample_zscore:
        for (auto* t : targets) *t = normalize_per_sample(*t);
        break;
      case Normalization::feature_zscore: {
        const auto scaler = FeatureScaler::fit(fit_on);
        for (auto* t : targets) *t = scaler.apply(*t);
        break;
      }
    }
  };

  if (manifest.split) {
    auto parts = split(raw, manifest.split->ratio, manifest.split->stratified, manifest.split->seed);
    const Dataset fit_on = parts.train;
    normalize(fit_on, {&parts.train, &parts.test});
    return {std::move(parts.train), std::move(parts.test)};
  }
  const Dataset fit_on = raw;
  normalize(fit_on, {&raw});
  return {std::move(raw), std::nullopt};
}

}  // namespace hlsmm
