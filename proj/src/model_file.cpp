#include "hlsmm/model_file.hpp"

#include "hlsmm/error.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#ifndef HLSMM_BUILD_ID
#define HLSMM_BUILD_ID "unknown"
#endif

namespace hlsmm {

namespace {

constexpr const char* kFormat = "hlsmm-model";
constexpr int kFormatVersion = 1;
constexpr const char* kEncoding = "base64-f64le-rowmajor";

std::vector<std::uint8_t> pack_rowmajor(const Matrix& w) {
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(w.size()) * 8);
  for (Index r = 0; r < w.rows(); ++r) {
    for (Index c = 0; c < w.cols(); ++c) {
      const auto bits = std::bit_cast<std::uint64_t>(w(r, c));
      for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
    }
  }
  return out;
}

Matrix unpack_rowmajor(const std::vector<std::uint8_t>& bytes, Index p, Index q) {
  Matrix w(p, q);
  std::size_t off = 0;
  for (Index r = 0; r < p; ++r) {
    for (Index c = 0; c < q; ++c) {
      std::uint64_t bits = 0;
      for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[off + k]) << (8 * k);
      w(r, c) = std::bit_cast<double>(bits);
      off += 8;
    }
  }
  return w;
}

}  // namespace

const char* build_id() { return HLSMM_BUILD_ID; }

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw FormatError("base64 payload length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw FormatError("invalid base64 payload");
  // EVP_DecodeBlock keeps the bytes produced by '=' padding; drop them.
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

nlohmann::ordered_json hyperparams_to_json(const Hyperparams& hp) {
  nlohmann::ordered_json j;
  j["beta"] = hp.beta;
  j["sigma"] = hp.sigma;
  j["rank"] = hp.rank;
  j["tau1"] = hp.tau1;
  j["tau2"] = hp.tau2;
  j["tau3"] = hp.tau3;
  j["maxit"] = hp.maxit;
  j["tol_step"] = hp.tol_step;
  j["tol_obj"] = hp.tol_obj;
  j["step"] = {{"policy", to_string(hp.step.kind)},
               {"alpha0", hp.step.alpha0},
               {"shrink", hp.step.shrink},
               {"max_halvings", hp.step.max_halvings}};
  j["lipschitz"] = to_string(hp.lipschitz);
  j["z_update"] = to_string(hp.z_update);
  j["init"] = to_string(hp.init);
  j["seed"] = hp.seed;
  return j;
}

Hyperparams hyperparams_from_json(const nlohmann::json& j, const Hyperparams& defaults) {
  Hyperparams hp = defaults;
  try {
    hp.beta = j.value("beta", hp.beta);
    hp.sigma = j.value("sigma", hp.sigma);
    hp.rank = j.value("rank", hp.rank);
    hp.tau1 = j.value("tau1", hp.tau1);
    hp.tau2 = j.value("tau2", hp.tau2);
    hp.tau3 = j.value("tau3", hp.tau3);
    hp.maxit = j.value("maxit", hp.maxit);
    hp.tol_step = j.value("tol_step", hp.tol_step);
    hp.tol_obj = j.value("tol_obj", hp.tol_obj);
    if (j.contains("step")) {
      const auto& s = j["step"];
      const std::string policy = s.value("policy", std::string(to_string(hp.step.kind)));
      if (policy == "fixed") hp.step.kind = StepPolicy::Kind::fixed;
      else if (policy == "backtracking") hp.step.kind = StepPolicy::Kind::backtracking;
      else throw InvalidArgument("unknown step policy '" + policy + "'");
      hp.step.alpha0 = s.value("alpha0", hp.step.alpha0);
      hp.step.shrink = s.value("shrink", hp.step.shrink);
      hp.step.max_halvings = s.value("max_halvings", hp.step.max_halvings);
    }
    if (j.contains("lipschitz")) hp.lipschitz = parse_lipschitz_bound(j["lipschitz"].get<std::string>());
    if (j.contains("z_update")) hp.z_update = parse_z_update(j["z_update"].get<std::string>());
    if (j.contains("init")) hp.init = parse_init_policy(j["init"].get<std::string>());
    hp.seed = j.value("seed", hp.seed);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("hyperparameters: ") + e.what());
  }
  return hp;
}

ModelFile ModelFile::from_fit(const FitResult& fit, const Dataset& data) {
  ModelFile m;
  m.w = fit.model.w;
  m.b = fit.model.b;
  m.hyperparams = fit.hyperparams;
  m.status = to_string(fit.trace.status);
  m.iterations = fit.model.iter;
  m.warm_start_iterations = fit.trace.warm_start_iterations;
  m.dataset = data.name();
  m.source = data.provenance();
  m.seed = fit.hyperparams.seed;
  m.build = build_id();
  return m;
}

ModelState ModelFile::state() const {
  ModelState s;
  s.w = w;
  s.b = b;
  s.iter = iterations;
  return s;
}

std::string serialize_model(const ModelFile& m) {
  const auto bytes = pack_rowmajor(m.w);
  nlohmann::ordered_json j;
  j["format"] = kFormat;
  j["format_version"] = kFormatVersion;
  j["p"] = m.w.rows();
  j["q"] = m.w.cols();
  j["rank_bound"] = m.hyperparams.rank;
  j["b"] = m.b;
  j["hyperparams"] = hyperparams_to_json(m.hyperparams);
  j["w"] = {{"encoding", kEncoding}, {"data", base64_encode(bytes)}, {"sha256", sha256_hex(bytes)}};
  j["training"] = {{"status", m.status},
                   {"iterations", m.iterations},
                   {"warm_start_iterations", m.warm_start_iterations}};
  j["provenance"] = {{"dataset", m.dataset}, {"source", m.source}, {"seed", m.seed}, {"build", m.build}};
  return j.dump(2) + "\n";
}

ModelFile parse_model(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) throw FormatError("not an hlsmm model file");
    const int version = j.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw FormatError("unsupported model format version " + std::to_string(version));
    }
    const auto p = j.at("p").get<Index>();
    const auto q = j.at("q").get<Index>();
    if (p < 1 || q < 1) throw FormatError("model shape must be positive");

    const auto& wj = j.at("w");
    if (wj.at("encoding").get<std::string>() != kEncoding) {
      throw FormatError("unsupported weight encoding");
    }
    const auto bytes = base64_decode(wj.at("data").get<std::string>());
    if (bytes.size() != static_cast<std::size_t>(p * q * 8)) {
      throw FormatError("weight payload has " + std::to_string(bytes.size()) + " bytes, expected " +
                        std::to_string(p * q * 8));
    }
    if (sha256_hex(bytes) != wj.at("sha256").get<std::string>()) {
      throw FormatError("weight digest mismatch");
    }

    ModelFile m;
    m.w = unpack_rowmajor(bytes, p, q);
    if (!m.w.allFinite()) throw FormatError("model weights are not finite");
    m.b = j.at("b").get<double>();
    m.hyperparams = hyperparams_from_json(j.at("hyperparams"));
    if (j.at("rank_bound").get<Index>() != m.hyperparams.rank) {
      throw FormatError("rank_bound disagrees with hyperparams.rank");
    }
    const auto& t = j.at("training");
    m.status = t.at("status").get<std::string>();
    m.iterations = t.at("iterations").get<std::size_t>();
    m.warm_start_iterations = t.at("warm_start_iterations").get<std::size_t>();
    const auto& pv = j.at("provenance");
    m.dataset = pv.at("dataset").get<std::string>();
    m.source = pv.at("source").get<std::string>();
    m.seed = pv.at("seed").get<std::uint64_t>();
    m.build = pv.at("build").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
}

void save_model(const ModelFile& model, const std::filesystem::path& path) {
  const std::string text = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace hlsmm
