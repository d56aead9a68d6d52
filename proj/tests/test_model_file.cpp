#include "hlsmm/error.hpp"
#include "hlsmm/model_file.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cstring>

namespace hlsmm {
namespace {

using testing::ReadFile;
using testing::ScratchDir;
using testing::WriteFile;

std::vector<std::uint8_t> Bytes(const std::string& s) { return {s.begin(), s.end()}; }

TEST(Base64, KnownVectors) {
  const std::pair<const char*, const char*> cases[] = {
      {"", ""},         {"f", "Zg=="},         {"fo", "Zm8="},         {"foo", "Zm9v"},
      {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="}, {"foobar", "Zm9vYmFy"}};
  for (const auto& [plain, enc] : cases) {
    EXPECT_EQ(base64_encode(Bytes(plain)), enc);
    EXPECT_EQ(base64_decode(enc), Bytes(plain));
  }
}

TEST(Base64, RoundTripsArbitraryBytes) {
  oracle::Random rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::uint8_t> b(static_cast<std::size_t>(rng.integer(0, 100)));
    for (auto& x : b) x = static_cast<std::uint8_t>(rng.integer(0, 255));
    EXPECT_EQ(base64_decode(base64_encode(b)), b);
  }
  EXPECT_THROW(base64_decode("Zm9"), FormatError);
  EXPECT_THROW(base64_decode("Zm9v!A=="), FormatError);
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(Bytes("abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex({}), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

ModelFile SampleModel() {
  oracle::Random rng(2);
  ModelFile m;
  m.w = rng.matrix(3, 2) * rng.matrix(2, 4);
  m.b = -0.123456789012345;
  m.hyperparams.rank = 2;
  m.hyperparams.beta = 0.5;
  m.hyperparams.step = StepPolicy::fixed(0.01);
  m.hyperparams.init = InitPolicy::zero_slack;
  m.status = "converged";
  m.iterations = 17;
  m.warm_start_iterations = 5;
  m.dataset = "toy";
  m.source = "unit test";
  m.seed = 99;
  m.build = "test";
  return m;
}

TEST(ModelFile, SaveLoadSaveIsByteIdentical) {
  ScratchDir dir("model");
  const ModelFile m = SampleModel();
  save_model(m, dir / "a.json");
  const ModelFile back = load_model(dir / "a.json");
  EXPECT_EQ(back.w, m.w);
  EXPECT_EQ(back.b, m.b);
  EXPECT_EQ(back.hyperparams, m.hyperparams);
  EXPECT_EQ(back.iterations, 17u);
  EXPECT_EQ(back.seed, 99u);
  save_model(back, dir / "b.json");
  EXPECT_EQ(ReadFile(dir / "a.json"), ReadFile(dir / "b.json"));
}

TEST(ModelFile, WeightsAreLittleEndianRowMajor) {
  ModelFile m = SampleModel();
  const auto j = nlohmann::json::parse(serialize_model(m));
  const auto bytes = base64_decode(j["w"]["data"].get<std::string>());
  ASSERT_EQ(bytes.size(), 8u * 12u);
  EXPECT_EQ(j["w"]["sha256"], sha256_hex(bytes));
  double first = 0.0, second = 0.0;
  std::memcpy(&first, bytes.data(), 8);
  std::memcpy(&second, bytes.data() + 8, 8);
  EXPECT_EQ(first, m.w(0, 0));
  EXPECT_EQ(second, m.w(0, 1));
  EXPECT_EQ(j["p"], 3);
  EXPECT_EQ(j["q"], 4);
}

TEST(ModelFile, TamperingIsDetected) {
  const std::string text = serialize_model(SampleModel());
  auto j = nlohmann::ordered_json::parse(text);

  auto bad_digest = j;
  std::string digest = bad_digest["w"]["sha256"];
  digest[0] = digest[0] == '0' ? '1' : '0';
  bad_digest["w"]["sha256"] = digest;
  EXPECT_THROW(parse_model(bad_digest.dump()), FormatError);

  auto bad_size = j;
  bad_size["q"] = 5;
  EXPECT_THROW(parse_model(bad_size.dump()), FormatError);

  auto bad_format = j;
  bad_format["format"] = "other";
  EXPECT_THROW(parse_model(bad_format.dump()), FormatError);

  EXPECT_THROW(parse_model("{not json"), FormatError);
  EXPECT_NO_THROW(parse_model(text));
}

TEST(ModelFile, MissingFileIsIoError) {
  ScratchDir dir("model");
  EXPECT_THROW(load_model(dir / "absent.json"), IoError);
  WriteFile(dir / "empty.json", "");
  EXPECT_THROW(load_model(dir / "empty.json"), FormatError);
}

TEST(HyperparamsJson, RoundTripAndDefaults) {
  Hyperparams hp;
  hp.beta = 0.01;
  hp.sigma = 0.5;
  hp.rank = 7;
  hp.tau1 = 1e-2;
  hp.maxit = 42;
  hp.step = StepPolicy::backtracking(0.5);
  hp.z_update = ZUpdateRule::paper;
  hp.lipschitz = LipschitzBound::trace;
  hp.seed = 12345678901234ULL;
  EXPECT_EQ(hyperparams_from_json(hyperparams_to_json(hp)), hp);

  Hyperparams defaults;
  defaults.rank = 3;
  const Hyperparams partial = hyperparams_from_json(nlohmann::json{{"beta", 0.25}}, defaults);
  EXPECT_EQ(partial.beta, 0.25);
  EXPECT_EQ(partial.rank, 3);
}

TEST(ModelFile, FromFitCarriesTrainingRecord) {
  const FitResult& r = testing::SyntheticFit();
  const ModelFile m = ModelFile::from_fit(r, testing::Synthetic().data);
  EXPECT_EQ(m.status, "converged");
  EXPECT_EQ(m.iterations, r.model.iter);
  EXPECT_EQ(m.state().w, r.model.w);
  EXPECT_EQ(m.state().b, r.model.b);
  EXPECT_EQ(parse_model(serialize_model(m)).w, r.model.w);
}

}  // namespace
}  // namespace hlsmm
