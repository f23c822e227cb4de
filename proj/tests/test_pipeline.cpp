#include <doctest.h>

#include <cfloat>
#include <cmath>

#include "hgs/errors.hpp"
#include "hgs/pipeline.hpp"
#include "support/synthetic.hpp"

using namespace hgs;
using namespace hgs::pipeline;

namespace {

EncodeConfig fast_config() {
  EncodeConfig cfg;
  cfg.latent_epochs = 20;
  return cfg;
}

}  // namespace

TEST_CASE("default encode then decode") {
  const auto cloud = testing::synthetic_cloud(1000, 21);
  const auto enc = encode(cloud, EncodeConfig{});
  CHECK(enc.summary.n_input == 1000);
  CHECK(enc.summary.bits_per_primitive == 192);
  CHECK(enc.summary.stream_bytes == enc.bytes.size());
  const auto dec = decode(enc.bytes);
  REQUIRE(dec.cloud.size() == enc.coded.voxels.size());
  for (std::size_t i = 0; i < dec.cloud.size(); ++i)
    for (int a = 0; a < 3; ++a) CHECK(dec.cloud.positions[i * 3 + a] == static_cast<float>(enc.coded.voxels[i][a]));
  CHECK(dec.transform == enc.stream.header.transform);
}

TEST_CASE("verify passes for both quantizers and attribute modes") {
  const auto cloud = testing::synthetic_cloud(800, 22);
  for (auto q : {bitstream::QuantizerKind::kUniform, bitstream::QuantizerKind::kRobust}) {
    for (auto mode : {codec::AttributeMode::kRaht, codec::AttributeMode::kBypass}) {
      auto cfg = fast_config();
      cfg.quantizer = q;
      cfg.attribute_mode = mode;
      const auto report = verify(cloud, cfg);
      CHECK(report.ok);
      for (const auto& f : report.failures) MESSAGE(f);
    }
  }
}

TEST_CASE("bypass streams carry the quantized integers exactly") {
  auto cfg = fast_config();
  cfg.attribute_mode = codec::AttributeMode::kBypass;
  cfg.quantizer = bitstream::QuantizerKind::kUniform;
  const auto enc = encode(testing::synthetic_cloud(600, 23), cfg);
  CHECK(bitstream::deserialize(enc.bytes).cloud == enc.stream.cloud);

  // Opacity is quantized directly, so its error is at most half a step.
  const auto dec = decode(enc.bytes);
  const auto& p = enc.stream.params[static_cast<std::size_t>(enc.stream.header.k_c)];
  const double step = (p.second - p.first) / 65535.0;
  for (std::size_t i = 0; i < dec.cloud.size(); ++i) {
    const double err = std::abs(double{dec.cloud.opacity[i]} - double{enc.coded.attributes.opacity[i]});
    CHECK(err <= step / 2 + 4 * FLT_EPSILON * std::max(std::abs(p.first), std::abs(p.second)));
  }
}

TEST_CASE("encoding is deterministic") {
  const auto cloud = testing::synthetic_cloud(1500, 24);
  const auto cfg = fast_config();
  CHECK(encode(cloud, cfg).bytes == encode(cloud, cfg).bytes);
}

TEST_CASE("denormalized decode returns scene units") {
  const auto cloud = testing::synthetic_cloud(500, 25);
  const auto enc = encode(cloud, fast_config());
  const auto dec = decode(enc.bytes, DecodeOptions{true});
  const auto& t = enc.stream.header.transform;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto back = t.invert({double(enc.coded.voxels[i][0]), double(enc.coded.voxels[i][1]),
                                double(enc.coded.voxels[i][2])});
    for (int a = 0; a < 3; ++a) CHECK(dec.cloud.positions[i * 3 + a] == doctest::Approx(back[a]).epsilon(1e-6));
  }
}

TEST_CASE("method 1 target size prunes to the budget") {
  const auto cloud = testing::synthetic_cloud(5000, 26);
  auto cfg = fast_config();
  cfg.target_bytes = 40000.0;
  const auto enc = encode(cloud, cfg);
  CHECK(enc.summary.n_final < enc.summary.n_after_dedup);
  const double precodec = enc.summary.n_final * 192.0 / 8.0;
  CHECK(precodec <= *cfg.target_bytes * cfg.lossless_ratio);
  CHECK((enc.summary.n_final + 1) * 192.0 / 8.0 > *cfg.target_bytes * cfg.lossless_ratio);
  CHECK(decode(enc.bytes).cloud.size() == enc.summary.n_final);
}

TEST_CASE("method 2 target size lowers attribute depth") {
  const auto cloud = testing::synthetic_cloud(3000, 27);
  auto cfg = fast_config();
  cfg.rate_method = 2;
  cfg.target_bytes = 3000 * 150.0 / (8 * 1.3);
  const auto enc = encode(cloud, cfg);
  CHECK(enc.summary.bd_reduction > 0);
  CHECK(enc.summary.estimated_bytes <= *cfg.target_bytes);
  CHECK(enc.stream.header.bd_p == 16);
  CHECK(enc.stream.header.bd_c == 16 - enc.summary.bd_reduction);
  CHECK(verify(cloud, cfg).ok);

  cfg.target_bytes = 100.0;
  try {
    encode(cloud, cfg);
    FAIL("expected an infeasible rate");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::kInfeasibleRate);
  }
}

TEST_CASE("configuration is validated") {
  EncodeConfig cfg;
  cfg.bd = 1;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg.bd = 19;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = EncodeConfig{};
  cfg.kc = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = EncodeConfig{};
  cfg.kr = 5;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = EncodeConfig{};
  cfg.lambda = -1;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  CHECK_NOTHROW(validate(EncodeConfig{}));
}

TEST_CASE("outlier removal runs inside the pipeline") {
  auto cloud = testing::synthetic_cloud(400, 28);
  cloud.positions[0] = 1e4f;
  auto cfg = fast_config();
  cfg.outlier_removal = true;
  cfg.nb_neighbors = 10;
  const auto enc = encode(cloud, cfg);
  CHECK(enc.summary.n_after_outliers < 400);
}

TEST_CASE("pca report spectra") {
  auto cloud = testing::synthetic_cloud(300, 29);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const float t = static_cast<float>(i) / 300.0f - 0.5f;
    for (int a = 0; a < 4; ++a) cloud.rotation[i * 4 + a] = t * static_cast<float>(a + 1);
  }
  const auto r = pca_report(cloud);
  REQUIRE(r.rotation.size() == 4);
  CHECK(r.rotation[0] == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 1; i < 4; ++i) CHECK(r.rotation[static_cast<std::size_t>(i)] < 1e-12);
  for (const auto* spectrum : {&r.color, &r.scale, &r.rotation}) {
    double sum = 0;
    for (double v : *spectrum) sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
  CHECK(r.color.size() == 48);
  CHECK(r.scale.size() == 3);
  CHECK(r.csv().rfind("group,component,energy", 0) == 0);
}

TEST_CASE("corrupt bytes surface as corrupt stream errors") {
  const auto enc = encode(testing::synthetic_cloud(200, 30), fast_config());
  auto bytes = enc.bytes;
  bytes.resize(bytes.size() / 2);
  CHECK_THROWS_AS(decode(bytes), CorruptStreamError);
}
