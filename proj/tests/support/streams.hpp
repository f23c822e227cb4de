#pragma once

#include <random>

#include "hgs/bitstream.hpp"
#include "hgs/codec.hpp"

namespace hgs::testing {

inline latent::LatentModel seeded_model(int k, int hidden, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.5);
  latent::LatentModel m;
  m.w1.resize(k, hidden);
  m.b1.resize(hidden);
  m.w2.resize(hidden, d);
  m.b2.resize(d);
  for (auto* mat : {&m.w1, &m.w2})
    for (Eigen::Index i = 0; i < mat->size(); ++i) mat->data()[i] = g(rng);
  for (auto* vec : {&m.b1, &m.b2})
    for (Eigen::Index i = 0; i < vec->size(); ++i) vec->data()[i] = g(rng);
  m.round_to_float();
  return m;
}

/// A consistent container with n primitives on the first n Morton cells.
/// With `random_codes` off every channel is zero, which keeps large streams cheap.
inline bitstream::HgsBitstream make_stream(std::uint64_t n, int bd, int k_c, int k_r,
                                           codec::AttributeMode mode, bool random_codes,
                                           std::uint64_t seed = 1) {
  bitstream::HgsBitstream s;
  auto& h = s.header;
  h.n = n;
  h.bd_p = h.bd_c = h.bd_o = h.bd_s = h.bd_r = bd;
  h.k_c = k_c;
  h.k_r = k_r;
  h.quantizer = bitstream::QuantizerKind::kUniform;
  h.attribute_mode = mode;
  h.transform.bit_depth = bd;
  h.transform.center = {0.5, -1.25, 3.0};
  h.transform.scale = 1234.5;
  const std::int32_t offset = (1 << (bd - 1)) - 1;
  s.cloud.positions.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    auto p = codec::morton_decode(i, bd);
    for (auto& c : p) c -= offset;
    s.cloud.positions[i] = p;
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> u(0, (std::int64_t{1} << bd) - 1);
  s.cloud.channels.assign(static_cast<std::size_t>(h.channel_count()), std::vector<std::int64_t>(n, 0));
  if (random_codes)
    for (auto& ch : s.cloud.channels)
      for (auto& v : ch) v = u(rng);
  for (int c = 0; c < h.channel_count(); ++c)
    s.params.push_back({bitstream::QuantizerKind::kUniform, -1.0 - c, 2.0 + 0.5 * c});
  s.color_model = seeded_model(k_c, 8, 48, seed + 1);
  s.rotation_model = seeded_model(k_r, 8, 4, seed + 2);
  return s;
}

}  // namespace hgs::testing
