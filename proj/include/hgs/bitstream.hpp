#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hgs/codec.hpp"
#include "hgs/geometry.hpp"
#include "hgs/latent.hpp"

namespace hgs::bitstream {

inline constexpr char kMagic[4] = {'H', 'G', 'S', '1'};
inline constexpr std::uint8_t kVersion = 1;

enum class QuantizerKind : std::uint8_t { kUniform = 0, kRobust = 1 };

/// UQ: (f_min, f_max). RQ: (a, b).
struct ChannelParams {
  QuantizerKind kind = QuantizerKind::kUniform;
  double first = 0.0;
  double second = 1.0;
  bool operator==(const ChannelParams&) const = default;
};

struct Header {
  std::uint64_t n = 0;
  int bd_p = 16;
  int bd_c = 16;
  int bd_o = 16;
  int bd_s = 16;
  int bd_r = 16;
  int k_c = 3;
  int k_r = 2;
  QuantizerKind quantizer = QuantizerKind::kUniform;
  bool rq_widened = false;  // RQ codes may leave [0, 2^BD - 1] by one step
  codec::AttributeMode attribute_mode = codec::AttributeMode::kRaht;
  double raht_step = 1.0;
  geometry::NormalizationTransform transform;
  bool operator==(const Header&) const = default;

  /// 3 + k_c + 1 + k_r, the number of attribute substreams.
  int channel_count() const { return k_c + 1 + 3 + k_r; }
  int channel_bit_depth(int channel) const;
};

/// Channel order: color latents (k_c), opacity, scale x/y/z, rotation latents (k_r).
struct CompactCloud {
  std::vector<IVec3> positions;  // signed lattice, Morton order
  std::vector<std::vector<std::int64_t>> channels;
  bool operator==(const CompactCloud&) const = default;
};

struct HgsBitstream {
  Header header;
  std::vector<ChannelParams> params;  // one per channel
  latent::LatentModel color_model;     // k_c -> 48
  latent::LatentModel rotation_model;  // k_r -> 4
  CompactCloud cloud;
  bool operator==(const HgsBitstream&) const = default;
};

/// Decoder weights are stored as f32; models must already be float-exact for
/// the round trip to be the identity (see LatentModel::round_to_float).
std::vector<std::uint8_t> serialize(const HgsBitstream& stream);
HgsBitstream deserialize(std::span<const std::uint8_t> bytes);

struct ComponentSize {
  std::string name;
  std::uint64_t coded_bytes = 0;
  double precodec_bytes = 0.0;  // n * channels * BD / 8; zero for side information
};

struct AllocationReport {
  std::uint64_t n = 0;
  int bits_per_primitive = 0;
  std::uint64_t total_bytes = 0;
  std::vector<ComponentSize> components;

  /// Aligned table for people.
  std::string text() const;
  /// One `key=value` per line.
  std::string key_values() const;
};

/// Walks the container without decoding any substream.
AllocationReport inspect(std::span<const std::uint8_t> bytes);

inline constexpr double kMiB = 1024.0 * 1024.0;

}  // namespace hgs::bitstream
