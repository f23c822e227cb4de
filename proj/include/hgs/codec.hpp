#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hgs/geometry.hpp"

namespace hgs::codec {

// ---------------------------------------------------------------------------
// Adaptive binary range coder
// ---------------------------------------------------------------------------

/// 12-bit probability of a zero bit, adapted with a shift of 4.
struct BitModel {
  static constexpr std::uint32_t kBits = 12;
  static constexpr std::uint32_t kOne = 1u << kBits;
  static constexpr std::uint32_t kShift = 4;
  std::uint16_t p0 = kOne / 2;
};

/// Carry-propagating range encoder with a 32-bit range and byte-wise output.
class RangeEncoder {
 public:
  void encode(BitModel& model, int bit);
  /// Equiprobable bits, most significant first.
  void encode_direct(std::uint64_t value, int count);
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);
  int decode(BitModel& model);
  std::uint64_t decode_direct(int count);
  /// True when every input byte was consumed and none were invented.
  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  std::uint8_t next_byte();
  void normalize();

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t code_ = 0;
};

enum class SymbolKind : std::uint8_t { kOccupancy = 0, kCoefficient = 1 };

/// Self-delimiting entropy stream: [u8 mode][u32 count][payload]. Mode 0 is
/// range coded; mode 1 stores the symbols verbatim when that is smaller.
/// Occupancy symbols must be in [1, 255]; coefficients satisfy |v| < 2^62.
std::vector<std::uint8_t> entropy_encode(std::span<const std::int64_t> symbols, SymbolKind kind);
std::vector<std::int64_t> entropy_decode(std::span<const std::uint8_t> bytes, SymbolKind kind);

inline constexpr std::size_t kEntropyHeaderBytes = 5;

// ---------------------------------------------------------------------------
// Octree geometry
// ---------------------------------------------------------------------------

inline constexpr int kMaxOctreeDepth = 21;

/// Interleaves coordinate bits, x most significant within each level.
std::uint64_t morton_code(const IVec3& p, int bit_depth);
IVec3 morton_decode(std::uint64_t code, int bit_depth);

struct OctreeStream {
  int bit_depth = 0;
  std::uint64_t point_count = 0;
  std::vector<std::uint8_t> occupancy;  // breadth-first
  bool operator==(const OctreeStream&) const = default;
};

/// Positions must be unique and lie in [0, 2^N - 1]. Child octant index is
/// (x_bit << 2) | (y_bit << 1) | z_bit; bit i of a byte marks octant i.
OctreeStream octree_encode(std::span<const IVec3> positions, int bit_depth);

/// Recovers the voxels in Morton order.
std::vector<IVec3> octree_decode(const OctreeStream& stream);

/// Sorts positions into Morton order; returns the permutation applied
/// (result[i] = original index of the i-th sorted point).
std::vector<std::size_t> morton_order(std::span<const IVec3> positions, int bit_depth);

/// Geometry substream: [u8 N][i32 offset][u64 count][entropy-coded occupancy],
/// where offset = 2^(N-1) - 1 moves signed lattice coordinates into [0, 2^N - 1].
std::vector<std::uint8_t> encode_geometry(std::span<const IVec3> signed_positions, int bit_depth);
std::vector<IVec3> decode_geometry(std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------------------
// Region-adaptive hierarchical transform
// ---------------------------------------------------------------------------

struct RahtCoefficients;

/// Pairing structure of the transform, derived from the geometry alone.
class RahtPlan {
 public:
  /// `positions` may be in any order; they are sorted by Morton code and the
  /// transform expects attributes aligned to that order.
  RahtPlan(std::span<const IVec3> positions, int bit_depth);
  /// Codes must already be sorted and unique.
  explicit RahtPlan(std::vector<std::uint64_t> sorted_codes, int bit_depth);

  std::size_t size() const { return count_; }
  const std::vector<std::uint64_t>& morton_codes() const { return codes_; }

 private:
  friend RahtCoefficients raht_forward(std::span<const double>, const RahtPlan&);
  friend std::vector<double> raht_inverse(std::span<const double>, const RahtPlan&);
  struct Merge {
    std::uint32_t first;  // index of the low sibling in the level's node list
    double alpha;         // sqrt(w1 / (w1 + w2))
    double beta;          // sqrt(w2 / (w1 + w2))
    std::int64_t weight;  // w1 + w2
  };
  struct Step {
    std::size_t input_size = 0;
    std::size_t ac_offset = 0;  // position of the first AC of this step in the output
    std::vector<Merge> merges;
  };
  void build(int bit_depth);

  std::size_t count_ = 0;
  std::vector<std::uint64_t> codes_;
  std::vector<Step> steps_;  // bottom-up: z, y, x per level
};

struct RahtCoefficients {
  std::vector<double> coefficients;  // DC first, then ACs coarse to fine
  std::vector<std::int64_t> weights;  // weight attached to each coefficient
};

RahtCoefficients raht_forward(std::span<const double> attributes, const RahtPlan& plan);
RahtCoefficients raht_forward(std::span<const double> attributes, std::span<const IVec3> positions,
                              int bit_depth);
std::vector<double> raht_inverse(std::span<const double> coefficients, const RahtPlan& plan);

/// round(c / qs), halves away from zero.
std::vector<std::int64_t> quantize_coeffs(std::span<const double> coefficients, double qs);
std::vector<double> dequantize_coeffs(std::span<const std::int64_t> levels, double qs);

// ---------------------------------------------------------------------------
// Attribute substreams
// ---------------------------------------------------------------------------

enum class AttributeMode : std::uint8_t { kRaht = 0, kBypass = 1 };

/// Codes one integer attribute channel (Morton-aligned). In RAHT mode with
/// qs == 1 a residual layer makes the round trip exact; qs > 1 is lossy.
std::vector<std::uint8_t> encode_attribute(std::span<const std::int64_t> codes,
                                           const RahtPlan& plan, AttributeMode mode, double qs);
std::vector<std::int64_t> decode_attribute(std::span<const std::uint8_t> bytes,
                                           const RahtPlan& plan, AttributeMode mode, double qs);

}  // namespace hgs::codec
