#include <algorithm>
#include <numeric>
#include <string>

#include "hgs/byte_io.hpp"
#include "hgs/codec.hpp"

namespace hgs::codec {
namespace {

void check_depth(int bit_depth) {
  if (bit_depth < 1 || bit_depth > kMaxOctreeDepth) {
    throw RangeError("octree depth " + std::to_string(bit_depth) + " outside [1, " +
                     std::to_string(kMaxOctreeDepth) + "]");
  }
}

}  // namespace

std::uint64_t morton_code(const IVec3& p, int bit_depth) {
  std::uint64_t code = 0;
  for (int b = bit_depth - 1; b >= 0; --b) {
    code = (code << 3) | (static_cast<std::uint64_t>((p[0] >> b) & 1) << 2) |
           (static_cast<std::uint64_t>((p[1] >> b) & 1) << 1) |
           static_cast<std::uint64_t>((p[2] >> b) & 1);
  }
  return code;
}

IVec3 morton_decode(std::uint64_t code, int bit_depth) {
  IVec3 p{0, 0, 0};
  for (int b = 0; b < bit_depth; ++b) {
    const auto octant = static_cast<std::int32_t>((code >> (3 * b)) & 7u);
    p[0] |= ((octant >> 2) & 1) << b;
    p[1] |= ((octant >> 1) & 1) << b;
    p[2] |= (octant & 1) << b;
  }
  return p;
}

std::vector<std::size_t> morton_order(std::span<const IVec3> positions, int bit_depth) {
  std::vector<std::uint64_t> codes(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) codes[i] = morton_code(positions[i], bit_depth);
  std::vector<std::size_t> order(positions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return codes[a] != codes[b] ? codes[a] < codes[b] : a < b;
  });
  return order;
}

OctreeStream octree_encode(std::span<const IVec3> positions, int bit_depth) {
  check_depth(bit_depth);
  const std::int64_t side = std::int64_t{1} << bit_depth;
  std::vector<std::uint64_t> codes(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      if (positions[i][a] < 0 || positions[i][a] >= side) {
        throw RangeError("point " + std::to_string(i) + " lies outside the " +
                         std::to_string(bit_depth) + "-bit cube");
      }
    }
    codes[i] = morton_code(positions[i], bit_depth);
  }
  std::sort(codes.begin(), codes.end());
  if (std::adjacent_find(codes.begin(), codes.end()) != codes.end()) {
    throw DuplicateError("octree input contains duplicate positions");
  }

  OctreeStream out;
  out.bit_depth = bit_depth;
  out.point_count = codes.size();
  // Sorted Morton codes list the nodes of every level in breadth-first order.
  for (int level = 0; level < bit_depth; ++level) {
    const int child_shift = 3 * (bit_depth - level - 1);
    const int node_shift = child_shift + 3;
    std::size_t i = 0;
    while (i < codes.size()) {
      const std::uint64_t node = node_shift >= 64 ? 0 : codes[i] >> node_shift;
      std::uint8_t byte = 0;
      while (i < codes.size() && (node_shift >= 64 ? 0 : codes[i] >> node_shift) == node) {
        byte |= static_cast<std::uint8_t>(1u << ((codes[i] >> child_shift) & 7u));
        ++i;
      }
      out.occupancy.push_back(byte);
    }
  }
  return out;
}

std::vector<IVec3> octree_decode(const OctreeStream& stream) {
  check_depth(stream.bit_depth);
  std::vector<std::uint64_t> nodes;
  if (stream.point_count > 0) nodes.push_back(0);
  std::size_t pos = 0;
  for (int level = 0; level < stream.bit_depth && !nodes.empty(); ++level) {
    std::vector<std::uint64_t> children;
    children.reserve(nodes.size() * 2);
    for (std::uint64_t node : nodes) {
      if (pos >= stream.occupancy.size()) throw CorruptStreamError("occupancy stream truncated");
      const std::uint8_t byte = stream.occupancy[pos++];
      if (byte == 0) throw CorruptStreamError("occupancy byte with no children");
      for (std::uint64_t octant = 0; octant < 8; ++octant) {
        if (byte & (1u << octant)) children.push_back((node << 3) | octant);
      }
      if (children.size() > stream.point_count) {
        throw CorruptStreamError("occupancy describes more points than declared");
      }
    }
    nodes = std::move(children);
  }
  if (pos != stream.occupancy.size()) throw CorruptStreamError("trailing occupancy bytes");
  if (nodes.size() != stream.point_count) {
    throw CorruptStreamError("decoded " + std::to_string(nodes.size()) + " points, header says " +
                             std::to_string(stream.point_count));
  }
  std::vector<IVec3> out(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) out[i] = morton_decode(nodes[i], stream.bit_depth);
  return out;
}

std::vector<std::uint8_t> encode_geometry(std::span<const IVec3> signed_positions, int bit_depth) {
  check_depth(bit_depth);
  const std::int32_t offset = static_cast<std::int32_t>((std::int64_t{1} << (bit_depth - 1)) - 1);
  std::vector<IVec3> shifted(signed_positions.size());
  for (std::size_t i = 0; i < shifted.size(); ++i) {
    for (int a = 0; a < 3; ++a) shifted[i][a] = signed_positions[i][a] + offset;
  }
  const OctreeStream tree = octree_encode(shifted, bit_depth);
  std::vector<std::int64_t> symbols(tree.occupancy.begin(), tree.occupancy.end());

  ByteWriter w;
  w.put(static_cast<std::uint8_t>(bit_depth));
  w.put(offset);
  w.put(static_cast<std::uint64_t>(tree.point_count));
  w.put_bytes(entropy_encode(symbols, SymbolKind::kOccupancy));
  return w.take();
}

std::vector<IVec3> decode_geometry(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  OctreeStream tree;
  tree.bit_depth = r.get<std::uint8_t>("geometry bit depth");
  const auto offset = r.get<std::int32_t>("geometry offset");
  tree.point_count = r.get<std::uint64_t>("geometry point count");
  if (tree.bit_depth < 1 || tree.bit_depth > kMaxOctreeDepth) {
    throw CorruptStreamError("geometry bit depth out of range");
  }
  const auto symbols = entropy_decode(r.get_bytes(r.remaining(), "occupancy"), SymbolKind::kOccupancy);
  tree.occupancy.assign(symbols.begin(), symbols.end());
  std::vector<IVec3> points = octree_decode(tree);
  for (IVec3& p : points) {
    for (int a = 0; a < 3; ++a) p[a] -= offset;
  }
  return points;
}

}  // namespace hgs::codec
