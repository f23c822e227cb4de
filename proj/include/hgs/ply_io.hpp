#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hgs {

inline constexpr int kShCoeffs = 45;
inline constexpr int kColorChannels = 3 + kShCoeffs;  // DC + SH, decoded jointly
inline constexpr int kRotationChannels = 4;

/// Floating-point Gaussian primitives, row-major per attribute group.
///
/// Opacity is stored as a pre-sigmoid logit and scale as a per-axis log, the
/// same way the community 3DGS PLY files carry them.
struct GaussianCloud {
  std::vector<float> positions;  // n x 3
  std::vector<float> color_dc;   // n x 3
  std::vector<float> color_sh;   // n x 45, PLY f_rest order
  std::vector<float> opacity;    // n
  std::vector<float> scale;      // n x 3
  std::vector<float> rotation;   // n x 4, (w, x, y, z), not normalized

  std::size_t size() const { return opacity.size(); }
  void resize(std::size_t n);
  bool operator==(const GaussianCloud&) const = default;
};

/// Checks that every attribute group has the same leading dimension and n >= 1.
void validate(const GaussianCloud& cloud);

/// Copies the primitives at `indices` (in that order) into a new cloud.
GaussianCloud select(const GaussianCloud& cloud, std::span<const std::size_t> indices);

struct Camera {
  std::int64_t id = 0;
  std::array<double, 3> center{};
  std::array<double, 9> rotation{};  // row-major 3x3
  bool operator==(const Camera&) const = default;
};

using CameraList = std::vector<Camera>;

namespace ply {

/// Parses a binary-little-endian 3DGS PLY buffer. Normals and unknown
/// properties are skipped.
GaussianCloud parse_ply(std::span<const std::uint8_t> bytes);

/// Emits the 62-property 3DGS layout with zero normals.
std::vector<std::uint8_t> write_ply(const GaussianCloud& cloud);

GaussianCloud read_ply_file(const std::string& path);
void write_ply_file(const std::string& path, const GaussianCloud& cloud);

/// One camera per line: `id tx ty tz r00 r01 r02 r10 ... r22`. Blank lines and
/// lines starting with '#' are ignored.
CameraList parse_cameras(const std::string& text);
std::string write_cameras(const CameraList& cameras);

CameraList read_cameras_file(const std::string& path);
void write_cameras_file(const std::string& path, const CameraList& cameras);

}  // namespace ply

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace hgs
