#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hgs/bitstream.hpp"
#include "hgs/geometry.hpp"
#include "hgs/latent.hpp"
#include "hgs/ply_io.hpp"
#include "hgs/ratecontrol.hpp"

namespace hgs::pipeline {

struct EncodeConfig {
  int bd = 16;               // positions, and every attribute without an override
  std::optional<int> bd_c;
  std::optional<int> bd_o;
  std::optional<int> bd_s;
  std::optional<int> bd_r;
  int kc = 3;
  int kr = 2;
  bitstream::QuantizerKind quantizer = bitstream::QuantizerKind::kRobust;
  double lambda = 1e-2;
  bool outlier_removal = false;
  int nb_neighbors = 50;
  double std_ratio = 2.0;
  std::optional<double> target_bytes;
  int rate_method = 1;
  double lossless_ratio = rate::kDefaultLosslessRatio;
  std::uint64_t seed = 0;
  codec::AttributeMode attribute_mode = codec::AttributeMode::kRaht;
  double raht_step = 1.0;

  // Latent fitting budget. The decoder trains on a fixed subsample; all
  // latents are then refined against the frozen decoder.
  int hidden = 50;
  int latent_epochs = 150;
  double latent_step = 1e-2;
  int latent_sample = 1024;
  int refine_steps = 3;
  double refine_step = 1e-2;
};

/// Throws ConfigError on out-of-range settings.
void validate(const EncodeConfig& config);

struct EncodeSummary {
  std::uint64_t n_input = 0;
  std::uint64_t n_after_outliers = 0;
  std::uint64_t n_after_dedup = 0;
  std::uint64_t n_final = 0;
  std::int64_t bits_per_primitive = 0;
  double estimated_bytes = 0.0;  // n * P_bit / (8 L)
  std::optional<double> target_bytes;
  int bd_reduction = 0;          // method 2 delta
  double color_loss = 0.0;       // latent fit, before quantization
  double rotation_loss = 0.0;
  std::uint64_t stream_bytes = 0;
  bitstream::AllocationReport allocation;
};

struct EncodeResult {
  std::vector<std::uint8_t> bytes;
  bitstream::HgsBitstream stream;
  /// Lattice primitives that were coded, Morton order, before quantization.
  LatticeCloud coded;
  EncodeSummary summary;
};

EncodeResult encode(const GaussianCloud& cloud, const EncodeConfig& config);

struct DecodeOptions {
  bool denormalize = false;
};

struct DecodeResult {
  GaussianCloud cloud;
  geometry::NormalizationTransform transform;
};

DecodeResult decode(std::span<const std::uint8_t> bytes, const DecodeOptions& options = {});
DecodeResult decode(const bitstream::HgsBitstream& stream, const DecodeOptions& options = {});

struct VerifyReport {
  bool ok = true;
  std::vector<std::string> failures;
  double max_color_error = 0.0;
  double max_opacity_error = 0.0;
  double max_scale_error = 0.0;
  double max_rotation_error = 0.0;
};

/// Encodes, decodes, and checks the round trip: exact container fields,
/// lattice positions, and bounded attribute error against the coded cloud.
VerifyReport verify(const GaussianCloud& cloud, const EncodeConfig& config);

/// Energy spectra of the color (48), scale (3), and rotation (4) groups.
struct PcaReport {
  std::vector<double> color;
  std::vector<double> scale;
  std::vector<double> rotation;
  std::string csv() const;
};

PcaReport pca_report(const GaussianCloud& cloud);

/// Color matrix (n x 48: DC then SH) and rotation matrix (n x 4).
latent::Matrix color_matrix(const GaussianCloud& cloud);
latent::Matrix rotation_matrix(const GaussianCloud& cloud);

}  // namespace hgs::pipeline
