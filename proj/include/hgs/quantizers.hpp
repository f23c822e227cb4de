#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hgs::quant {

using Codes = std::vector<std::int64_t>;

inline constexpr double kDefaultEpsilon = 1e-8;

/// Min-max uniform quantizer metadata.
struct UqParams {
  double f_min = 0.0;
  double f_max = 1.0;
  int bit_depth = 8;

  double step() const;
  bool operator==(const UqParams&) const = default;
};

/// Robust quantizer metadata: reconstruction is the affine map a*q + b.
struct RqParams {
  double a = 1.0;
  double b = 0.0;
  int bit_depth = 8;
  double epsilon = kDefaultEpsilon;
  bool operator==(const RqParams&) const = default;
};

struct UqResult {
  Codes codes;
  UqParams params;
};

struct RqResult {
  Codes codes;
  RqParams params;
  std::vector<double> perturbation;  // round(A(f)) - A(f), one per value
};

/// q_i = floor((f_i - f_min)(2^N - 1)/(f_max - f_min) + 1/2). Values outside
/// [f_min, f_max] are rejected rather than clipped.
UqResult uq_quantize(std::span<const double> channel, int bit_depth, double f_min, double f_max);

/// Same, with the range taken from the channel's observed min and max.
UqResult uq_quantize(std::span<const double> channel, int bit_depth);

std::vector<double> uq_dequantize(std::span<const std::int64_t> codes, const UqParams& params);

/// Perturbation-injected affine quantization followed by the closed-form
/// ridge fit of the reconstruction map a*q + b.
RqResult rq_fit_and_quantize(std::span<const double> channel, int bit_depth, double lambda,
                             double epsilon = kDefaultEpsilon);

std::vector<double> rq_dequantize(std::span<const std::int64_t> codes, const RqParams& params);

/// (1/2M) * ||a*q + b - f||^2 + (lambda/2) * a^2
double rq_objective(std::span<const std::int64_t> codes, std::span<const double> channel,
                    double a, double b, double lambda);

}  // namespace hgs::quant
