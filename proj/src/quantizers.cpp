#include "hgs/quantizers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hgs/errors.hpp"

namespace hgs::quant {
namespace {

void check_bit_depth(int bit_depth) {
  if (bit_depth < 1 || bit_depth > 32) {
    throw RangeError("bit depth " + std::to_string(bit_depth) + " outside [1, 32]");
  }
}

double levels(int bit_depth) { return std::ldexp(1.0, bit_depth) - 1.0; }

}  // namespace

double UqParams::step() const { return (f_max - f_min) / levels(bit_depth); }

UqResult uq_quantize(std::span<const double> channel, int bit_depth, double f_min, double f_max) {
  check_bit_depth(bit_depth);
  if (!(f_max > f_min)) {
    if (f_max == f_min) throw DegenerateRangeError("f_max equals f_min");
    throw DegenerateRangeError("f_max is below f_min");
  }
  const double scale = levels(bit_depth) / (f_max - f_min);
  UqResult out;
  out.params = {f_min, f_max, bit_depth};
  out.codes.resize(channel.size());
  for (std::size_t i = 0; i < channel.size(); ++i) {
    const double f = channel[i];
    if (!(f >= f_min && f <= f_max)) {
      throw RangeError("value " + std::to_string(f) + " at index " + std::to_string(i) +
                       " outside [" + std::to_string(f_min) + ", " + std::to_string(f_max) + "]");
    }
    out.codes[i] = static_cast<std::int64_t>(std::floor((f - f_min) * scale + 0.5));
  }
  return out;
}

UqResult uq_quantize(std::span<const double> channel, int bit_depth) {
  if (channel.empty()) throw DegenerateRangeError("empty channel");
  const auto [lo, hi] = std::minmax_element(channel.begin(), channel.end());
  return uq_quantize(channel, bit_depth, *lo, *hi);
}

std::vector<double> uq_dequantize(std::span<const std::int64_t> codes, const UqParams& params) {
  check_bit_depth(params.bit_depth);
  const auto max_code = static_cast<std::int64_t>(levels(params.bit_depth));
  const double step = params.step();
  std::vector<double> out(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] < 0 || codes[i] > max_code) {
      throw CodeError("code " + std::to_string(codes[i]) + " at index " + std::to_string(i) +
                      " outside [0, " + std::to_string(max_code) + "]");
    }
    out[i] = static_cast<double>(codes[i]) * step + params.f_min;
  }
  return out;
}

RqResult rq_fit_and_quantize(std::span<const double> channel, int bit_depth, double lambda,
                             double epsilon) {
  check_bit_depth(bit_depth);
  if (channel.size() < 2) throw DegenerateRangeError("robust quantizer needs at least 2 values");
  if (lambda < 0.0) throw RangeError("lambda must be non-negative");
  if (!(epsilon > 0.0)) throw RangeError("epsilon must be positive");
  const auto [lo, hi] = std::minmax_element(channel.begin(), channel.end());
  const double f_min = *lo;
  const double f_max = *hi;
  if (f_max == f_min) throw DegenerateRangeError("constant channel");

  const std::size_t m = channel.size();
  const double scale = levels(bit_depth) / (f_max - f_min + epsilon);
  RqResult out;
  out.codes.resize(m);
  out.perturbation.resize(m);
  double f_mean = 0.0, q_mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double affine = (channel[i] - f_min) * scale;
    const double rounded = std::round(affine);
    out.perturbation[i] = rounded - affine;
    out.codes[i] = static_cast<std::int64_t>(rounded);
    f_mean += channel[i];
    q_mean += rounded;
  }
  f_mean /= static_cast<double>(m);
  q_mean /= static_cast<double>(m);

  // Population moments, matching the 1/M factor of the ridge objective.
  double cov = 0.0, var = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dq = static_cast<double>(out.codes[i]) - q_mean;
    cov += (channel[i] - f_mean) * dq;
    var += dq * dq;
  }
  cov /= static_cast<double>(m);
  var /= static_cast<double>(m);
  if (var + lambda == 0.0) throw SingularFitError("Var(q) + lambda is zero");

  const double a = cov / (var + lambda);
  out.params = {a, f_mean - a * q_mean, bit_depth, epsilon};
  return out;
}

std::vector<double> rq_dequantize(std::span<const std::int64_t> codes, const RqParams& params) {
  std::vector<double> out(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    out[i] = params.a * static_cast<double>(codes[i]) + params.b;
  }
  return out;
}

double rq_objective(std::span<const std::int64_t> codes, std::span<const double> channel,
                    double a, double b, double lambda) {
  double sse = 0.0;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const double r = a * static_cast<double>(codes[i]) + b - channel[i];
    sse += r * r;
  }
  return sse / (2.0 * static_cast<double>(codes.size())) + 0.5 * lambda * a * a;
}

}  // namespace hgs::quant
