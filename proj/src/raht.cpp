#include <algorithm>
#include <cmath>
#include <string>

#include "hgs/byte_io.hpp"
#include "hgs/codec.hpp"

namespace hgs::codec {

RahtPlan::RahtPlan(std::span<const IVec3> positions, int bit_depth) {
  if (bit_depth < 1 || bit_depth > kMaxOctreeDepth) {
    throw RangeError("RAHT depth " + std::to_string(bit_depth) + " outside [1, " +
                     std::to_string(kMaxOctreeDepth) + "]");
  }
  codes_.resize(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) codes_[i] = morton_code(positions[i], bit_depth);
  std::sort(codes_.begin(), codes_.end());
  if (std::adjacent_find(codes_.begin(), codes_.end()) != codes_.end()) {
    throw DuplicateError("RAHT geometry contains duplicate positions");
  }
  build(bit_depth);
}

RahtPlan::RahtPlan(std::vector<std::uint64_t> sorted_codes, int bit_depth)
    : codes_(std::move(sorted_codes)) {
  if (bit_depth < 1 || bit_depth > kMaxOctreeDepth) throw RangeError("RAHT depth out of range");
  for (std::size_t i = 1; i < codes_.size(); ++i) {
    if (codes_[i - 1] >= codes_[i]) throw DuplicateError("RAHT codes must be strictly increasing");
  }
  build(bit_depth);
}

void RahtPlan::build(int bit_depth) {
  count_ = codes_.size();
  std::vector<std::uint64_t> codes = codes_;
  std::vector<std::int64_t> weights(count_, 1);
  // One binary merge per Morton bit: z, then y, then x, level by level upward.
  for (int s = 0; s < 3 * bit_depth; ++s) {
    Step step;
    step.input_size = codes.size();
    std::vector<std::uint64_t> next_codes;
    std::vector<std::int64_t> next_weights;
    next_codes.reserve(codes.size());
    next_weights.reserve(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
      if (i + 1 < codes.size() && (codes[i] >> 1) == (codes[i + 1] >> 1)) {
        const std::int64_t w = weights[i] + weights[i + 1];
        const double total = static_cast<double>(w);
        step.merges.push_back({static_cast<std::uint32_t>(i),
                               std::sqrt(static_cast<double>(weights[i]) / total),
                               std::sqrt(static_cast<double>(weights[i + 1]) / total), w});
        next_codes.push_back(codes[i] >> 1);
        next_weights.push_back(w);
        ++i;
      } else {
        next_codes.push_back(codes[i] >> 1);
        next_weights.push_back(weights[i]);
      }
    }
    codes = std::move(next_codes);
    weights = std::move(next_weights);
    steps_.push_back(std::move(step));
  }
  // Coarse steps come first in the output, right after the DC.
  std::size_t offset = 1;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
    it->ac_offset = offset;
    offset += it->merges.size();
  }
}

RahtCoefficients raht_forward(std::span<const double> attributes, const RahtPlan& plan) {
  if (attributes.size() != plan.count_) {
    throw ShapeError(std::to_string(attributes.size()) + " attributes for " +
                     std::to_string(plan.count_) + " voxels");
  }
  RahtCoefficients out;
  out.coefficients.assign(plan.count_, 0.0);
  out.weights.assign(plan.count_, 0);
  if (plan.count_ == 0) return out;

  std::vector<double> values(attributes.begin(), attributes.end());
  std::vector<double> next;
  for (const auto& step : plan.steps_) {
    if (step.merges.empty()) continue;
    next.resize(step.input_size - step.merges.size());
    std::size_t k = 0, o = 0;
    for (std::size_t i = 0; i < step.input_size; ++i) {
      if (k < step.merges.size() && step.merges[k].first == i) {
        const auto& m = step.merges[k];
        const double a1 = values[i], a2 = values[i + 1];
        next[o++] = m.alpha * a1 + m.beta * a2;
        out.coefficients[step.ac_offset + k] = -m.beta * a1 + m.alpha * a2;
        out.weights[step.ac_offset + k] = m.weight;
        ++k;
        ++i;
      } else {
        next[o++] = values[i];
      }
    }
    values.swap(next);
  }
  out.coefficients[0] = values[0];
  out.weights[0] = static_cast<std::int64_t>(plan.count_);
  return out;
}

RahtCoefficients raht_forward(std::span<const double> attributes, std::span<const IVec3> positions,
                              int bit_depth) {
  if (attributes.size() != positions.size()) {
    throw ShapeError(std::to_string(attributes.size()) + " attributes for " +
                     std::to_string(positions.size()) + " positions");
  }
  return raht_forward(attributes, RahtPlan(positions, bit_depth));
}

std::vector<double> raht_inverse(std::span<const double> coefficients, const RahtPlan& plan) {
  if (coefficients.size() != plan.count_) {
    throw ShapeError(std::to_string(coefficients.size()) + " coefficients for " +
                     std::to_string(plan.count_) + " voxels");
  }
  if (plan.count_ == 0) return {};
  std::vector<double> values{coefficients[0]};
  std::vector<double> prev;
  for (auto it = plan.steps_.rbegin(); it != plan.steps_.rend(); ++it) {
    const auto& step = *it;
    if (step.merges.empty()) continue;
    prev.resize(step.input_size);
    std::size_t k = 0, p = 0;
    for (std::size_t i = 0; i < step.input_size; ++i) {
      if (k < step.merges.size() && step.merges[k].first == i) {
        const auto& m = step.merges[k];
        const double dc = values[p++];
        const double ac = coefficients[step.ac_offset + k];
        prev[i] = m.alpha * dc - m.beta * ac;
        prev[i + 1] = m.beta * dc + m.alpha * ac;
        ++k;
        ++i;
      } else {
        prev[i] = values[p++];
      }
    }
    values.swap(prev);
  }
  return values;
}

std::vector<std::int64_t> quantize_coeffs(std::span<const double> coefficients, double qs) {
  if (!(qs > 0.0)) throw RangeError("quantization step must be positive");
  std::vector<std::int64_t> out(coefficients.size());
  for (std::size_t i = 0; i < coefficients.size(); ++i) {
    out[i] = static_cast<std::int64_t>(std::llround(coefficients[i] / qs));
  }
  return out;
}

std::vector<double> dequantize_coeffs(std::span<const std::int64_t> levels, double qs) {
  std::vector<double> out(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) out[i] = static_cast<double>(levels[i]) * qs;
  return out;
}

namespace {

std::vector<std::int64_t> reconstruct(std::span<const std::int64_t> levels, const RahtPlan& plan,
                                      double qs) {
  const std::vector<double> values = raht_inverse(dequantize_coeffs(levels, qs), plan);
  std::vector<std::int64_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = static_cast<std::int64_t>(std::llround(values[i]));
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_attribute(std::span<const std::int64_t> codes,
                                           const RahtPlan& plan, AttributeMode mode, double qs) {
  if (codes.size() != plan.size()) {
    throw ShapeError(std::to_string(codes.size()) + " codes for " + std::to_string(plan.size()) +
                     " voxels");
  }
  if (mode == AttributeMode::kBypass) return entropy_encode(codes, SymbolKind::kCoefficient);

  std::vector<double> signal(codes.begin(), codes.end());
  const auto levels = quantize_coeffs(raht_forward(signal, plan).coefficients, qs);
  ByteWriter w;
  w.put_block(entropy_encode(levels, SymbolKind::kCoefficient));
  if (qs == 1.0) {
    const auto approx = reconstruct(levels, plan, qs);
    std::vector<std::int64_t> residual(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) residual[i] = codes[i] - approx[i];
    w.put_block(entropy_encode(residual, SymbolKind::kCoefficient));
  }
  return w.take();
}

std::vector<std::int64_t> decode_attribute(std::span<const std::uint8_t> bytes,
                                           const RahtPlan& plan, AttributeMode mode, double qs) {
  if (mode == AttributeMode::kBypass) {
    auto codes = entropy_decode(bytes, SymbolKind::kCoefficient);
    if (codes.size() != plan.size()) throw CorruptStreamError("attribute count mismatch");
    return codes;
  }
  ByteReader r(bytes);
  const auto levels = entropy_decode(r.get_block("RAHT coefficients"), SymbolKind::kCoefficient);
  if (levels.size() != plan.size()) throw CorruptStreamError("coefficient count mismatch");
  auto codes = reconstruct(levels, plan, qs);
  if (qs == 1.0) {
    const auto residual = entropy_decode(r.get_block("RAHT residual"), SymbolKind::kCoefficient);
    if (residual.size() != codes.size()) throw CorruptStreamError("residual count mismatch");
    for (std::size_t i = 0; i < codes.size(); ++i) codes[i] += residual[i];
  }
  if (r.remaining() != 0) throw CorruptStreamError("trailing bytes in attribute substream");
  return codes;
}

}  // namespace hgs::codec
