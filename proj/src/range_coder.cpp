#include <algorithm>
#include <bit>
#include <string>

#include "hgs/byte_io.hpp"
#include "hgs/codec.hpp"

namespace hgs::codec {
namespace {

constexpr std::uint32_t kTop = 1u << 24;
constexpr int kExpContexts = 64;
constexpr std::int64_t kCoeffLimit = std::int64_t{1} << 62;

enum class StreamMode : std::uint8_t { kCoded = 0, kStored = 1 };

std::uint64_t zigzag(std::int64_t v) {
  return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}

std::int64_t unzigzag(std::uint64_t u) {
  return static_cast<std::int64_t>(u >> 1) ^ -static_cast<std::int64_t>(u & 1);
}

struct CoefficientContexts {
  BitModel exponent[kExpContexts];
  BitModel sign;
};

// Exp-Golomb style: unary bit length with one adaptive context per position,
// an adaptive sign, and the bits below the leading one sent raw.
void encode_coefficient(RangeEncoder& enc, CoefficientContexts& ctx, std::int64_t v) {
  const std::uint64_t mag = static_cast<std::uint64_t>(v < 0 ? -v : v);
  const int length = static_cast<int>(std::bit_width(mag));
  for (int i = 0; i < length; ++i) enc.encode(ctx.exponent[i], 1);
  if (length < kExpContexts) enc.encode(ctx.exponent[length], 0);
  if (length == 0) return;
  enc.encode(ctx.sign, v < 0 ? 1 : 0);
  if (length > 1) enc.encode_direct(mag & ((std::uint64_t{1} << (length - 1)) - 1), length - 1);
}

std::int64_t decode_coefficient(RangeDecoder& dec, CoefficientContexts& ctx) {
  int length = 0;
  while (length < kExpContexts && dec.decode(ctx.exponent[length]) == 1) ++length;
  if (length == 0) return 0;
  if (length > 62) throw CorruptStreamError("coefficient magnitude overflows");
  const bool negative = dec.decode(ctx.sign) == 1;
  std::uint64_t mag = std::uint64_t{1} << (length - 1);
  if (length > 1) mag |= dec.decode_direct(length - 1);
  const auto v = static_cast<std::int64_t>(mag);
  return negative ? -v : v;
}

std::vector<std::uint8_t> stored_payload(std::span<const std::int64_t> symbols, SymbolKind kind) {
  ByteWriter w;
  if (kind == SymbolKind::kOccupancy) {
    for (std::int64_t s : symbols) w.put(static_cast<std::uint8_t>(s));
    return w.take();
  }
  std::uint64_t widest = 0;
  for (std::int64_t s : symbols) widest = std::max(widest, zigzag(s));
  const int width = static_cast<int>(std::bit_width(widest));
  w.put(static_cast<std::uint8_t>(width));
  std::uint64_t acc = 0;
  int filled = 0;
  for (std::int64_t s : symbols) {
    const std::uint64_t u = zigzag(s);
    for (int b = 0; b < width; ++b) {
      acc |= ((u >> b) & 1u) << filled;
      if (++filled == 8) {
        w.put(static_cast<std::uint8_t>(acc));
        acc = 0;
        filled = 0;
      }
    }
  }
  if (filled > 0) w.put(static_cast<std::uint8_t>(acc));
  return w.take();
}

}  // namespace

void RangeEncoder::encode(BitModel& model, int bit) {
  const std::uint32_t bound = (range_ >> BitModel::kBits) * model.p0;
  if (bit == 0) {
    range_ = bound;
    model.p0 += (BitModel::kOne - model.p0) >> BitModel::kShift;
  } else {
    low_ += bound;
    range_ -= bound;
    model.p0 -= model.p0 >> BitModel::kShift;
  }
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::encode_direct(std::uint64_t value, int count) {
  for (int i = count - 1; i >= 0; --i) {
    range_ >>= 1;
    if ((value >> i) & 1u) low_ += range_;
    while (range_ < kTop) {
      range_ <<= 8;
      shift_low();
    }
  }
}

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t pending = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(pending + carry));
      pending = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
  for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ >= bytes_.size()) throw CorruptStreamError("range coder ran past the end of its payload");
  return bytes_[pos_++];
}

void RangeDecoder::normalize() {
  while (range_ < kTop) {
    range_ <<= 8;
    code_ = (code_ << 8) | next_byte();
  }
}

int RangeDecoder::decode(BitModel& model) {
  const std::uint32_t bound = (range_ >> BitModel::kBits) * model.p0;
  int bit;
  if (code_ < bound) {
    range_ = bound;
    model.p0 += (BitModel::kOne - model.p0) >> BitModel::kShift;
    bit = 0;
  } else {
    code_ -= bound;
    range_ -= bound;
    model.p0 -= model.p0 >> BitModel::kShift;
    bit = 1;
  }
  normalize();
  return bit;
}

std::uint64_t RangeDecoder::decode_direct(int count) {
  std::uint64_t value = 0;
  for (int i = 0; i < count; ++i) {
    range_ >>= 1;
    int bit = 0;
    if (code_ >= range_) {
      code_ -= range_;
      bit = 1;
    }
    value = (value << 1) | static_cast<std::uint64_t>(bit);
    normalize();
  }
  return value;
}

std::vector<std::uint8_t> entropy_encode(std::span<const std::int64_t> symbols, SymbolKind kind) {
  if (symbols.size() > 0xFFFFFFFFu) throw RangeError("too many symbols for one entropy stream");
  RangeEncoder enc;
  if (kind == SymbolKind::kOccupancy) {
    BitModel ctx[8];
    for (std::int64_t s : symbols) {
      if (s < 1 || s > 255) throw RangeError("occupancy symbol " + std::to_string(s) + " outside [1, 255]");
      for (int b = 0; b < 8; ++b) enc.encode(ctx[b], static_cast<int>((s >> b) & 1));
    }
  } else {
    CoefficientContexts ctx;
    for (std::int64_t s : symbols) {
      if (s <= -kCoeffLimit || s >= kCoeffLimit) {
        throw RangeError("coefficient " + std::to_string(s) + " exceeds 62 bits");
      }
      encode_coefficient(enc, ctx, s);
    }
  }
  std::vector<std::uint8_t> coded = symbols.empty() ? std::vector<std::uint8_t>{} : enc.finish();
  std::vector<std::uint8_t> stored = stored_payload(symbols, kind);

  ByteWriter w;
  const bool use_stored = stored.size() < coded.size();
  w.put(static_cast<std::uint8_t>(use_stored ? StreamMode::kStored : StreamMode::kCoded));
  w.put(static_cast<std::uint32_t>(symbols.size()));
  w.put_bytes(use_stored ? stored : coded);
  return w.take();
}

std::vector<std::int64_t> entropy_decode(std::span<const std::uint8_t> bytes, SymbolKind kind) {
  ByteReader r(bytes);
  const auto mode = static_cast<StreamMode>(r.get<std::uint8_t>("entropy stream mode"));
  const auto count = r.get<std::uint32_t>("entropy symbol count");
  const auto payload = r.get_bytes(r.remaining(), "entropy payload");
  std::vector<std::int64_t> out;
  out.reserve(count);

  if (mode == StreamMode::kStored) {
    if (kind == SymbolKind::kOccupancy) {
      if (payload.size() != count) throw CorruptStreamError("stored occupancy length mismatch");
      for (std::uint8_t b : payload) {
        if (b == 0) throw CorruptStreamError("empty occupancy byte");
        out.push_back(b);
      }
      return out;
    }
    if (payload.empty()) throw CorruptStreamError("stored coefficient stream lacks its width byte");
    const int width = payload[0];
    if (width > 64) throw CorruptStreamError("stored coefficient width exceeds 64 bits");
    const std::uint64_t bits = static_cast<std::uint64_t>(width) * count;
    if (payload.size() - 1 != (bits + 7) / 8) throw CorruptStreamError("stored coefficient length mismatch");
    std::uint64_t cursor = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
      std::uint64_t u = 0;
      for (int b = 0; b < width; ++b, ++cursor) {
        u |= static_cast<std::uint64_t>((payload[1 + cursor / 8] >> (cursor % 8)) & 1u) << b;
      }
      out.push_back(unzigzag(u));
    }
    return out;
  }
  if (mode != StreamMode::kCoded) throw CorruptStreamError("unknown entropy stream mode");
  if (count == 0) {
    if (!payload.empty()) throw CorruptStreamError("payload present for an empty stream");
    return out;
  }

  RangeDecoder dec(payload);
  if (kind == SymbolKind::kOccupancy) {
    BitModel ctx[8];
    for (std::uint32_t i = 0; i < count; ++i) {
      std::int64_t s = 0;
      for (int b = 0; b < 8; ++b) s |= static_cast<std::int64_t>(dec.decode(ctx[b])) << b;
      if (s == 0) throw CorruptStreamError("empty occupancy byte");
      out.push_back(s);
    }
  } else {
    CoefficientContexts ctx;
    for (std::uint32_t i = 0; i < count; ++i) out.push_back(decode_coefficient(dec, ctx));
  }
  if (!dec.exhausted()) throw CorruptStreamError("trailing bytes after entropy payload");
  return out;
}

}  // namespace hgs::codec
