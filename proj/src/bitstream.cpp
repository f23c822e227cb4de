#include "hgs/bitstream.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <sstream>

#include "hgs/byte_io.hpp"

namespace hgs::bitstream {
namespace {

constexpr int kColorOutputs = kColorChannels;
constexpr int kRotationOutputs = kRotationChannels;

// magic, version, total length
constexpr std::size_t kPreambleBytes = 4 + 1 + 8;

enum Flags : std::uint8_t { kRqWidened = 1 };

void require(bool ok, const std::string& field) {
  if (!ok) throw ConsistencyError("inconsistent field: " + field);
}

void corrupt_unless(bool ok, const std::string& what) {
  if (!ok) throw CorruptStreamError(what);
}

IVec3 shifted(const IVec3& p, int bit_depth) {
  const std::int32_t offset = static_cast<std::int32_t>((std::int64_t{1} << (bit_depth - 1)) - 1);
  return {p[0] + offset, p[1] + offset, p[2] + offset};
}

codec::RahtPlan make_plan(std::span<const IVec3> positions, int bit_depth) {
  std::vector<std::uint64_t> codes(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    codes[i] = codec::morton_code(shifted(positions[i], bit_depth), bit_depth);
  }
  return codec::RahtPlan(std::move(codes), bit_depth);
}

void write_model(ByteWriter& w, const latent::LatentModel& m) {
  w.put(static_cast<std::uint8_t>(m.activation));
  w.put(static_cast<std::uint32_t>(m.latent_dim()));
  w.put(static_cast<std::uint32_t>(m.hidden()));
  w.put(static_cast<std::uint32_t>(m.output_dim()));
  for (Eigen::Index r = 0; r < m.w1.rows(); ++r)
    for (Eigen::Index c = 0; c < m.w1.cols(); ++c) w.put(static_cast<float>(m.w1(r, c)));
  for (Eigen::Index i = 0; i < m.b1.size(); ++i) w.put(static_cast<float>(m.b1(i)));
  for (Eigen::Index r = 0; r < m.w2.rows(); ++r)
    for (Eigen::Index c = 0; c < m.w2.cols(); ++c) w.put(static_cast<float>(m.w2(r, c)));
  for (Eigen::Index i = 0; i < m.b2.size(); ++i) w.put(static_cast<float>(m.b2(i)));
}

latent::LatentModel read_model(std::span<const std::uint8_t> bytes, int latent_dim, int outputs,
                               const char* name) {
  ByteReader r(bytes);
  latent::LatentModel m;
  const auto act = r.get<std::uint8_t>("decoder activation");
  corrupt_unless(act <= 1, std::string(name) + " decoder has an unknown activation");
  m.activation = static_cast<latent::Activation>(act);
  const auto k = r.get<std::uint32_t>("decoder latent size");
  const auto hidden = r.get<std::uint32_t>("decoder hidden size");
  const auto d = r.get<std::uint32_t>("decoder output size");
  corrupt_unless(static_cast<int>(k) == latent_dim, std::string(name) + " decoder latent size mismatch");
  corrupt_unless(static_cast<int>(d) == outputs, std::string(name) + " decoder output size mismatch");
  const std::uint64_t floats = std::uint64_t{k} * hidden + hidden + std::uint64_t{hidden} * d + d;
  corrupt_unless(floats * 4 == r.remaining(), std::string(name) + " decoder block has the wrong length");
  m.w1.resize(k, hidden);
  m.b1.resize(hidden);
  m.w2.resize(hidden, d);
  m.b2.resize(d);
  for (Eigen::Index rr = 0; rr < m.w1.rows(); ++rr)
    for (Eigen::Index c = 0; c < m.w1.cols(); ++c) m.w1(rr, c) = r.get<float>("w1");
  for (Eigen::Index i = 0; i < m.b1.size(); ++i) m.b1(i) = r.get<float>("b1");
  for (Eigen::Index rr = 0; rr < m.w2.rows(); ++rr)
    for (Eigen::Index c = 0; c < m.w2.cols(); ++c) m.w2(rr, c) = r.get<float>("w2");
  for (Eigen::Index i = 0; i < m.b2.size(); ++i) m.b2(i) = r.get<float>("b2");
  return m;
}

void write_header(ByteWriter& w, const Header& h) {
  w.put(h.n);
  for (int v : {h.bd_p, h.bd_c, h.bd_o, h.bd_s, h.bd_r, h.k_c, h.k_r}) {
    w.put(static_cast<std::uint8_t>(v));
  }
  w.put(static_cast<std::uint8_t>(h.quantizer));
  w.put(static_cast<std::uint8_t>(h.rq_widened ? kRqWidened : 0));
  w.put(static_cast<std::uint8_t>(h.attribute_mode));
  w.put(h.raht_step);
  for (double c : h.transform.center) w.put(c);
  w.put(h.transform.scale);
  w.put(static_cast<std::uint8_t>(h.transform.bit_depth));
}

Header read_header(ByteReader& r) {
  Header h;
  h.n = r.get<std::uint64_t>("primitive count");
  int* fields[] = {&h.bd_p, &h.bd_c, &h.bd_o, &h.bd_s, &h.bd_r, &h.k_c, &h.k_r};
  for (int* f : fields) *f = r.get<std::uint8_t>("header field");
  const auto quant = r.get<std::uint8_t>("quantizer kind");
  corrupt_unless(quant <= 1, "unknown quantizer kind");
  h.quantizer = static_cast<QuantizerKind>(quant);
  const auto flags = r.get<std::uint8_t>("flags");
  corrupt_unless((flags & ~kRqWidened) == 0, "unknown header flags");
  h.rq_widened = (flags & kRqWidened) != 0;
  const auto mode = r.get<std::uint8_t>("attribute mode");
  corrupt_unless(mode <= 1, "unknown attribute mode");
  h.attribute_mode = static_cast<codec::AttributeMode>(mode);
  h.raht_step = r.get<double>("RAHT step");
  for (double& c : h.transform.center) c = r.get<double>("transform center");
  h.transform.scale = r.get<double>("transform scale");
  h.transform.bit_depth = r.get<std::uint8_t>("transform bit depth");

  corrupt_unless(h.bd_p >= 2 && h.bd_p <= codec::kMaxOctreeDepth, "position bit depth out of range");
  for (int bd : {h.bd_c, h.bd_o, h.bd_s, h.bd_r}) {
    corrupt_unless(bd >= 1 && bd <= 32, "attribute bit depth out of range");
  }
  corrupt_unless(h.k_c >= 1 && h.k_c <= kColorOutputs, "color latent count out of range");
  corrupt_unless(h.k_r >= 1 && h.k_r <= kRotationOutputs, "rotation latent count out of range");
  corrupt_unless(h.transform.bit_depth == h.bd_p, "transform bit depth differs from position bit depth");
  corrupt_unless(std::isfinite(h.raht_step) && h.raht_step > 0, "RAHT step is not positive");
  corrupt_unless(std::isfinite(h.transform.scale) && h.transform.scale > 0,
                 "transform scale is not positive");
  return h;
}

void check_consistency(const HgsBitstream& s) {
  const Header& h = s.header;
  require(h.bd_p >= 2 && h.bd_p <= codec::kMaxOctreeDepth, "bd_p");
  for (auto [bd, name] : {std::pair{h.bd_c, "bd_c"}, {h.bd_o, "bd_o"}, {h.bd_s, "bd_s"}, {h.bd_r, "bd_r"}}) {
    require(bd >= 1 && bd <= 32, name);
  }
  require(h.k_c >= 1 && h.k_c <= kColorOutputs, "k_c");
  require(h.k_r >= 1 && h.k_r <= kRotationOutputs, "k_r");
  require(h.transform.bit_depth == h.bd_p, "transform.bit_depth");
  require(h.raht_step > 0 && std::isfinite(h.raht_step), "raht_step");
  require(s.cloud.positions.size() == h.n, "cloud.positions (n)");
  require(s.cloud.channels.size() == static_cast<std::size_t>(h.channel_count()), "cloud.channels");
  require(s.params.size() == static_cast<std::size_t>(h.channel_count()), "params");
  for (std::size_t c = 0; c < s.cloud.channels.size(); ++c) {
    require(s.cloud.channels[c].size() == h.n, "cloud.channels[" + std::to_string(c) + "] (n)");
  }
  for (std::size_t c = 0; c < s.params.size(); ++c) {
    require(s.params[c].kind == h.quantizer, "params[" + std::to_string(c) + "].kind");
  }
  require(s.color_model.latent_dim() == h.k_c && s.color_model.output_dim() == kColorOutputs,
          "color_model shape");
  require(s.rotation_model.latent_dim() == h.k_r && s.rotation_model.output_dim() == kRotationOutputs,
          "rotation_model shape");
  require(s.color_model.b1.size() == s.color_model.hidden() &&
              s.color_model.w2.rows() == s.color_model.hidden() &&
              s.color_model.b2.size() == kColorOutputs,
          "color_model shape");
  require(s.rotation_model.b1.size() == s.rotation_model.hidden() &&
              s.rotation_model.w2.rows() == s.rotation_model.hidden() &&
              s.rotation_model.b2.size() == kRotationOutputs,
          "rotation_model shape");
  const std::int64_t bound = (std::int64_t{1} << (h.bd_p - 1)) - 1;
  std::uint64_t previous = 0;
  for (std::size_t i = 0; i < s.cloud.positions.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      const auto v = s.cloud.positions[i][a];
      require(v >= -bound && v <= bound, "cloud.positions[" + std::to_string(i) + "] range");
    }
    const auto code = codec::morton_code(shifted(s.cloud.positions[i], h.bd_p), h.bd_p);
    require(i == 0 || code > previous, "cloud.positions Morton order");
    previous = code;
  }
}

struct Layout {
  Header header;
  std::size_t header_bytes = 0;
  std::span<const std::uint8_t> metadata;
  std::span<const std::uint8_t> color_model;
  std::span<const std::uint8_t> rotation_model;
  std::span<const std::uint8_t> geometry;
  std::vector<std::span<const std::uint8_t>> attributes;
};

Layout parse_layout(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.get_bytes(4, "magic");
  corrupt_unless(std::memcmp(magic.data(), kMagic, 4) == 0, "not an HGS1 stream");
  const auto version = r.get<std::uint8_t>("version");
  corrupt_unless(version == kVersion, "unsupported stream version " + std::to_string(version));
  const auto total = r.get<std::uint64_t>("total length");
  corrupt_unless(total == bytes.size(), "stream length " + std::to_string(bytes.size()) +
                                            " differs from declared " + std::to_string(total));
  Layout out;
  out.header = read_header(r);
  out.header_bytes = r.position() - kPreambleBytes;
  out.metadata = r.get_block("metadata");
  out.color_model = r.get_block("color decoder");
  out.rotation_model = r.get_block("rotation decoder");
  out.geometry = r.get_block("geometry");
  const auto count = r.get<std::uint32_t>("substream count");
  corrupt_unless(count == static_cast<std::uint32_t>(out.header.channel_count()),
                 "substream count " + std::to_string(count) + " differs from 3 + k_c + 1 + k_r");
  for (std::uint32_t c = 0; c < count; ++c) out.attributes.push_back(r.get_block("attribute substream"));
  corrupt_unless(r.remaining() == 0, "trailing bytes after the last substream");
  return out;
}

}  // namespace

int Header::channel_bit_depth(int channel) const {
  if (channel < k_c) return bd_c;
  if (channel == k_c) return bd_o;
  if (channel < k_c + 4) return bd_s;
  return bd_r;
}

std::vector<std::uint8_t> serialize(const HgsBitstream& s) {
  check_consistency(s);
  const Header& h = s.header;

  ByteWriter w;
  w.put_bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(kMagic), 4));
  w.put(kVersion);
  w.put(std::uint64_t{0});  // patched once the length is known
  write_header(w, h);

  ByteWriter meta;
  for (const auto& p : s.params) {
    meta.put(static_cast<std::uint8_t>(p.kind));
    meta.put(p.first);
    meta.put(p.second);
  }
  w.put_block(meta.bytes());

  ByteWriter color, rotation;
  write_model(color, s.color_model);
  write_model(rotation, s.rotation_model);
  w.put_block(color.bytes());
  w.put_block(rotation.bytes());

  w.put_block(codec::encode_geometry(s.cloud.positions, h.bd_p));

  const codec::RahtPlan plan = make_plan(s.cloud.positions, h.bd_p);
  w.put(static_cast<std::uint32_t>(s.cloud.channels.size()));
  for (const auto& channel : s.cloud.channels) {
    w.put_block(codec::encode_attribute(channel, plan, h.attribute_mode, h.raht_step));
  }

  auto& bytes = w.bytes();
  const std::uint64_t total = bytes.size();
  for (int i = 0; i < 8; ++i) bytes[5 + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(total >> (8 * i));
  return w.take();
}

HgsBitstream deserialize(std::span<const std::uint8_t> bytes) {
  const Layout layout = parse_layout(bytes);
  HgsBitstream s;
  s.header = layout.header;
  const Header& h = s.header;

  ByteReader meta(layout.metadata);
  for (int c = 0; c < h.channel_count(); ++c) {
    ChannelParams p;
    const auto kind = meta.get<std::uint8_t>("channel quantizer");
    corrupt_unless(kind == static_cast<std::uint8_t>(h.quantizer), "channel quantizer differs from header");
    p.kind = static_cast<QuantizerKind>(kind);
    p.first = meta.get<double>("channel parameter");
    p.second = meta.get<double>("channel parameter");
    s.params.push_back(p);
  }
  corrupt_unless(meta.remaining() == 0, "trailing bytes in metadata block");

  s.color_model = read_model(layout.color_model, h.k_c, kColorOutputs, "color");
  s.rotation_model = read_model(layout.rotation_model, h.k_r, kRotationOutputs, "rotation");

  const auto positions = codec::decode_geometry(layout.geometry);
  corrupt_unless(positions.size() == h.n, "geometry point count differs from header");
  s.cloud.positions = positions;
  const std::int32_t offset = static_cast<std::int32_t>((std::int64_t{1} << (h.bd_p - 1)) - 1);
  for (const auto& p : positions) {
    for (int a = 0; a < 3; ++a) {
      // The decoded cube is [0, 2^N - 1]; the signed lattice stops one short.
      corrupt_unless(p[a] + offset < (std::int64_t{1} << h.bd_p) - 1, "position outside the lattice");
    }
  }

  const codec::RahtPlan plan = make_plan(s.cloud.positions, h.bd_p);
  for (const auto& block : layout.attributes) {
    s.cloud.channels.push_back(codec::decode_attribute(block, plan, h.attribute_mode, h.raht_step));
  }
  return s;
}

AllocationReport inspect(std::span<const std::uint8_t> bytes) {
  const Layout layout = parse_layout(bytes);
  const Header& h = layout.header;
  const double n = static_cast<double>(h.n);

  AllocationReport report;
  report.n = h.n;
  report.bits_per_primitive = 3 * (h.bd_p + h.bd_s) + h.k_c * h.bd_c + h.bd_o + h.k_r * h.bd_r;
  report.total_bytes = bytes.size();

  auto span_bytes = [](std::size_t first, std::size_t last, const Layout& l) {
    std::uint64_t sum = 0;
    for (std::size_t c = first; c < last; ++c) sum += 4 + l.attributes[c].size();
    return sum;
  };
  const auto kc = static_cast<std::size_t>(h.k_c);
  const auto channels = layout.attributes.size();
  report.components = {
      {"position", 4 + layout.geometry.size(), n * 3 * h.bd_p / 8.0},
      {"color", span_bytes(0, kc, layout), n * h.k_c * h.bd_c / 8.0},
      {"opacity", span_bytes(kc, kc + 1, layout), n * h.bd_o / 8.0},
      {"scale", span_bytes(kc + 1, kc + 4, layout), n * 3 * h.bd_s / 8.0},
      {"rotation", span_bytes(kc + 4, channels, layout), n * h.k_r * h.bd_r / 8.0},
      {"metadata", kPreambleBytes + layout.header_bytes + 4 + layout.metadata.size() + 4, 0.0},
      {"color_decoder", 4 + layout.color_model.size(), 0.0},
      {"rotation_decoder", 4 + layout.rotation_model.size(), 0.0},
  };
  return report;
}

std::string AllocationReport::text() const {
  std::ostringstream os;
  os << "primitives: " << n << "\n";
  os << "bits per primitive: " << bits_per_primitive << "\n";
  os << "total: " << total_bytes << " B (" << std::fixed << std::setprecision(2)
     << total_bytes / kMiB << " MiB)\n";
  os << std::left << std::setw(18) << "component" << std::right << std::setw(14) << "coded B"
     << std::setw(12) << "coded MiB" << std::setw(16) << "pre-codec B" << std::setw(14)
     << "pre-codec MiB" << "\n";
  for (const auto& c : components) {
    os << std::left << std::setw(18) << c.name << std::right << std::setw(14) << c.coded_bytes
       << std::setw(12) << std::setprecision(4) << c.coded_bytes / kMiB;
    if (c.precodec_bytes > 0) {
      os << std::setw(16) << std::setprecision(1) << c.precodec_bytes << std::setw(14)
         << std::setprecision(2) << c.precodec_bytes / kMiB;
    } else {
      os << std::setw(16) << "-" << std::setw(14) << "-";
    }
    os << "\n";
  }
  return os.str();
}

std::string AllocationReport::key_values() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "n=" << n << "\n";
  os << "bits_per_primitive=" << bits_per_primitive << "\n";
  os << "total_bytes=" << total_bytes << "\n";
  for (const auto& c : components) {
    os << c.name << ".coded_bytes=" << c.coded_bytes << "\n";
    if (c.precodec_bytes > 0) {
      os << c.name << ".precodec_bytes=" << c.precodec_bytes << "\n";
      os << c.name << ".precodec_mib=" << c.precodec_bytes / kMiB << "\n";
    }
  }
  return os.str();
}

}  // namespace hgs::bitstream
