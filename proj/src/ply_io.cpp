#include "hgs/ply_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "hgs/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "PLY and bitstream I/O assume a little-endian host");

namespace hgs {

void GaussianCloud::resize(std::size_t n) {
  positions.resize(n * 3);
  color_dc.resize(n * 3);
  color_sh.resize(n * kShCoeffs);
  opacity.resize(n);
  scale.resize(n * 3);
  rotation.resize(n * 4);
}

void validate(const GaussianCloud& cloud) {
  const std::size_t n = cloud.opacity.size();
  if (n == 0) throw DataError("cloud has no primitives");
  auto check = [n](const std::vector<float>& v, std::size_t width, const char* name) {
    if (v.size() != n * width) {
      throw DataError(std::string("attribute '") + name + "' has " + std::to_string(v.size()) +
                      " values, expected " + std::to_string(n * width));
    }
  };
  check(cloud.positions, 3, "positions");
  check(cloud.color_dc, 3, "color_dc");
  check(cloud.color_sh, kShCoeffs, "color_sh");
  check(cloud.scale, 3, "scale");
  check(cloud.rotation, 4, "rotation");
}

GaussianCloud select(const GaussianCloud& cloud, std::span<const std::size_t> indices) {
  GaussianCloud out;
  out.resize(indices.size());
  auto copy_rows = [&](const std::vector<float>& src, std::vector<float>& dst, std::size_t w) {
    for (std::size_t r = 0; r < indices.size(); ++r) {
      std::memcpy(dst.data() + r * w, src.data() + indices[r] * w, w * sizeof(float));
    }
  };
  copy_rows(cloud.positions, out.positions, 3);
  copy_rows(cloud.color_dc, out.color_dc, 3);
  copy_rows(cloud.color_sh, out.color_sh, kShCoeffs);
  copy_rows(cloud.opacity, out.opacity, 1);
  copy_rows(cloud.scale, out.scale, 3);
  copy_rows(cloud.rotation, out.rotation, 4);
  return out;
}

namespace ply {
namespace {

struct Property {
  std::string name;
  std::size_t size = 0;
  bool is_float32 = false;
};

std::size_t type_size(const std::string& type) {
  static const std::unordered_map<std::string, std::size_t> sizes = {
      {"char", 1},   {"uchar", 1},   {"int8", 1},   {"uint8", 1},    {"short", 2},
      {"ushort", 2}, {"int16", 2},   {"uint16", 2}, {"int", 4},      {"uint", 4},
      {"int32", 4},  {"uint32", 4},  {"float", 4},  {"float32", 4},  {"double", 8},
      {"float64", 8}};
  auto it = sizes.find(type);
  return it == sizes.end() ? 0 : it->second;
}

// Canonical property order of a community 3DGS PLY.
std::vector<std::string> required_names() {
  std::vector<std::string> names = {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"};
  for (int i = 0; i < kShCoeffs; ++i) names.push_back("f_rest_" + std::to_string(i));
  names.insert(names.end(), {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1",
                             "rot_2", "rot_3"});
  return names;
}

std::vector<std::string> written_names() {
  std::vector<std::string> names = required_names();
  names.insert(names.begin() + 3, {"nx", "ny", "nz"});
  return names;
}

struct Header {
  std::size_t vertex_count = 0;
  std::vector<Property> properties;
  std::size_t body_offset = 0;
};

Header parse_header(std::span<const std::uint8_t> bytes) {
  Header header;
  std::size_t pos = 0;
  auto next_line = [&]() -> std::optional<std::string> {
    if (pos >= bytes.size()) return std::nullopt;
    std::size_t end = pos;
    while (end < bytes.size() && bytes[end] != '\n') ++end;
    if (end == bytes.size()) return std::nullopt;
    std::string line(reinterpret_cast<const char*>(bytes.data() + pos), end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    return line;
  };

  auto magic = next_line();
  if (!magic || *magic != "ply") throw ParseError("missing 'ply' magic line");

  bool have_format = false;
  bool in_vertex = false;
  bool seen_vertex = false;
  while (true) {
    auto line = next_line();
    if (!line) throw ParseError("header is not terminated by 'end_header'");
    std::istringstream in(*line);
    std::string keyword;
    in >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "end_header") break;
    if (keyword == "format") {
      std::string fmt, version;
      in >> fmt >> version;
      if (fmt != "binary_little_endian") {
        throw ParseError("unsupported format '" + fmt + "', only binary_little_endian is read");
      }
      have_format = true;
    } else if (keyword == "element") {
      std::string name;
      long long count = -1;
      in >> name >> count;
      if (in.fail() || count < 0) throw ParseError("malformed element line: " + *line);
      if (name != "vertex") throw ParseError("unexpected element '" + name + "'");
      if (seen_vertex) throw ParseError("duplicate vertex element");
      seen_vertex = true;
      in_vertex = true;
      header.vertex_count = static_cast<std::size_t>(count);
    } else if (keyword == "property") {
      if (!in_vertex) throw ParseError("property outside an element: " + *line);
      std::string type, name;
      in >> type >> name;
      if (type == "list") throw ParseError("list properties are not supported");
      const std::size_t size = type_size(type);
      if (size == 0 || name.empty()) throw ParseError("malformed property line: " + *line);
      header.properties.push_back({name, size, type == "float" || type == "float32"});
    } else {
      throw ParseError("unknown header keyword '" + keyword + "'");
    }
  }
  if (!have_format) throw ParseError("missing format line");
  if (!seen_vertex) throw ParseError("missing vertex element");
  header.body_offset = pos;
  return header;
}

}  // namespace

GaussianCloud parse_ply(std::span<const std::uint8_t> bytes) {
  const Header header = parse_header(bytes);

  std::unordered_map<std::string, std::size_t> offsets;
  std::size_t stride = 0;
  for (const Property& p : header.properties) {
    offsets[p.name] = stride;
    stride += p.size;
  }

  const std::vector<std::string> names = required_names();
  std::vector<std::size_t> column(names.size());
  for (std::size_t c = 0; c < names.size(); ++c) {
    auto it = offsets.find(names[c]);
    if (it == offsets.end()) throw SchemaError("missing required property '" + names[c] + "'");
    for (const Property& p : header.properties) {
      if (p.name == names[c] && !p.is_float32) {
        throw SchemaError("property '" + names[c] + "' must be float");
      }
    }
    column[c] = it->second;
  }

  const std::size_t n = header.vertex_count;
  if (n == 0) throw DataError("vertex count is zero");
  if (stride == 0 || (bytes.size() - header.body_offset) / stride < n) {
    throw ParseError("body holds fewer than " + std::to_string(n) + " vertices");
  }

  GaussianCloud cloud;
  cloud.resize(n);
  // Destination for each required column, in canonical order.
  std::vector<float*> dst(names.size());
  std::vector<std::size_t> width(names.size());
  {
    std::size_t c = 0;
    auto bind = [&](std::vector<float>& v, std::size_t w) {
      for (std::size_t j = 0; j < w; ++j, ++c) {
        dst[c] = v.data() + j;
        width[c] = w;
      }
    };
    bind(cloud.positions, 3);
    bind(cloud.color_dc, 3);
    bind(cloud.color_sh, kShCoeffs);
    bind(cloud.opacity, 1);
    bind(cloud.scale, 3);
    bind(cloud.rotation, 4);
  }

  const std::uint8_t* body = bytes.data() + header.body_offset;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* row = body + i * stride;
    for (std::size_t c = 0; c < names.size(); ++c) {
      float v;
      std::memcpy(&v, row + column[c], sizeof(float));
      if (!std::isfinite(v)) {
        throw DataError("non-finite value in property '" + names[c] + "' at vertex " +
                        std::to_string(i));
      }
      dst[c][i * width[c]] = v;
    }
  }
  return cloud;
}

std::vector<std::uint8_t> write_ply(const GaussianCloud& cloud) {
  validate(cloud);
  const std::size_t n = cloud.size();
  std::ostringstream head;
  head << "ply\nformat binary_little_endian 1.0\nelement vertex " << n << "\n";
  for (const std::string& name : written_names()) head << "property float " << name << "\n";
  head << "end_header\n";
  const std::string h = head.str();

  constexpr std::size_t kFloats = 62;
  std::vector<std::uint8_t> out(h.size() + n * kFloats * sizeof(float));
  std::memcpy(out.data(), h.data(), h.size());
  float* row = reinterpret_cast<float*>(out.data() + h.size());
  std::vector<float> buf(kFloats);
  for (std::size_t i = 0; i < n; ++i) {
    float* p = buf.data();
    for (int j = 0; j < 3; ++j) *p++ = cloud.positions[i * 3 + j];
    for (int j = 0; j < 3; ++j) *p++ = 0.0f;
    for (int j = 0; j < 3; ++j) *p++ = cloud.color_dc[i * 3 + j];
    for (int j = 0; j < kShCoeffs; ++j) *p++ = cloud.color_sh[i * kShCoeffs + j];
    *p++ = cloud.opacity[i];
    for (int j = 0; j < 3; ++j) *p++ = cloud.scale[i * 3 + j];
    for (int j = 0; j < 4; ++j) *p++ = cloud.rotation[i * 4 + j];
    std::memcpy(reinterpret_cast<std::uint8_t*>(row) + i * kFloats * sizeof(float), buf.data(),
                kFloats * sizeof(float));
  }
  return out;
}

GaussianCloud read_ply_file(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return parse_ply(bytes);
}

void write_ply_file(const std::string& path, const GaussianCloud& cloud) {
  write_file_bytes(path, write_ply(cloud));
}

CameraList parse_cameras(const std::string& text) {
  CameraList cameras;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    Camera cam;
    fields >> cam.id;
    for (double& c : cam.center) fields >> c;
    for (double& r : cam.rotation) fields >> r;
    if (fields.fail()) {
      throw ParseError("camera line " + std::to_string(line_no) + " needs 13 numeric fields");
    }
    std::string extra;
    if (fields >> extra) throw ParseError("trailing data on camera line " + std::to_string(line_no));
    // Rows must be orthonormal.
    const auto& r = cam.rotation;
    for (int a = 0; a < 3; ++a) {
      for (int b = a; b < 3; ++b) {
        const double dot = r[a * 3] * r[b * 3] + r[a * 3 + 1] * r[b * 3 + 1] + r[a * 3 + 2] * r[b * 3 + 2];
        if (std::abs(dot - (a == b ? 1.0 : 0.0)) > 1e-6) {
          throw DataError("camera " + std::to_string(cam.id) + " rotation is not orthonormal");
        }
      }
    }
    cameras.push_back(cam);
  }
  return cameras;
}

std::string write_cameras(const CameraList& cameras) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const Camera& cam : cameras) {
    out << cam.id;
    for (double c : cam.center) out << ' ' << c;
    for (double r : cam.rotation) out << ' ' << r;
    out << '\n';
  }
  return out.str();
}

CameraList read_cameras_file(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return parse_cameras(std::string(bytes.begin(), bytes.end()));
}

void write_cameras_file(const std::string& path, const CameraList& cameras) {
  const std::string text = write_cameras(cameras);
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace ply

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::uint8_t> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw IoError("failed to read '" + path + "'");
  return bytes;
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed to write '" + path + "'");
}

}  // namespace hgs
