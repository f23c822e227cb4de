#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <string>

#include "hgs/errors.hpp"
#include "hgs/ply_io.hpp"
#include "support/synthetic.hpp"

using namespace hgs;

namespace {

std::string header_text(const std::vector<std::uint8_t>& bytes) {
  const std::string s(bytes.begin(), bytes.end());
  return s.substr(0, s.find("end_header\n") + 11);
}

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

// Builds a one-vertex file from a property list; every property is 0.0f.
std::vector<std::uint8_t> one_vertex_file(const std::vector<std::string>& props) {
  std::string h = "ply\nformat binary_little_endian 1.0\nelement vertex 1\n";
  for (const auto& p : props) h += "property float " + p + "\n";
  h += "end_header\n";
  auto out = bytes_of(h);
  out.resize(out.size() + 4 * props.size(), 0);
  return out;
}

std::vector<std::string> standard_properties() {
  std::vector<std::string> p = {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"};
  for (int i = 0; i < 45; ++i) p.push_back("f_rest_" + std::to_string(i));
  p.insert(p.end(), {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"});
  return p;
}

}  // namespace

TEST_CASE("zero vertex parses to a zero cloud") {
  const auto c = ply::parse_ply(one_vertex_file(standard_properties()));
  REQUIRE(c.size() == 1);
  for (float v : c.positions) CHECK(v == 0.0f);
  for (float v : c.color_sh) CHECK(v == 0.0f);
  CHECK(c.opacity[0] == 0.0f);
  CHECK(c.rotation == std::vector<float>(4, 0.0f));
}

TEST_CASE("writer emits 62 float properties") {
  GaussianCloud c;
  c.resize(1);
  const auto bytes = ply::write_ply(c);
  const auto h = header_text(bytes);
  CHECK(h.find("element vertex 1\n") != std::string::npos);
  std::size_t count = 0;
  for (std::size_t at = h.find("property float"); at != std::string::npos;
       at = h.find("property float", at + 1)) {
    ++count;
  }
  CHECK(count == 62);
  CHECK(bytes.size() == h.size() + 62 * 4);
}

TEST_CASE("write then parse is the identity") {
  const auto c = testing::synthetic_cloud(1000, 11);
  CHECK(ply::parse_ply(ply::write_ply(c)) == c);
  const auto bytes = ply::write_ply(c);
  CHECK(ply::write_ply(ply::parse_ply(bytes)) == bytes);
}

TEST_CASE("one changed opacity changes the bytes") {
  auto a = testing::synthetic_cloud(10, 3);
  auto b = a;
  b.opacity[4] = std::nextafter(b.opacity[4], 1e9f);
  CHECK(ply::write_ply(a) != ply::write_ply(b));
}

TEST_CASE("missing property is a schema error naming it") {
  auto props = standard_properties();
  props.erase(std::find(props.begin(), props.end(), "f_rest_44"));
  try {
    ply::parse_ply(one_vertex_file(props));
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("f_rest_44") != std::string::npos);
  }
}

TEST_CASE("property order in the file does not matter") {
  auto props = standard_properties();
  std::reverse(props.begin(), props.end());
  std::string h = "ply\nformat binary_little_endian 1.0\nelement vertex 1\n";
  for (const auto& p : props) h += "property float " + p + "\n";
  h += "end_header\n";
  auto bytes = bytes_of(h);
  for (std::size_t i = 0; i < props.size(); ++i) {
    const float v = static_cast<float>(i);
    const auto at = bytes.size();
    bytes.resize(at + 4);
    std::memcpy(bytes.data() + at, &v, 4);
  }
  const auto c = ply::parse_ply(bytes);
  // "x" is last in the reversed list.
  CHECK(c.positions[0] == static_cast<float>(props.size() - 1));
  CHECK(c.rotation[3] == 0.0f);
}

TEST_CASE("extra properties are skipped") {
  auto props = standard_properties();
  props.insert(props.begin() + 3, "confidence");
  auto bytes = one_vertex_file(props);
  CHECK(ply::parse_ply(bytes).size() == 1);
}

TEST_CASE("malformed headers are parse errors") {
  CHECK_THROWS_AS(ply::parse_ply(bytes_of("plx\n")), ParseError);
  CHECK_THROWS_AS(ply::parse_ply(bytes_of("ply\nformat ascii 1.0\nelement vertex 1\nend_header\n")),
                  ParseError);
  CHECK_THROWS_AS(ply::parse_ply(bytes_of("ply\nformat binary_little_endian 1.0\nelement vertex 1\n")),
                  ParseError);
  auto truncated = one_vertex_file(standard_properties());
  truncated.pop_back();
  CHECK_THROWS_AS(ply::parse_ply(truncated), ParseError);
}

TEST_CASE("non-finite values are data errors with the index") {
  auto c = testing::synthetic_cloud(5, 1);
  c.scale[3 * 3 + 1] = std::numeric_limits<float>::quiet_NaN();
  try {
    ply::parse_ply(ply::write_ply(c));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("vertex 3") != std::string::npos);
  }
}

TEST_CASE("camera list round trip and validation") {
  const std::string text =
      "# id tx ty tz r00..r22\n"
      "0 1 2 3 1 0 0 0 1 0 0 0 1\n"
      "\n"
      "7 -1.5 0 2 0 -1 0 1 0 0 0 0 1\n";
  const auto cams = ply::parse_cameras(text);
  REQUIRE(cams.size() == 2);
  CHECK(cams[1].id == 7);
  CHECK(cams[1].center[0] == -1.5);
  CHECK(ply::parse_cameras(ply::write_cameras(cams)) == cams);

  CHECK_THROWS_AS(ply::parse_cameras("0 1 2 3 2 0 0 0 1 0 0 0 1\n"), DataError);
  CHECK_THROWS_AS(ply::parse_cameras("0 1 2 3 1 0 0\n"), ParseError);
}

TEST_CASE("file helpers report the path on failure") {
  const std::string missing = "/nonexistent/dir/cloud.ply";
  try {
    ply::read_ply_file(missing);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(missing) != std::string::npos);
  }
  const auto path = (std::filesystem::temp_directory_path() / "hgs_ply_io_test.ply").string();
  const auto c = testing::synthetic_cloud(20, 2);
  ply::write_ply_file(path, c);
  CHECK(ply::read_ply_file(path) == c);
  std::filesystem::remove(path);
}
