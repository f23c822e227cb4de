#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "hgs/codec.hpp"
#include "hgs/errors.hpp"
#include "support/oracles.hpp"

using namespace hgs;
using namespace hgs::codec;

namespace {

std::vector<IVec3> random_voxels(std::size_t n, int bit_depth, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int32_t> u(0, (1 << bit_depth) - 1);
  std::set<IVec3> seen;
  while (seen.size() < n) seen.insert({u(rng), u(rng), u(rng)});
  std::vector<IVec3> out(seen.begin(), seen.end());
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::vector<IVec3> sorted(std::vector<IVec3> v) {
  std::sort(v.begin(), v.end());
  return v;
}

double energy(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return s;
}

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 50);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST_CASE("octree hand trace for two opposite corners") {
  const std::vector<IVec3> p{{0, 0, 0}, {3, 3, 3}};
  const auto s = octree_encode(p, 2);
  REQUIRE(s.occupancy.size() == 3);
  CHECK(s.occupancy[0] == 0x81);
  CHECK(s.occupancy[1] == 0x01);
  CHECK(s.occupancy[2] == 0x80);
  CHECK(octree_decode(s) == p);
}

TEST_CASE("octree single point and saturated cube") {
  const std::vector<IVec3> one{{5, 2, 7}};
  const auto s = octree_encode(one, 3);
  REQUIRE(s.occupancy.size() == 3);
  for (auto b : s.occupancy) CHECK(std::popcount(static_cast<unsigned>(b)) == 1);
  CHECK(octree_decode(s) == one);

  std::vector<IVec3> cube;
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y)
      for (int z = 0; z < 4; ++z) cube.push_back({x, y, z});
  const auto full = octree_encode(cube, 2);
  CHECK(full.occupancy.size() == 9);
  for (auto b : full.occupancy) CHECK(b == 0xFF);
}

TEST_CASE("octree rejects bad input and corrupt streams") {
  CHECK_THROWS_AS(octree_encode(std::vector<IVec3>{{1, 1, 1}, {1, 1, 1}}, 2), DuplicateError);
  CHECK_THROWS_AS(octree_encode(std::vector<IVec3>{{4, 0, 0}}, 2), RangeError);
  CHECK_THROWS_AS(octree_encode(std::vector<IVec3>{{-1, 0, 0}}, 2), RangeError);
  CHECK_THROWS_AS(octree_decode(OctreeStream{2, 1, {0x00, 0x01}}), CorruptStreamError);
  CHECK_THROWS_AS(octree_decode(OctreeStream{2, 2, {0x81, 0x01}}), CorruptStreamError);
  CHECK_THROWS_AS(octree_decode(OctreeStream{2, 3, {0x81, 0x01, 0x80}}), CorruptStreamError);
}

TEST_CASE("morton codes interleave x first") {
  CHECK(morton_code({1, 0, 0}, 1) == 4);
  CHECK(morton_code({0, 1, 0}, 1) == 2);
  CHECK(morton_code({0, 0, 1}, 1) == 1);
  CHECK(morton_code({2, 0, 0}, 2) == 32);
  const auto p = random_voxels(1000, 18, 1);
  for (const auto& v : p) CHECK(morton_decode(morton_code(v, 18), 18) == v);
}

TEST_CASE("geometry substream round trip at 16 bits") {
  const auto p = random_voxels(100000, 16, 2);
  const auto s = octree_encode(p, 16);
  CHECK(sorted(octree_decode(s)) == sorted(p));

  std::vector<IVec3> shifted = p;
  for (auto& v : shifted)
    for (auto& c : v) c -= (1 << 15) - 1;
  const auto bytes = encode_geometry(shifted, 16);
  CHECK(sorted(decode_geometry(bytes)) == sorted(shifted));
  auto cut = bytes;
  cut.resize(cut.size() - 1);
  CHECK_THROWS_AS(decode_geometry(cut), CorruptStreamError);
}

TEST_CASE("geometry round trip across bit depths") {
  for (int n : {1, 2, 5, 8, 12, 18}) {
    const std::size_t count = std::min<std::size_t>(500, std::size_t{1} << (3 * n - 1));
    const auto p = random_voxels(count, n, static_cast<std::uint64_t>(n));
    CHECK(sorted(octree_decode(octree_encode(p, n))) == sorted(p));
  }
}

TEST_CASE("raht two-voxel hand values") {
  const std::vector<IVec3> p{{0, 0, 0}, {0, 0, 1}};
  const std::vector<double> a{1, 3};
  const auto c = raht_forward(a, p, 1);
  REQUIRE(c.coefficients.size() == 2);
  CHECK(c.coefficients[0] == doctest::Approx(2 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(c.coefficients[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(energy(c.coefficients) == doctest::Approx(10.0).epsilon(1e-12));
  const RahtPlan plan(p, 1);
  const auto back = raht_inverse(c.coefficients, plan);
  CHECK(back[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(back[1] == doctest::Approx(3.0).epsilon(1e-12));

  const std::vector<double> flat{2.5, 2.5};
  const auto cf = raht_forward(flat, p, 1);
  CHECK(cf.coefficients[0] == doctest::Approx(std::sqrt(2.0) * 2.5));
  CHECK(std::abs(cf.coefficients[1]) < 1e-12);

  const std::vector<double> single{4.25};
  const std::vector<IVec3> q{{3, 1, 2}};
  CHECK(raht_forward(single, q, 2).coefficients == std::vector<double>{4.25});
}

TEST_CASE("raht matches the map-based reference") {
  for (int n : {2, 4, 10}) {
    const auto p = random_voxels(std::min(300, 1 << (3 * n - 2)), n, 40 + static_cast<unsigned>(n));
    const RahtPlan plan(p, n);
    const auto signal = random_signal(plan.size(), 41);
    const auto c = raht_forward(signal, plan);
    const auto ref = oracle::raht_reference(plan.morton_codes(), signal, n);
    REQUIRE(ref.size() == c.coefficients.size());
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(c.coefficients[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("raht is orthonormal and invertible") {
  const auto p = random_voxels(4096, 10, 50);
  const RahtPlan plan(p, 10);
  const auto x = random_signal(plan.size(), 51);
  const auto c = raht_forward(x, plan);
  CHECK(std::abs(energy(c.coefficients) - energy(x)) <= 1e-9 * energy(x));
  std::int64_t total = 0;
  CHECK(c.weights[0] == 4096);
  for (auto w : c.weights) total += w > 0;
  CHECK(total == 4096);
  const auto back = raht_inverse(c.coefficients, plan);
  double inf = 0, worst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    inf = std::max(inf, std::abs(x[i]));
    worst = std::max(worst, std::abs(back[i] - x[i]));
  }
  CHECK(worst <= 1e-9 * inf);
  const std::vector<double> zeros(plan.size(), 0.0);
  for (double v : raht_inverse(zeros, plan)) CHECK(v == 0.0);
  CHECK_THROWS_AS(raht_inverse(std::vector<double>(3, 0.0), plan), ShapeError);
  CHECK_THROWS_AS(raht_forward(std::vector<double>(3, 0.0), plan), ShapeError);
}

TEST_CASE("coefficient quantization error bounds") {
  const std::vector<double> ints{-3, 0, 7, 12};
  CHECK(dequantize_coeffs(quantize_coeffs(ints, 1.0), 1.0) == ints);
  CHECK(quantize_coeffs(std::vector<double>{-2.5, 2.5}, 1.0) == std::vector<std::int64_t>{-3, 3});

  const auto p = random_voxels(2000, 8, 60);
  const RahtPlan plan(p, 8);
  const auto x = random_signal(plan.size(), 61);
  const auto c = raht_forward(x, plan);
  for (double qs : {0.5, 2.0, 8.0}) {
    const auto deq = dequantize_coeffs(quantize_coeffs(c.coefficients, qs), qs);
    for (std::size_t i = 0; i < deq.size(); ++i) CHECK(std::abs(deq[i] - c.coefficients[i]) <= qs / 2 + 1e-9);
    const auto back = raht_inverse(deq, plan);
    double l2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) l2 += (back[i] - x[i]) * (back[i] - x[i]);
    CHECK(std::sqrt(l2) <= qs / 2 * std::sqrt(static_cast<double>(x.size())) + 1e-9);
  }
}

TEST_CASE("range coder round trips biased bits") {
  std::mt19937_64 rng(70);
  std::bernoulli_distribution b(0.1);
  std::vector<int> bits(20000);
  for (int& v : bits) v = b(rng);
  RangeEncoder enc;
  BitModel m;
  for (int v : bits) enc.encode(m, v);
  enc.encode_direct(0x2A5, 10);
  const auto bytes = enc.finish();
  CHECK(bytes.size() < bits.size() / 8);
  RangeDecoder dec(bytes);
  BitModel m2;
  for (int v : bits) CHECK(dec.decode(m2) == v);
  CHECK(dec.decode_direct(10) == 0x2A5);
}

TEST_CASE("entropy coder round trips random symbols") {
  std::mt19937_64 rng(80);
  std::vector<std::int64_t> coeffs(100000);
  std::geometric_distribution<std::int64_t> geo(0.05);
  std::bernoulli_distribution sign(0.5);
  for (auto& v : coeffs) v = sign(rng) ? geo(rng) : -geo(rng);
  coeffs[5] = (std::int64_t{1} << 61);
  coeffs[6] = -(std::int64_t{1} << 61) + 3;
  CHECK(entropy_decode(entropy_encode(coeffs, SymbolKind::kCoefficient), SymbolKind::kCoefficient) == coeffs);

  std::uniform_int_distribution<int> occ(1, 255);
  std::vector<std::int64_t> bytes(100000);
  for (auto& v : bytes) v = occ(rng);
  CHECK(entropy_decode(entropy_encode(bytes, SymbolKind::kOccupancy), SymbolKind::kOccupancy) == bytes);
}

TEST_CASE("entropy coder compresses a zero stream") {
  const std::vector<std::int64_t> zeros(10000, 0);
  const auto enc = entropy_encode(zeros, SymbolKind::kCoefficient);
  CHECK(enc.size() < 0.01 * 4 * zeros.size());
  CHECK(entropy_decode(enc, SymbolKind::kCoefficient) == zeros);
}

TEST_CASE("entropy coder empty input is just the header") {
  const auto enc = entropy_encode(std::vector<std::int64_t>{}, SymbolKind::kCoefficient);
  CHECK(enc.size() == kEntropyHeaderBytes);
  CHECK(entropy_decode(enc, SymbolKind::kCoefficient).empty());
}

TEST_CASE("entropy coder expansion bound") {
  std::mt19937_64 rng(90);
  for (SymbolKind kind : {SymbolKind::kOccupancy, SymbolKind::kCoefficient}) {
    for (std::size_t n : {1u, 10u, 1000u, 50000u}) {
      std::vector<std::int64_t> s(n);
      std::uniform_int_distribution<std::int64_t> u(kind == SymbolKind::kOccupancy ? 1 : -(1LL << 40),
                                                    kind == SymbolKind::kOccupancy ? 255 : (1LL << 40));
      for (auto& v : s) v = u(rng);
      const std::size_t raw = kind == SymbolKind::kOccupancy ? n : 8 * n;
      const auto enc = entropy_encode(s, kind);
      CHECK(static_cast<double>(enc.size()) <= 64 + 1.01 * static_cast<double>(raw));
    }
  }
}

TEST_CASE("entropy decoder rejects corrupt input") {
  const std::vector<std::int64_t> s{1, 2, 3, -4, 100};
  auto enc = entropy_encode(s, SymbolKind::kCoefficient);
  CHECK_THROWS_AS(entropy_decode(std::vector<std::uint8_t>(enc.begin(), enc.begin() + 3), SymbolKind::kCoefficient),
                  CorruptStreamError);
  auto bad_mode = enc;
  bad_mode[0] = 7;
  CHECK_THROWS_AS(entropy_decode(bad_mode, SymbolKind::kCoefficient), CorruptStreamError);
  CHECK_THROWS_AS(entropy_encode(std::vector<std::int64_t>{0}, SymbolKind::kOccupancy), RangeError);
}

TEST_CASE("attribute substreams are lossless and independent") {
  const auto p = random_voxels(3000, 12, 100);
  const RahtPlan plan(p, 12);
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::int64_t> u(0, 65535);
  std::vector<std::int64_t> a(plan.size()), b(plan.size());
  for (auto& v : a) v = u(rng);
  for (auto& v : b) v = u(rng) / 256;
  for (AttributeMode mode : {AttributeMode::kRaht, AttributeMode::kBypass}) {
    const auto ea = encode_attribute(a, plan, mode, 1.0);
    const auto eb = encode_attribute(b, plan, mode, 1.0);
    CHECK(decode_attribute(ea, plan, mode, 1.0) == a);
    CHECK(decode_attribute(eb, plan, mode, 1.0) == b);
    // Encoding a alone or after b gives the same bytes.
    CHECK(encode_attribute(a, plan, mode, 1.0) == ea);
    CHECK(ea != eb);
  }
}

TEST_CASE("lossy raht attribute error is bounded") {
  const auto p = random_voxels(2000, 10, 110);
  const RahtPlan plan(p, 10);
  std::mt19937_64 rng(111);
  std::uniform_int_distribution<std::int64_t> u(0, 4095);
  std::vector<std::int64_t> a(plan.size());
  for (auto& v : a) v = u(rng);
  const double qs = 16.0;
  const auto back = decode_attribute(encode_attribute(a, plan, AttributeMode::kRaht, qs), plan,
                                     AttributeMode::kRaht, qs);
  double l2 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(back[i] - a[i]);
    l2 += d * d;
  }
  // Coefficient rounding plus the final rounding back to integers.
  CHECK(std::sqrt(l2) <= (qs / 2 + 0.5) * std::sqrt(static_cast<double>(a.size())));
}
