#include "hgs/pipeline.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "hgs/errors.hpp"
#include "hgs/quantizers.hpp"

namespace hgs::pipeline {
namespace {

using latent::Matrix;
using QK = bitstream::QuantizerKind;

/// Runs `fn`, prefixing any codec error with the pipeline stage it came from.
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.category(), std::string(name) + ": " + e.what());
  }
}

struct QuantizedChannel {
  std::vector<std::int64_t> codes;
  bitstream::ChannelParams params;
};

QuantizedChannel quantize_channel(const std::vector<double>& values, int bit_depth, QK kind,
                                  double lambda) {
  QuantizedChannel out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const bool constant = *lo == *hi;
  out.params.kind = kind;
  if (kind == QK::kUniform) {
    // A constant channel still needs a non-empty range.
    const double f_max = constant ? *lo + 1.0 : *hi;
    auto r = quant::uq_quantize(values, bit_depth, *lo, f_max);
    out.codes = std::move(r.codes);
    out.params.first = *lo;
    out.params.second = f_max;
  } else if (constant || values.size() < 2) {
    out.codes.assign(values.size(), 0);
    out.params.first = 0.0;
    out.params.second = *lo;
  } else {
    auto r = quant::rq_fit_and_quantize(values, bit_depth, lambda);
    out.codes = std::move(r.codes);
    out.params.first = r.params.a;
    out.params.second = r.params.b;
  }
  return out;
}

std::vector<double> dequantize_channel(const std::vector<std::int64_t>& codes,
                                       const bitstream::ChannelParams& p, int bit_depth) {
  if (p.kind == QK::kUniform) {
    try {
      return quant::uq_dequantize(codes, {p.first, p.second, bit_depth});
    } catch (const CodeError& e) {
      throw CorruptStreamError(e.what());
    }
  }
  return quant::rq_dequantize(codes, {p.first, p.second, bit_depth, quant::kDefaultEpsilon});
}

/// Deterministic evenly spaced rows.
std::vector<Eigen::Index> sample_rows(Eigen::Index n, int count) {
  std::vector<Eigen::Index> rows;
  if (count <= 0 || n <= count) {
    rows.resize(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    return rows;
  }
  for (int i = 0; i < count; ++i) rows.push_back(static_cast<Eigen::Index>((i * n) / count));
  return rows;
}

Matrix take_rows(const Matrix& m, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

/// PCA warm start on all rows, decoder training on a subsample, then latent
/// refinement on all rows against the float-rounded decoder. Falls back to the
/// warm start whenever training does not lower the full-data loss.
latent::LatentFit fit_group(const Matrix& x, int k, const EncodeConfig& config) {
  latent::FitConfig fc;
  fc.hidden = std::max(config.hidden, k);
  fc.epochs = config.latent_epochs;
  fc.step_size = config.latent_step;
  fc.seed = config.seed;

  latent::LatentFit warm = latent::init_latent_model(x, k, fc);
  warm.model.round_to_float();
  warm.loss = latent::latent_loss(x, warm.latents, warm.model);
  if (config.latent_epochs <= 0) return warm;

  const auto rows = sample_rows(x.rows(), config.latent_sample);
  latent::LatentFit sub{take_rows(warm.latents, rows), warm.model, 0.0};
  latent::LatentFit trained;
  try {
    trained = latent::train_latent_model(take_rows(x, rows), std::move(sub), fc);
  } catch (const DivergenceError&) {
    return warm;
  }
  trained.model.round_to_float();
  Matrix z = warm.latents;
  try {
    z = latent::refine_latents(x, trained.model, std::move(z), config.refine_steps,
                               config.refine_step);
  } catch (const DivergenceError&) {
    return warm;
  }
  const double loss = latent::latent_loss(x, z, trained.model);
  if (!(loss < warm.loss)) return warm;
  return {std::move(z), std::move(trained.model), loss};
}

IVec3 shifted(const IVec3& p, int bit_depth) {
  const std::int32_t offset = static_cast<std::int32_t>((std::int64_t{1} << (bit_depth - 1)) - 1);
  return {p[0] + offset, p[1] + offset, p[2] + offset};
}

}  // namespace

void validate(const EncodeConfig& c) {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  check(c.bd >= 2 && c.bd <= 18, "bd " + std::to_string(c.bd) + " outside [2, 18]");
  for (const auto& [v, name] : {std::pair{c.bd_c, "bd_c"}, {c.bd_o, "bd_o"}, {c.bd_s, "bd_s"},
                                {c.bd_r, "bd_r"}}) {
    if (v) check(*v >= 1 && *v <= 18, std::string(name) + " " + std::to_string(*v) + " outside [1, 18]");
  }
  check(c.kc >= 1 && c.kc <= 48, "kc " + std::to_string(c.kc) + " outside [1, 48]");
  check(c.kr >= 1 && c.kr <= 4, "kr " + std::to_string(c.kr) + " outside [1, 4]");
  check(c.lambda >= 0.0 && std::isfinite(c.lambda), "lambda must be non-negative");
  check(c.nb_neighbors >= 1, "nb_neighbors must be positive");
  check(c.std_ratio > 0.0, "std_ratio must be positive");
  check(!c.target_bytes || *c.target_bytes > 0.0, "target size must be positive");
  check(c.rate_method == 1 || c.rate_method == 2, "rate method must be 1 or 2");
  check(c.lossless_ratio > 0.0 && std::isfinite(c.lossless_ratio), "L must be positive");
  check(c.raht_step >= 1.0 && std::isfinite(c.raht_step), "RAHT step must be at least 1");
  check(c.hidden >= 1, "hidden width must be positive");
  check(c.latent_epochs >= 0 && c.refine_steps >= 0, "iteration counts must be non-negative");
  check(c.latent_step > 0.0 && c.refine_step > 0.0, "step sizes must be positive");
}

Matrix color_matrix(const GaussianCloud& cloud) {
  const auto n = static_cast<Eigen::Index>(cloud.size());
  Matrix x(n, kColorChannels);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) x(i, c) = cloud.color_dc[static_cast<std::size_t>(i * 3 + c)];
    for (int c = 0; c < kShCoeffs; ++c) {
      x(i, 3 + c) = cloud.color_sh[static_cast<std::size_t>(i * kShCoeffs + c)];
    }
  }
  return x;
}

Matrix rotation_matrix(const GaussianCloud& cloud) {
  const auto n = static_cast<Eigen::Index>(cloud.size());
  Matrix x(n, kRotationChannels);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < kRotationChannels; ++c) {
      x(i, c) = cloud.rotation[static_cast<std::size_t>(i * kRotationChannels + c)];
    }
  }
  return x;
}

EncodeResult encode(const GaussianCloud& input, const EncodeConfig& config) {
  validate(config);
  stage("parse", [&] { hgs::validate(input); });
  EncodeResult result;
  EncodeSummary& summary = result.summary;
  summary.n_input = input.size();

  GaussianCloud cloud = input;
  if (config.outlier_removal) {
    cloud = stage("outlier removal", [&] {
      return geometry::remove_outliers(cloud, config.nb_neighbors, config.std_ratio).cloud;
    });
  }
  summary.n_after_outliers = cloud.size();

  const int bd = config.bd;
  auto [normalized, transform] = stage("normalize", [&] { return geometry::normalize(cloud, bd); });

  LatticeCloud lattice = stage("integerize", [&] {
    LatticeCloud l;
    l.voxels = geometry::round_positions(normalized.positions, bd);
    const auto coding = geometry::decompose_positions(l.voxels, bd);
    if (geometry::recompose_positions(coding) != l.voxels) {
      throw ConsistencyError("coding-vector decomposition does not reproduce the lattice");
    }
    l.attributes = std::move(normalized);
    return l;
  });

  lattice = stage("uniqueness", [&] { return geometry::deduplicate(lattice).cloud; });
  summary.n_after_dedup = lattice.size();

  rate::RateModel model;
  model.bd_p = bd;
  model.bd_c = config.bd_c.value_or(bd);
  model.bd_o = config.bd_o.value_or(bd);
  model.bd_s = config.bd_s.value_or(bd);
  model.bd_r = config.bd_r.value_or(bd);
  model.k_c = config.kc;
  model.k_r = config.kr;
  model.lossless_ratio = config.lossless_ratio;
  summary.target_bytes = config.target_bytes;

  if (config.target_bytes) {
    const auto n_top = static_cast<std::int64_t>(lattice.size());
    if (config.rate_method == 1) {
      const auto plan = stage("rate control", [&] {
        return rate::plan_method1(*config.target_bytes, model, n_top);
      });
      if (plan.n_target < n_top) {
        const auto pruned = stage("pruning", [&] {
          return geometry::prune(lattice.attributes, static_cast<std::size_t>(n_top - plan.n_target));
        });
        lattice = geometry::select(lattice, pruned.kept);
      }
    } else {
      const auto plan = stage("rate control", [&] {
        return rate::plan_method2(*config.target_bytes, model, n_top);
      });
      model = plan.model;
      summary.bd_reduction = plan.delta;
    }
  }

  // Morton order, so the container can rebuild it from geometry alone.
  {
    const std::size_t n = lattice.size();
    std::vector<std::uint64_t> codes(n);
    for (std::size_t i = 0; i < n; ++i) codes[i] = codec::morton_code(shifted(lattice.voxels[i], bd), bd);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return codes[a] < codes[b]; });
    lattice = geometry::select(lattice, order);
  }
  const std::size_t n = lattice.size();
  summary.n_final = n;
  summary.bits_per_primitive = rate::bits_per_primitive(model);
  summary.estimated_bytes = rate::estimate_size(model, static_cast<std::int64_t>(n));

  const GaussianCloud& attrs = lattice.attributes;
  const auto color_fit = stage("color latents", [&] { return fit_group(color_matrix(attrs), config.kc, config); });
  const auto rotation_fit =
      stage("rotation latents", [&] { return fit_group(rotation_matrix(attrs), config.kr, config); });
  summary.color_loss = color_fit.loss;
  summary.rotation_loss = rotation_fit.loss;

  bitstream::HgsBitstream& s = result.stream;
  bitstream::Header& h = s.header;
  h.n = n;
  h.bd_p = bd;
  h.bd_c = model.bd_c;
  h.bd_o = model.bd_o;
  h.bd_s = model.bd_s;
  h.bd_r = model.bd_r;
  h.k_c = config.kc;
  h.k_r = config.kr;
  h.quantizer = config.quantizer;
  h.rq_widened = config.quantizer == QK::kRobust;
  h.attribute_mode = config.attribute_mode;
  h.raht_step = config.raht_step;
  h.transform = transform;
  s.color_model = color_fit.model;
  s.rotation_model = rotation_fit.model;
  s.cloud.positions = lattice.voxels;

  std::vector<std::vector<double>> raw;
  for (int j = 0; j < config.kc; ++j) {
    const auto col = color_fit.latents.col(j);
    raw.emplace_back(col.data(), col.data() + col.size());
  }
  raw.emplace_back(attrs.opacity.begin(), attrs.opacity.end());
  for (int a = 0; a < 3; ++a) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = attrs.scale[i * 3 + static_cast<std::size_t>(a)];
    raw.push_back(std::move(v));
  }
  for (int j = 0; j < config.kr; ++j) {
    const auto col = rotation_fit.latents.col(j);
    raw.emplace_back(col.data(), col.data() + col.size());
  }
  stage("quantization", [&] {
    for (std::size_t c = 0; c < raw.size(); ++c) {
      auto q = quantize_channel(raw[c], h.channel_bit_depth(static_cast<int>(c)), config.quantizer,
                                config.lambda);
      s.cloud.channels.push_back(std::move(q.codes));
      s.params.push_back(q.params);
    }
  });

  result.bytes = stage("serialize", [&] { return bitstream::serialize(s); });
  result.coded = std::move(lattice);
  summary.stream_bytes = result.bytes.size();
  summary.allocation = bitstream::inspect(result.bytes);
  return result;
}

DecodeResult decode(const bitstream::HgsBitstream& s, const DecodeOptions& options) {
  const auto& h = s.header;
  const std::size_t n = h.n;
  DecodeResult out;
  out.transform = h.transform;
  GaussianCloud& cloud = out.cloud;
  cloud.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) cloud.positions[i * 3 + a] = static_cast<float>(s.cloud.positions[i][a]);
  }

  std::vector<std::vector<double>> values;
  for (int c = 0; c < h.channel_count(); ++c) {
    values.push_back(dequantize_channel(s.cloud.channels[static_cast<std::size_t>(c)],
                                        s.params[static_cast<std::size_t>(c)], h.channel_bit_depth(c)));
  }
  const auto rows = static_cast<Eigen::Index>(n);
  Matrix zc(rows, h.k_c), zr(rows, h.k_r);
  for (int j = 0; j < h.k_c; ++j) {
    for (std::size_t i = 0; i < n; ++i) zc(static_cast<Eigen::Index>(i), j) = values[static_cast<std::size_t>(j)][i];
  }
  for (int j = 0; j < h.k_r; ++j) {
    const auto& v = values[static_cast<std::size_t>(h.k_c + 4 + j)];
    for (std::size_t i = 0; i < n; ++i) zr(static_cast<Eigen::Index>(i), j) = v[i];
  }
  const Matrix color = latent::decode_latent(zc, s.color_model);
  const Matrix rotation = latent::decode_latent(zr, s.rotation_model);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (int c = 0; c < 3; ++c) cloud.color_dc[i * 3 + c] = static_cast<float>(color(r, c));
    for (int c = 0; c < kShCoeffs; ++c) cloud.color_sh[i * kShCoeffs + c] = static_cast<float>(color(r, 3 + c));
    cloud.opacity[i] = static_cast<float>(values[static_cast<std::size_t>(h.k_c)][i]);
    for (int a = 0; a < 3; ++a) {
      cloud.scale[i * 3 + a] = static_cast<float>(values[static_cast<std::size_t>(h.k_c + 1 + a)][i]);
    }
    for (int c = 0; c < kRotationChannels; ++c) cloud.rotation[i * 4 + c] = static_cast<float>(rotation(r, c));
  }
  if (options.denormalize) cloud = geometry::denormalize(cloud, h.transform);
  return out;
}

DecodeResult decode(std::span<const std::uint8_t> bytes, const DecodeOptions& options) {
  return decode(bitstream::deserialize(bytes), options);
}

VerifyReport verify(const GaussianCloud& cloud, const EncodeConfig& config) {
  VerifyReport report;
  auto fail = [&](const std::string& msg) {
    report.ok = false;
    report.failures.push_back(msg);
  };
  const EncodeResult enc = encode(cloud, config);
  const bitstream::HgsBitstream back = bitstream::deserialize(enc.bytes);
  if (!(back == enc.stream)) fail("container fields differ after deserialize");
  if (bitstream::serialize(back) != enc.bytes) fail("re-serialized bytes differ");

  const DecodeResult dec = decode(back);
  const GaussianCloud& ref = enc.coded.attributes;
  const std::size_t n = ref.size();
  if (dec.cloud.size() != n) {
    fail("decoded primitive count differs");
    return report;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) {
      if (dec.cloud.positions[i * 3 + a] != static_cast<float>(enc.coded.voxels[i][a])) {
        fail("position " + std::to_string(i) + " left the lattice voxel");
        i = n;
        break;
      }
    }
  }
  auto max_err = [](const std::vector<float>& a, const std::vector<float>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double{a[i]} - double{b[i]}));
    return m;
  };
  report.max_color_error = std::max(max_err(dec.cloud.color_dc, ref.color_dc), max_err(dec.cloud.color_sh, ref.color_sh));
  report.max_opacity_error = max_err(dec.cloud.opacity, ref.opacity);
  report.max_scale_error = max_err(dec.cloud.scale, ref.scale);
  report.max_rotation_error = max_err(dec.cloud.rotation, ref.rotation);

  // Opacity and scale skip the latent stage, so UQ with exact attribute coding
  // bounds their error by half a step (plus the float output rounding).
  const auto& h = back.header;
  const bool exact = h.attribute_mode == codec::AttributeMode::kBypass || h.raht_step == 1.0;
  if (h.quantizer == QK::kUniform && exact) {
    for (int c = h.k_c; c < h.k_c + 4; ++c) {
      const auto& p = back.params[static_cast<std::size_t>(c)];
      const double step = (p.second - p.first) / static_cast<double>((std::int64_t{1} << h.channel_bit_depth(c)) - 1);
      const double magnitude = std::max(std::abs(p.first), std::abs(p.second));
      const double bound = step / 2 + 4 * FLT_EPSILON * magnitude;
      const double err = c == h.k_c ? report.max_opacity_error : 0.0;
      if (c == h.k_c && err > bound) fail("opacity error exceeds half a quantization step");
      if (c > h.k_c) {
        double m = 0.0;
        const int axis = c - h.k_c - 1;
        for (std::size_t i = 0; i < n; ++i) {
          m = std::max(m, std::abs(double{dec.cloud.scale[i * 3 + axis]} - double{ref.scale[i * 3 + axis]}));
        }
        if (m > bound) fail("scale error exceeds half a quantization step");
      }
    }
  }
  return report;
}

std::string PcaReport::csv() const {
  std::ostringstream os;
  os << "group,component,energy\n" << std::setprecision(17);
  auto emit = [&](const char* name, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << name << ',' << i << ',' << v[i] << '\n';
  };
  emit("color", color);
  emit("scale", scale);
  emit("rotation", rotation);
  return os.str();
}

PcaReport pca_report(const GaussianCloud& cloud) {
  hgs::validate(cloud);
  PcaReport r;
  r.color = latent::energy_spectrum(color_matrix(cloud));
  const auto n = static_cast<Eigen::Index>(cloud.size());
  Matrix s(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) s(i, a) = cloud.scale[static_cast<std::size_t>(i * 3 + a)];
  }
  r.scale = latent::energy_spectrum(s);
  r.rotation = latent::energy_spectrum(rotation_matrix(cloud));
  return r;
}

}  // namespace hgs::pipeline
