#include "hgs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

#include "hgs/errors.hpp"
#include "hgs/kdtree.hpp"

namespace hgs::geometry {
namespace {

std::int64_t lattice_bound(int bit_depth) { return (std::int64_t{1} << (bit_depth - 1)) - 1; }

void check_lattice_depth(int bit_depth) {
  if (bit_depth < 2 || bit_depth > 31) {
    throw RangeError("position bit depth " + std::to_string(bit_depth) + " outside [2, 31]");
  }
}

}  // namespace

std::array<double, 3> NormalizationTransform::apply(const std::array<double, 3>& p) const {
  return {scale * (p[0] - center[0]), scale * (p[1] - center[1]), scale * (p[2] - center[2])};
}

std::array<double, 3> NormalizationTransform::invert(const std::array<double, 3>& p) const {
  return {p[0] / scale + center[0], p[1] / scale + center[1], p[2] / scale + center[2]};
}

std::span<const std::int8_t> CodingMatrix::row(std::size_t i, int axis) const {
  const auto width = static_cast<std::size_t>(digits_per_coordinate());
  return std::span(digits).subspan((i * 3 + static_cast<std::size_t>(axis)) * width, width);
}

std::vector<std::int64_t> basis_vector(int bit_depth) {
  check_lattice_depth(bit_depth);
  std::vector<std::int64_t> e(static_cast<std::size_t>(bit_depth - 1));
  for (std::size_t j = 0; j < e.size(); ++j) {
    e[j] = std::int64_t{1} << (e.size() - 1 - j);
  }
  return e;
}

std::vector<double> mean_neighbor_distances(std::span<const float> positions, int nb_neighbors) {
  const std::size_t n = positions.size() / 3;
  std::vector<KdTree::Point> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i] = {positions[i * 3], positions[i * 3 + 1], positions[i * 3 + 2]};
  }
  const KdTree tree(pts);
  std::vector<double> mean(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nn = tree.knn(pts[i], static_cast<std::size_t>(nb_neighbors),
                             static_cast<std::int64_t>(i));
    double sum = 0.0;
    for (const auto& nb : nn) sum += std::sqrt(nb.dist2);
    mean[i] = sum / static_cast<double>(nn.size());
  }
  return mean;
}

OutlierResult remove_outliers(const GaussianCloud& cloud, int nb_neighbors, double std_ratio) {
  const std::size_t n = cloud.size();
  if (nb_neighbors < 1) throw InsufficientPointsError("nb_neighbors must be at least 1");
  if (n <= static_cast<std::size_t>(nb_neighbors)) {
    throw InsufficientPointsError(std::to_string(n) + " points cannot supply " +
                                  std::to_string(nb_neighbors) + " neighbours each");
  }
  const std::vector<double> dist = mean_neighbor_distances(cloud.positions, nb_neighbors);
  const double mean = std::accumulate(dist.begin(), dist.end(), 0.0) / static_cast<double>(n);
  double sq = 0.0;
  for (double d : dist) sq += (d - mean) * (d - mean);
  const double stddev = std::sqrt(sq / static_cast<double>(n - 1));
  const double threshold = mean + std_ratio * stddev;

  OutlierResult out;
  std::vector<std::size_t> kept;
  kept.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (dist[i] > threshold) {
      out.removed.push_back(i);
    } else {
      kept.push_back(i);
    }
  }
  out.cloud = hgs::select(cloud, kept);
  return out;
}

std::pair<GaussianCloud, NormalizationTransform> normalize(const GaussianCloud& cloud,
                                                           int bit_depth) {
  check_lattice_depth(bit_depth);
  validate(cloud);
  const std::size_t n = cloud.size();
  std::array<double, 3> lo, hi;
  for (int a = 0; a < 3; ++a) lo[a] = hi[a] = cloud.positions[a];
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) {
      const double v = cloud.positions[i * 3 + a];
      lo[a] = std::min(lo[a], v);
      hi[a] = std::max(hi[a], v);
    }
  }
  NormalizationTransform t;
  t.bit_depth = bit_depth;
  double pc_max = 0.0;
  for (int a = 0; a < 3; ++a) {
    t.center[a] = 0.5 * (hi[a] + lo[a]);
    pc_max = std::max({pc_max, std::abs(hi[a] - t.center[a]), std::abs(lo[a] - t.center[a])});
  }
  if (pc_max == 0.0) throw DegenerateCloudError("all positions coincide");
  t.scale = static_cast<double>(lattice_bound(bit_depth)) / pc_max;

  GaussianCloud out = cloud;
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = t.apply({cloud.positions[i * 3], cloud.positions[i * 3 + 1],
                            cloud.positions[i * 3 + 2]});
    for (int a = 0; a < 3; ++a) out.positions[i * 3 + a] = static_cast<float>(p[a]);
  }
  // Sigma' = k^2 Sigma  <=>  every log-scale shifts by ln k.
  const double log_k = std::log(t.scale);
  for (float& s : out.scale) s = static_cast<float>(s + log_k);
  return {std::move(out), t};
}

GaussianCloud denormalize(const GaussianCloud& cloud, const NormalizationTransform& t) {
  GaussianCloud out = cloud;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = t.invert({cloud.positions[i * 3], cloud.positions[i * 3 + 1],
                             cloud.positions[i * 3 + 2]});
    for (int a = 0; a < 3; ++a) out.positions[i * 3 + a] = static_cast<float>(p[a]);
  }
  const double log_k = std::log(t.scale);
  for (float& s : out.scale) s = static_cast<float>(s - log_k);
  return out;
}

CameraList adjust_cameras(const CameraList& cameras, const NormalizationTransform& t) {
  CameraList out = cameras;
  for (Camera& cam : out) cam.center = t.apply(cam.center);
  return out;
}

std::vector<IVec3> round_positions(std::span<const float> positions, int bit_depth) {
  check_lattice_depth(bit_depth);
  const std::int64_t bound = lattice_bound(bit_depth);
  const std::size_t n = positions.size() / 3;
  std::vector<IVec3> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) {
      // std::lround rounds halves away from zero.
      const long v = std::lround(static_cast<double>(positions[i * 3 + a]));
      if (v < -bound || v > bound) {
        throw RangeError("rounded coordinate " + std::to_string(v) + " of primitive " +
                         std::to_string(i) + " leaves the " + std::to_string(bit_depth) +
                         "-bit lattice");
      }
      out[i][a] = static_cast<std::int32_t>(v);
    }
  }
  return out;
}

CodingMatrix decompose_positions(std::span<const IVec3> positions, int bit_depth) {
  check_lattice_depth(bit_depth);
  const std::int64_t bound = lattice_bound(bit_depth);
  CodingMatrix m;
  m.bit_depth = bit_depth;
  m.count = positions.size();
  const int width = bit_depth - 1;
  m.digits.assign(positions.size() * 3 * static_cast<std::size_t>(width), 0);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      const std::int64_t v = positions[i][a];
      if (v < -bound || v > bound) {
        throw RangeError("coordinate " + std::to_string(v) + " outside +/-" + std::to_string(bound));
      }
      const std::int8_t sign = v < 0 ? -1 : 1;
      const std::uint64_t mag = static_cast<std::uint64_t>(v < 0 ? -v : v);
      std::int8_t* row = m.digits.data() + (i * 3 + static_cast<std::size_t>(a)) * width;
      for (int j = 0; j < width; ++j) {
        if ((mag >> (width - 1 - j)) & 1u) row[j] = sign;
      }
    }
  }
  return m;
}

std::vector<IVec3> recompose_positions(const CodingMatrix& matrix) {
  const std::vector<std::int64_t> e = basis_vector(matrix.bit_depth);
  std::vector<IVec3> out(matrix.count);
  for (std::size_t i = 0; i < matrix.count; ++i) {
    for (int a = 0; a < 3; ++a) {
      const auto t = matrix.row(i, a);
      std::int64_t v = 0;
      for (std::size_t j = 0; j < e.size(); ++j) v += e[j] * t[j];
      out[i][a] = static_cast<std::int32_t>(v);
    }
  }
  return out;
}

LatticeCloud select(const LatticeCloud& cloud, std::span<const std::size_t> indices) {
  LatticeCloud out;
  out.voxels.reserve(indices.size());
  for (std::size_t i : indices) out.voxels.push_back(cloud.voxels[i]);
  out.attributes = hgs::select(cloud.attributes, indices);
  return out;
}

DedupResult deduplicate(const LatticeCloud& cloud) {
  const std::size_t n = cloud.size();
  std::vector<double> log_volume(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float* s = cloud.attributes.scale.data() + i * 3;
    log_volume[i] = static_cast<double>(s[0]) + static_cast<double>(s[1]) + static_cast<double>(s[2]);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (cloud.voxels[a] != cloud.voxels[b]) return cloud.voxels[a] < cloud.voxels[b];
    if (log_volume[a] != log_volume[b]) return log_volume[a] > log_volume[b];
    return a < b;
  });
  DedupResult out;
  for (std::size_t r = 0; r < n; ++r) {
    if (r == 0 || cloud.voxels[order[r]] != cloud.voxels[order[r - 1]]) out.kept.push_back(order[r]);
  }
  std::sort(out.kept.begin(), out.kept.end());
  out.cloud = select(cloud, out.kept);
  return out;
}

double default_importance(const GaussianCloud& cloud, std::size_t i) {
  const double opacity = 1.0 / (1.0 + std::exp(-static_cast<double>(cloud.opacity[i])));
  const float* s = cloud.scale.data() + i * 3;
  return opacity * std::exp(static_cast<double>(s[0]) + s[1] + s[2]);
}

PruneResult prune(const GaussianCloud& cloud, std::size_t count, const ImportanceFn& importance) {
  const std::size_t n = cloud.size();
  if (count >= n) {
    throw PruneAllError("cannot prune " + std::to_string(count) + " of " + std::to_string(n) +
                        " primitives");
  }
  std::vector<double> score(n);
  for (std::size_t i = 0; i < n; ++i) score[i] = importance(cloud, i);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
  PruneResult out;
  out.removed.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  std::vector<bool> gone(n, false);
  for (std::size_t i : out.removed) gone[i] = true;
  out.kept.reserve(n - count);
  for (std::size_t i = 0; i < n; ++i) {
    if (!gone[i]) out.kept.push_back(i);
  }
  return out;
}

std::size_t default_prune_count(std::size_t n) { return (n + 999) / 1000; }

PruneSchedule plan_schedule(const ScheduleInputs& in, std::int64_t n_top, std::int64_t n_target) {
  PruneSchedule s;
  s.total_epochs = in.total_epochs;
  s.densify_end = in.densify_end;
  s.prune_start = in.prune_start;
  s.unique_end = in.unique_end;
  s.prune_interval = in.prune_interval;
  s.top_quality = in.top_quality >= 0 ? in.top_quality : (in.densify_end + in.prune_start) / 2;

  if (!(s.densify_end < s.top_quality && s.top_quality < s.prune_start &&
        s.prune_start < s.unique_end && s.unique_end <= s.total_epochs)) {
    throw ScheduleError("epoch marks must satisfy T_d < T_top < T_p < T_u <= T");
  }
  if (s.prune_interval < 1) throw ScheduleError("pruning interval must be positive");
  if (n_target < 0 || n_target > n_top) {
    throw ScheduleError("target count " + std::to_string(n_target) + " outside [0, " +
                        std::to_string(n_top) + "]");
  }
  s.event_count = (s.total_epochs - s.prune_start) / s.prune_interval;
  if (s.event_count < 1) throw ScheduleError("no pruning event fits between T_p and T");

  s.total_pruned = n_top - n_target;
  s.per_event = (s.total_pruned + s.event_count - 1) / s.event_count;
  if (s.per_event > 0) {
    for (int j = 0; j < s.event_count; ++j) {
      s.event_epochs.push_back(s.prune_start + j * s.prune_interval);
    }
  }
  return s;
}

}  // namespace hgs::geometry
