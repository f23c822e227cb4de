#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hgs/ply_io.hpp"

namespace hgs {

using IVec3 = std::array<std::int32_t, 3>;

/// Primitives snapped to the integer lattice. `attributes.positions` keeps the
/// scaled, unrounded coordinates; `voxels` holds the rounded ones.
struct LatticeCloud {
  std::vector<IVec3> voxels;
  GaussianCloud attributes;

  std::size_t size() const { return voxels.size(); }
};

namespace geometry {

/// Maps scene units onto the signed lattice [-(2^(N-1)-1), 2^(N-1)-1]:
/// p' = k * (p - center).
struct NormalizationTransform {
  std::array<double, 3> center{};
  double scale = 1.0;
  int bit_depth = 16;

  std::array<double, 3> apply(const std::array<double, 3>& p) const;
  std::array<double, 3> invert(const std::array<double, 3>& p) const;
  bool operator==(const NormalizationTransform&) const = default;
};

/// Ternary coding vectors against the basis [2^(N-2), ..., 2, 1].
struct CodingMatrix {
  int bit_depth = 0;
  std::size_t count = 0;
  std::vector<std::int8_t> digits;  // count x 3 x (N-1)

  int digits_per_coordinate() const { return bit_depth - 1; }
  std::span<const std::int8_t> row(std::size_t i, int axis) const;
};

std::vector<std::int64_t> basis_vector(int bit_depth);

struct PruneSchedule {
  int total_epochs = 0;           // T
  int densify_end = 0;            // T_d
  int top_quality = 0;            // T_top
  int prune_start = 0;            // T_p
  int unique_end = 0;             // T_u
  int prune_interval = 0;         // I_p
  int event_count = 0;            // F_p
  std::int64_t per_event = 0;     // N'
  std::int64_t total_pruned = 0;  // n_p = n_top - n_target
  std::vector<int> event_epochs;
};

struct ScheduleInputs {
  int total_epochs = 70000;
  int densify_end = 15000;
  int prune_start = 36000;
  int unique_end = 66000;
  int prune_interval = 2500;
  int top_quality = -1;  // < 0 picks the midpoint of T_d and T_p
};

struct OutlierResult {
  GaussianCloud cloud;
  std::vector<std::size_t> removed;
};

/// Statistical outlier removal: a point is dropped when its mean distance to
/// its `nb_neighbors` nearest neighbours exceeds mean + std_ratio * std over
/// all points (sample standard deviation).
OutlierResult remove_outliers(const GaussianCloud& cloud, int nb_neighbors, double std_ratio);

/// Per-point mean distance to the k nearest other points.
std::vector<double> mean_neighbor_distances(std::span<const float> positions, int nb_neighbors);

/// Centers the bounding box on the origin and rescales so the largest absolute
/// coordinate becomes 2^(N-1)-1. Log-scales shift by ln(k).
std::pair<GaussianCloud, NormalizationTransform> normalize(const GaussianCloud& cloud,
                                                           int bit_depth);

/// Undoes `normalize` on positions and log-scales.
GaussianCloud denormalize(const GaussianCloud& cloud, const NormalizationTransform& t);

CameraList adjust_cameras(const CameraList& cameras, const NormalizationTransform& t);

/// Round half away from zero, checked against the lattice bounds.
std::vector<IVec3> round_positions(std::span<const float> positions, int bit_depth);

CodingMatrix decompose_positions(std::span<const IVec3> positions, int bit_depth);
std::vector<IVec3> recompose_positions(const CodingMatrix& matrix);

struct DedupResult {
  LatticeCloud cloud;
  std::vector<std::size_t> kept;  // original index of each surviving primitive
};

/// One primitive per voxel: the one with the largest exp(s_x) exp(s_y) exp(s_z),
/// lowest original index on ties. Output keeps original relative order.
DedupResult deduplicate(const LatticeCloud& cloud);

using ImportanceFn = std::function<double(const GaussianCloud&, std::size_t)>;

/// sigmoid(opacity) * exp(s_x + s_y + s_z)
double default_importance(const GaussianCloud& cloud, std::size_t i);

struct PruneResult {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> removed;
};

/// Removes the `count` least important primitives; on equal scores the lower
/// index goes first.
PruneResult prune(const GaussianCloud& cloud, std::size_t count,
                  const ImportanceFn& importance = default_importance);

/// ceil(0.001 * n)
std::size_t default_prune_count(std::size_t n);

PruneSchedule plan_schedule(const ScheduleInputs& inputs, std::int64_t n_top,
                            std::int64_t n_target);

LatticeCloud select(const LatticeCloud& cloud, std::span<const std::size_t> indices);

}  // namespace geometry
}  // namespace hgs
