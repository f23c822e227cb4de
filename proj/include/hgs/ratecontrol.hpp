#pragma once

#include <cstdint>
#include <vector>

#include "hgs/geometry.hpp"

namespace hgs::rate {

inline constexpr double kDefaultLosslessRatio = 1.3;

struct RateModel {
  int bd_p = 16;
  int bd_c = 16;
  int bd_o = 16;
  int bd_s = 16;
  int bd_r = 16;
  int k_c = 3;
  int k_r = 2;
  double lossless_ratio = kDefaultLosslessRatio;  // L
};

/// 3 (BD_p + BD_s) + k_c BD_c + BD_o + k_r BD_r
std::int64_t bits_per_primitive(const RateModel& model);

/// n * P_bit / (8 L) bytes.
double estimate_size(const RateModel& model, std::int64_t n);

struct Method1Plan {
  std::int64_t n_target = 0;
  geometry::PruneSchedule schedule;
};

/// Largest n with estimate_size(n) <= budget, capped at n_top.
Method1Plan plan_method1(double budget_bytes, const RateModel& model, std::int64_t n_top,
                         const geometry::ScheduleInputs& inputs = {});

struct Method2Plan {
  int delta = 0;
  int bits_per_step = 0;             // k_c + 1 + 3 + k_r
  RateModel model;                   // attribute depths after the reduction
  std::vector<RateModel> steps;      // one entry per unit of delta, in order
  double estimated_bytes = 0.0;
};

/// Smallest uniform attribute bit-depth reduction that meets the budget.
/// Depths bottom out at 1; BD_p never changes.
Method2Plan plan_method2(double budget_bytes, const RateModel& model, std::int64_t n);

}  // namespace hgs::rate
