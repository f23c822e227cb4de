#include "hgs/ratecontrol.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hgs/errors.hpp"

namespace hgs::rate {
namespace {

void check_model(const RateModel& m) {
  if (m.bd_p < 1 || m.bd_c < 1 || m.bd_o < 1 || m.bd_s < 1 || m.bd_r < 1) {
    throw ConfigError("every bit depth must be at least 1");
  }
  if (m.k_c < 0 || m.k_r < 0) throw ConfigError("latent counts must be non-negative");
  if (!(m.lossless_ratio > 0.0) || !std::isfinite(m.lossless_ratio)) {
    throw ConfigError("lossless ratio L must be positive");
  }
}

void check_budget(double budget) {
  if (!(budget > 0.0) || !std::isfinite(budget)) throw ConfigError("rate budget must be positive");
}

RateModel reduced(const RateModel& m, int delta) {
  RateModel out = m;
  out.bd_c = std::max(1, m.bd_c - delta);
  out.bd_o = std::max(1, m.bd_o - delta);
  out.bd_s = std::max(1, m.bd_s - delta);
  out.bd_r = std::max(1, m.bd_r - delta);
  return out;
}

std::string mib(double bytes) {
  std::ostringstream os;
  os.precision(4);
  os << bytes / (1024.0 * 1024.0) << " MiB";
  return os.str();
}

}  // namespace

std::int64_t bits_per_primitive(const RateModel& m) {
  return 3 * (std::int64_t{m.bd_p} + m.bd_s) + std::int64_t{m.k_c} * m.bd_c + m.bd_o +
         std::int64_t{m.k_r} * m.bd_r;
}

double estimate_size(const RateModel& m, std::int64_t n) {
  return static_cast<double>(n) * static_cast<double>(bits_per_primitive(m)) /
         (8.0 * m.lossless_ratio);
}

Method1Plan plan_method1(double budget, const RateModel& model, std::int64_t n_top,
                         const geometry::ScheduleInputs& inputs) {
  check_budget(budget);
  check_model(model);
  if (n_top < 0) throw ConfigError("primitive count must be non-negative");
  const double p_bit = static_cast<double>(bits_per_primitive(model));
  auto n = static_cast<std::int64_t>(std::floor(budget * model.lossless_ratio * 8.0 / p_bit));
  // Settle floating-point edge cases against the size model itself.
  while (estimate_size(model, n + 1) <= budget) ++n;
  while (n > 0 && estimate_size(model, n) > budget) --n;
  if (n < 1) {
    throw InfeasibleRateError("budget of " + std::to_string(budget) +
                              " B cannot hold a single primitive at " +
                              std::to_string(bits_per_primitive(model)) + " bits");
  }
  Method1Plan plan;
  plan.n_target = std::min(n, n_top);
  plan.schedule = geometry::plan_schedule(inputs, n_top, plan.n_target);
  return plan;
}

Method2Plan plan_method2(double budget, const RateModel& model, std::int64_t n) {
  check_budget(budget);
  check_model(model);
  if (n < 0) throw ConfigError("primitive count must be non-negative");

  const double position_floor =
      static_cast<double>(n) * 3.0 * model.bd_p / (8.0 * model.lossless_ratio);
  if (position_floor > budget) {
    throw InfeasibleRateError("positions alone need " + mib(position_floor) + ", above the " +
                              mib(budget) + " budget; reduce the primitive count first");
  }

  Method2Plan plan;
  plan.bits_per_step = model.k_c + 1 + 3 + model.k_r;
  const int max_delta = std::max({model.bd_c, model.bd_o, model.bd_s, model.bd_r}) - 1;
  for (int delta = 0; delta <= max_delta; ++delta) {
    const RateModel m = reduced(model, delta);
    if (delta > 0) plan.steps.push_back(m);
    if (estimate_size(m, n) <= budget) {
      plan.delta = delta;
      plan.model = m;
      plan.estimated_bytes = estimate_size(m, n);
      return plan;
    }
  }
  const RateModel floor_model = reduced(model, max_delta);
  throw InfeasibleRateError("even with every attribute at 1 bit the estimate is " +
                            mib(estimate_size(floor_model, n)) + ", above the " + mib(budget) +
                            " budget; reduce the primitive count first");
}

}  // namespace hgs::rate
