#include "ztsnr/timesteps.hpp"

#include <stdexcept>

namespace ztsnr {

namespace {

// round(num/den) for num >= 0, den > 0, ties away from zero.
long long round_div(long long num, long long den) {
  return (2 * num + den) / (2 * den);
}

}  // namespace

std::string strategy_name(TimestepStrategy strategy) {
  switch (strategy) {
    case TimestepStrategy::Leading: return "leading";
    case TimestepStrategy::Linspace: return "linspace";
    case TimestepStrategy::Trailing: return "trailing";
  }
  return "unknown";
}

TimestepStrategy parse_strategy(std::string_view name) {
  if (name == "leading") return TimestepStrategy::Leading;
  if (name == "linspace") return TimestepStrategy::Linspace;
  if (name == "trailing") return TimestepStrategy::Trailing;
  throw std::invalid_argument("unknown timestep strategy: " + std::string(name));
}

TimestepPlan select_timesteps(TimestepStrategy strategy, int T, int S) {
  if (T < 1) throw std::invalid_argument("select_timesteps: T must be positive");
  if (S < 1 || S > T) {
    throw std::invalid_argument("select_timesteps: S must satisfy 1 <= S <= T");
  }

  TimestepPlan plan;
  plan.strategy = strategy;
  plan.T = T;
  plan.S = S;
  plan.steps.reserve(static_cast<std::size_t>(S));

  switch (strategy) {
    case TimestepStrategy::Leading: {
      const int stride = T / S;
      for (int k = 0; k < S; ++k) plan.steps.push_back(1 + k * stride);
      break;
    }
    case TimestepStrategy::Linspace: {
      if (S == 1) {
        plan.steps.push_back(1);
        break;
      }
      for (int k = 0; k < S; ++k) {
        plan.steps.push_back(1 + static_cast<int>(round_div(
                                     static_cast<long long>(k) * (T - 1), S - 1)));
      }
      break;
    }
    case TimestepStrategy::Trailing: {
      for (int m = 1; m <= S; ++m) {
        plan.steps.push_back(static_cast<int>(round_div(
            static_cast<long long>(m) * T, S)));
      }
      break;
    }
  }
  return plan;
}

}  // namespace ztsnr
