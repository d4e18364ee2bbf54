#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ztsnr {

enum class TimestepStrategy { Leading, Linspace, Trailing };

std::string strategy_name(TimestepStrategy strategy);
TimestepStrategy parse_strategy(std::string_view name);

// Ascending subsequence of train timesteps visited by the sampler.
// Trailing and Linspace plans end with T; Leading and Linspace plans
// start with 1 (Linspace needs S >= 2 for both to hold at once).
struct TimestepPlan {
  std::vector<int> steps;
  TimestepStrategy strategy = TimestepStrategy::Trailing;
  int T = 0;
  int S = 0;
};

// Selects S of T timesteps:
//   Leading   1 + k*floor(T/S)            for k = 0..S-1
//   Linspace  round(1 + k*(T-1)/(S-1))    for k = 0..S-1
//   Trailing  round(m*T/S)                for m = 1..S
// Rounding is half-away-from-zero on exact rational values, so the
// published sequences are reproduced independent of float accumulation.
TimestepPlan select_timesteps(TimestepStrategy strategy, int T, int S);

}  // namespace ztsnr
