#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <set>
#include <vector>

#include "ztsnr/timesteps.hpp"

using namespace ztsnr;

TEST_CASE("published rows, T=1000 S=10") {
  CHECK(select_timesteps(TimestepStrategy::Leading, 1000, 10).steps ==
        std::vector<int>{1, 101, 201, 301, 401, 501, 601, 701, 801, 901});
  CHECK(select_timesteps(TimestepStrategy::Linspace, 1000, 10).steps ==
        std::vector<int>{1, 112, 223, 334, 445, 556, 667, 778, 889, 1000});
  CHECK(select_timesteps(TimestepStrategy::Trailing, 1000, 10).steps ==
        std::vector<int>{100, 200, 300, 400, 500, 600, 700, 800, 900, 1000});
}

TEST_CASE("single-step plans") {
  CHECK(select_timesteps(TimestepStrategy::Trailing, 1000, 1).steps ==
        std::vector<int>{1000});
  CHECK(select_timesteps(TimestepStrategy::Leading, 1000, 1).steps ==
        std::vector<int>{1});
  CHECK(select_timesteps(TimestepStrategy::Linspace, 1000, 1).steps ==
        std::vector<int>{1});
}

TEST_CASE("linspace with S = T is the identity discretization") {
  for (const int T : {7, 50, 1000}) {
    const TimestepPlan plan = select_timesteps(TimestepStrategy::Linspace, T, T);
    REQUIRE(static_cast<int>(plan.steps.size()) == T);
    for (int k = 0; k < T; ++k) CHECK(plan.steps[k] == k + 1);
  }
}

TEST_CASE("trailing matches a float transcription of the published formula") {
  // round(flip(arange(T, 0, -T/S))) with double arithmetic.
  for (const int S : {5, 10, 25, 50}) {
    std::vector<int> brute;
    const double step = 1000.0 / S;
    for (double v = 1000.0; v > 0.0; v -= step) brute.push_back(static_cast<int>(std::llround(v)));
    std::reverse(brute.begin(), brute.end());
    CHECK(select_timesteps(TimestepStrategy::Trailing, 1000, S).steps == brute);
  }
}

TEST_CASE("plan shape invariants") {
  const int T = 1000;
  for (const auto strategy : {TimestepStrategy::Leading, TimestepStrategy::Linspace,
                              TimestepStrategy::Trailing}) {
    for (const int S : {1, 2, 3, 7, 10, 33, 100, 999, 1000}) {
      CAPTURE(strategy_name(strategy));
      CAPTURE(S);
      const TimestepPlan plan = select_timesteps(strategy, T, S);
      REQUIRE(static_cast<int>(plan.steps.size()) == S);
      std::set<int> unique(plan.steps.begin(), plan.steps.end());
      CHECK(static_cast<int>(unique.size()) == S);  // distinct
      CHECK(plan.steps.front() >= 1);
      CHECK(plan.steps.back() <= T);
      for (std::size_t i = 1; i < plan.steps.size(); ++i) {
        CHECK(plan.steps[i] > plan.steps[i - 1]);
      }
    }
  }
}

TEST_CASE("endpoint conventions") {
  // Trailing always ends with T.
  for (const int S : {1, 4, 10, 640, 1000}) {
    CHECK(select_timesteps(TimestepStrategy::Trailing, 1000, S).steps.back() == 1000);
  }
  // Leading starts at 1 and misses T whenever S < T divides T.
  for (const int S : {2, 4, 5, 8, 10, 500}) {
    const TimestepPlan plan = select_timesteps(TimestepStrategy::Leading, 1000, S);
    CHECK(plan.steps.front() == 1);
    CHECK(plan.steps.back() < 1000);
  }
  // Linspace spans both endpoints for S >= 2.
  for (const int S : {2, 3, 10, 640}) {
    const TimestepPlan plan = select_timesteps(TimestepStrategy::Linspace, 1000, S);
    CHECK(plan.steps.front() == 1);
    CHECK(plan.steps.back() == 1000);
  }
}

TEST_CASE("argument validation") {
  CHECK_THROWS_AS(select_timesteps(TimestepStrategy::Leading, 1000, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(select_timesteps(TimestepStrategy::Leading, 1000, 1001),
                  std::invalid_argument);
  CHECK_THROWS_AS(select_timesteps(TimestepStrategy::Leading, 0, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_strategy("middle"), std::invalid_argument);
  CHECK(parse_strategy("trailing") == TimestepStrategy::Trailing);
}
