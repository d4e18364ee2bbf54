#pragma once

#include <cstdint>
#include <random>

namespace ztsnr {

// Deterministic random source. The generator algorithm is pinned to
// std::mt19937_64 and all distributions are implemented here on top of
// the raw 64-bit stream (std::normal_distribution and friends are not
// bit-reproducible across standard library implementations).
//
// A fixed seed therefore yields an identical stream on every run.
// fork(stream) derives an independent substream as a pure function of
// (seed, stream), so batch lanes can own disjoint generators.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double uniform();

  // Uniform on [0, n). Uses modulo reduction; the bias is below 1e-15
  // for any n used in this project.
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal via Box-Muller; the second variate of each pair is
  // cached so draws come in a fixed order.
  double normal();

  // Independent substream derived from this generator's seed. Does not
  // advance or depend on this generator's state.
  Rng fork(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ztsnr
