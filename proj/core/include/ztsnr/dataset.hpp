#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ztsnr/rng.hpp"
#include "ztsnr/tensor.hpp"

namespace ztsnr {

// Per-sample mean-brightness distribution.
struct BrightnessDist {
  enum class Tag { Uniform, Bimodal, Constant };
  Tag tag = Tag::Bimodal;
  double lo = -0.8, hi = 0.8;  // Uniform
  double b1 = -0.8, b2 = 0.8, p = 0.5;  // Bimodal: P(mode b2) = p
  double b = 0.0;  // Constant

  static BrightnessDist uniform(double lo, double hi);
  static BrightnessDist bimodal(double b1, double b2, double p = 0.5);
  static BrightnessDist constant(double b);
};

// Synthetic data whose dominant low-frequency signal is the per-sample
// mean. Labels identify the brightness target the sample was drawn
// around: the mode index for Bimodal, the sub-interval for Uniform.
struct DatasetSpec {
  std::size_t dim = 64;
  BrightnessDist brightness;
  double texture_std = 0.1;  // iid Gaussian structure, clipped at 4 sigma
  int n_classes = 2;
  std::uint64_t seed = 1;
};

struct Dataset {
  Tensor samples;           // [n, dim], values in [-1, 1]
  std::vector<int> labels;  // [n], in [0, n_classes)
};

Dataset generate(const DatasetSpec& spec, std::size_t n, Rng& rng);

struct BrightnessStats {
  std::vector<double> per_sample_means;
  double mean = 0.0;
  double std = 0.0;  // population std of per-sample means
  std::array<std::size_t, 41> histogram{};  // fixed bins over [-1, 1]
};

BrightnessStats brightness_stats(const Tensor& samples);

// 8-bit binary PGM, value = round((x+1)/2 * 255) clamped to [0, 255].
void write_pgm(const std::string& path, const double* values, std::size_t width,
               std::size_t height);

}  // namespace ztsnr
