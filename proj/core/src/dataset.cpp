#include "ztsnr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ztsnr {

namespace {

void require_brightness_level(double b, const char* what) {
  if (b < -1.0 || b > 1.0) {
    throw std::invalid_argument(std::string("dataset: ") + what +
                                " must lie in [-1, 1]");
  }
}

void validate(const DatasetSpec& spec) {
  if (spec.dim == 0) throw std::invalid_argument("dataset: dim must be positive");
  if (spec.n_classes < 1) throw std::invalid_argument("dataset: n_classes must be >= 1");
  if (spec.texture_std < 0.0) {
    throw std::invalid_argument("dataset: texture_std must be >= 0");
  }
  const BrightnessDist& d = spec.brightness;
  switch (d.tag) {
    case BrightnessDist::Tag::Uniform:
      require_brightness_level(d.lo, "uniform lo");
      require_brightness_level(d.hi, "uniform hi");
      if (!(d.lo < d.hi)) throw std::invalid_argument("dataset: uniform needs lo < hi");
      break;
    case BrightnessDist::Tag::Bimodal:
      require_brightness_level(d.b1, "bimodal b1");
      require_brightness_level(d.b2, "bimodal b2");
      if (d.p < 0.0 || d.p > 1.0) {
        throw std::invalid_argument("dataset: bimodal p must lie in [0, 1]");
      }
      break;
    case BrightnessDist::Tag::Constant:
      require_brightness_level(d.b, "constant b");
      break;
  }
}

}  // namespace

BrightnessDist BrightnessDist::uniform(double lo, double hi) {
  BrightnessDist d;
  d.tag = Tag::Uniform;
  d.lo = lo;
  d.hi = hi;
  return d;
}

BrightnessDist BrightnessDist::bimodal(double b1, double b2, double p) {
  BrightnessDist d;
  d.tag = Tag::Bimodal;
  d.b1 = b1;
  d.b2 = b2;
  d.p = p;
  return d;
}

BrightnessDist BrightnessDist::constant(double b) {
  BrightnessDist d;
  d.tag = Tag::Constant;
  d.b = b;
  return d;
}

Dataset generate(const DatasetSpec& spec, std::size_t n, Rng& rng) {
  validate(spec);
  if (n < 1) throw std::invalid_argument("dataset: n must be >= 1");

  Dataset out;
  out.samples = Tensor({n, spec.dim});
  out.labels.resize(n);

  const BrightnessDist& dist = spec.brightness;
  for (std::size_t i = 0; i < n; ++i) {
    double b = 0.0;
    int label = 0;
    switch (dist.tag) {
      case BrightnessDist::Tag::Constant:
        b = dist.b;
        label = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.n_classes)));
        break;
      case BrightnessDist::Tag::Bimodal: {
        const bool second = rng.uniform() < dist.p;
        b = second ? dist.b2 : dist.b1;
        label = std::min(second ? 1 : 0, spec.n_classes - 1);
        break;
      }
      case BrightnessDist::Tag::Uniform: {
        label = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.n_classes)));
        const double width = (dist.hi - dist.lo) / spec.n_classes;
        b = dist.lo + (label + rng.uniform()) * width;
        break;
      }
    }
    out.labels[i] = label;
    double* row = out.samples.sample(i);
    for (std::size_t j = 0; j < spec.dim; ++j) {
      // Texture is clipped at 4 sigma so that |b| + 4*texture_std <= 1
      // guarantees the [-1, 1] clip below never activates.
      const double tex = std::clamp(rng.normal(), -4.0, 4.0) * spec.texture_std;
      row[j] = std::clamp(b + tex, -1.0, 1.0);
    }
  }
  return out;
}

BrightnessStats brightness_stats(const Tensor& samples) {
  if (samples.size() == 0) {
    throw std::invalid_argument("brightness_stats: empty tensor");
  }
  BrightnessStats st;
  const std::size_t n = samples.batch();
  st.per_sample_means.resize(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    st.per_sample_means[i] = sample_mean(samples, i);
    acc += st.per_sample_means[i];
  }
  st.mean = acc / static_cast<double>(n);
  double var = 0.0;
  for (double m : st.per_sample_means) {
    const double d = m - st.mean;
    var += d * d;
  }
  st.std = std::sqrt(var / static_cast<double>(n));

  const double bins = static_cast<double>(st.histogram.size());
  for (double m : st.per_sample_means) {
    const auto idx = static_cast<long>(std::floor((m + 1.0) / 2.0 * bins));
    const long clamped = std::clamp(idx, 0L, static_cast<long>(st.histogram.size()) - 1);
    ++st.histogram[static_cast<std::size_t>(clamped)];
  }
  return st;
}

void write_pgm(const std::string& path, const double* values, std::size_t width,
               std::size_t height) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("write_pgm: cannot open " + path);
  os << "P5\n" << width << " " << height << "\n255\n";
  for (std::size_t i = 0; i < width * height; ++i) {
    const double v = (values[i] + 1.0) / 2.0 * 255.0;
    const long byte = std::clamp(std::lround(v), 0L, 255L);
    os.put(static_cast<char>(static_cast<unsigned char>(byte)));
  }
  if (!os) throw std::runtime_error("write_pgm: write failed: " + path);
}

}  // namespace ztsnr
