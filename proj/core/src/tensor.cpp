#include "ztsnr/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ztsnr {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw std::invalid_argument("Tensor: zero extent in shape");
    n *= d;
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape_in)
    : data(shape_product(shape_in), 0.0), shape(std::move(shape_in)) {}

Tensor::Tensor(std::vector<std::size_t> shape_in, std::vector<double> data_in)
    : data(std::move(data_in)), shape(std::move(shape_in)) {
  if (shape_product(shape) != data.size()) {
    throw std::invalid_argument("Tensor: shape does not match data length");
  }
}

std::size_t Tensor::batch() const { return rank() >= 2 ? shape[0] : 1; }

std::size_t Tensor::sample_size() const {
  const std::size_t b = batch();
  return b == 0 ? 0 : size() / b;
}

const double* Tensor::sample(std::size_t b) const {
  return data.data() + b * sample_size();
}

double* Tensor::sample(std::size_t b) { return data.data() + b * sample_size(); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

Tensor lincomb(double a, const Tensor& x, double b, const Tensor& y) {
  require_same_shape(x, y, "lincomb");
  Tensor out(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = a * x.data[i] + b * y.data[i];
  return out;
}

Tensor operator+(const Tensor& a, const Tensor& b) { return lincomb(1.0, a, 1.0, b); }

Tensor operator-(const Tensor& a, const Tensor& b) { return lincomb(1.0, a, -1.0, b); }

Tensor operator*(double s, const Tensor& a) {
  Tensor out(a.shape);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = s * a.data[i];
  return out;
}

double mean_squared_error(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mean_squared_error");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double sample_mean(const Tensor& t, std::size_t b) {
  const std::size_t n = t.sample_size();
  const double* p = t.sample(b);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += p[i];
  return acc / static_cast<double>(n);
}

double sample_std(const Tensor& t, std::size_t b) {
  const std::size_t n = t.sample_size();
  const double* p = t.sample(b);
  const double mu = sample_mean(t, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = p[i] - mu;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(n));
}

}  // namespace ztsnr
