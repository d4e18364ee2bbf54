#pragma once

#include <cstddef>
#include <vector>

namespace ztsnr {

// Flat double-precision array plus shape. Rank-1 tensors are treated as
// a single sample; for rank >= 2 the leading axis is the batch axis.
struct Tensor {
  std::vector<double> data;
  std::vector<std::size_t> shape;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape_in);  // zero-filled
  Tensor(std::vector<std::size_t> shape_in, std::vector<double> data_in);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }

  std::size_t batch() const;        // leading extent for rank >= 2, else 1
  std::size_t sample_size() const;  // elements per batch entry

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  // Pointer to the start of batch entry b.
  const double* sample(std::size_t b) const;
  double* sample(std::size_t b);
};

// Throws std::invalid_argument when shapes differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

// a*x + b*y element-wise.
Tensor lincomb(double a, const Tensor& x, double b, const Tensor& y);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(double s, const Tensor& a);

// Mean squared difference over all elements.
double mean_squared_error(const Tensor& a, const Tensor& b);

// Population standard deviation (mean subtracted) of batch entry b.
double sample_std(const Tensor& t, std::size_t b);

// Mean of batch entry b.
double sample_mean(const Tensor& t, std::size_t b);

}  // namespace ztsnr
