#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace salreg {

/// Dense row-major tensor of doubles. Activations are rank 4 (N, C, H, W).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor nchw(std::size_t n, std::size_t c, std::size_t h, std::size_t w, double fill = 0.0) {
    return Tensor({n, c, h, w}, fill);
  }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  double& operator[](std::size_t i) noexcept { return data_[i]; }

  /// Element (n, c, y, x) of a rank-4 tensor.
  double& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) noexcept {
    return data_[((n * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }
  double at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return data_[((n * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }

  bool all_finite() const noexcept;
  void fill(double v) noexcept;

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Named parameter collection; std::map keeps iteration (and checkpoint) order stable.
using TensorMap = std::map<std::string, Tensor>;

}  // namespace salreg
