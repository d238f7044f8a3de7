#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace gannoise {

// Error surface shared by all modules.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotPsdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmbedderQualityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

/// Dense n-dimensional array of doubles in row-major order.
class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.empty()) throw ShapeError("tensor shape must have at least one extent");
    for (std::size_t d : shape_)
      if (d == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape_));
    if (shape_numel(shape_) != data_.size())
      throw ShapeError("shape " + shape_str(shape_) + " does not match data length " +
                       std::to_string(data_.size()));
  }

  static Tensor zeros(Shape shape) {
    std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
  }

  static Tensor full(Shape shape, double v) {
    std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, v));
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
    return Tensor({rows, cols}, std::move(data));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  std::size_t rows() const { return shape_.at(0); }
  std::size_t cols() const {
    if (shape_.size() != 2) throw ShapeError("cols() needs a rank-2 tensor, got " + shape_str(shape_));
    return shape_[1];
  }

  bool is_scalar() const { return data_.size() == 1; }

  double scalar_value() const {
    if (!is_scalar()) throw ShapeError("expected scalar, got shape " + shape_str(shape_));
    return data_[0];
  }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace gannoise
