#include "talkit/tensor.hpp"

#include <cmath>
#include <cstring>

#include "talkit/errors.hpp"

namespace talkit {

std::string to_string(const Shape& s) {
  if (s.rank == 1) return "(" + std::to_string(s.rows) + ",)";
  return "(" + std::to_string(s.rows) + ", " + std::to_string(s.cols) + ")";
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(shape), data_(static_cast<size_t>(shape.size()), fill) {
  if (shape.rank != 1 && shape.rank != 2)
    throw ShapeError("tensor rank must be 1 or 2, got " + std::to_string(shape.rank));
  if (shape.rows < 0 || shape.cols < 0) throw ShapeError("negative tensor extent");
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(shape), data_(std::move(values)) {
  if (static_cast<size_t>(shape.size()) != data_.size())
    throw ShapeError("tensor data size " + std::to_string(data_.size()) +
                     " does not match shape " + to_string(shape));
}

Tensor Tensor::vector(std::vector<double> values) {
  int len = static_cast<int>(values.size());
  return Tensor(Shape::vector(len), std::move(values));
}

Tensor Tensor::matrix(int rows, int cols, std::vector<double> values) {
  return Tensor(Shape::matrix(rows, cols), std::move(values));
}

Tensor Tensor::scalar(double value) { return Tensor(Shape::vector(1), {value}); }

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

bool Tensor::same_values(const Tensor& other) const {
  if (!(shape_ == other.shape_)) return false;
  if (data_.empty()) return true;
  return std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(double)) == 0;
}

}  // namespace talkit
