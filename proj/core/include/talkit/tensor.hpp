#pragma once

#include <string>
#include <vector>

namespace talkit {

// Rank-1 (length,) or rank-2 (rows, cols) shape. Rank-2 data is row-major.
struct Shape {
  int rank = 1;
  int rows = 0;
  int cols = 1;

  static Shape vector(int len) { return Shape{1, len, 1}; }
  static Shape matrix(int rows, int cols) { return Shape{2, rows, cols}; }

  int size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

// Dense 64-bit real array. The requires_grad flag only matters when a tensor
// is handed to Graph::leaf.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(int rows, int cols, std::vector<double> values);
  static Tensor scalar(double value);

  const Shape& shape() const { return shape_; }
  int size() const { return shape_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

  double& at(int i) { return data_[static_cast<size_t>(i)]; }
  double at(int i) const { return data_[static_cast<size_t>(i)]; }
  double& at(int r, int c) { return data_[static_cast<size_t>(r) * shape_.cols + c]; }
  double at(int r, int c) const { return data_[static_cast<size_t>(r) * shape_.cols + c]; }

  bool requires_grad() const { return requires_grad_; }
  Tensor& set_requires_grad(bool v) {
    requires_grad_ = v;
    return *this;
  }

  bool all_finite() const;
  bool same_values(const Tensor& other) const;  // shape and bitwise-equal data

 private:
  Shape shape_{1, 0, 1};
  std::vector<double> data_;
  bool requires_grad_ = false;
};

}  // namespace talkit
