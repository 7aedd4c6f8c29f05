#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ladder {

std::string shape_str(const std::vector<int64_t>& shape);
int64_t shape_numel(const std::vector<int64_t>& shape);

// Dense row-major float32 array with explicit shape. The only numeric
// container in the library; data length always equals the shape product.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<int64_t> shape, std::vector<float> data);

  static Tensor zeros(std::vector<int64_t> shape);
  static Tensor full(std::vector<int64_t> shape, float value);

  const std::vector<int64_t>& shape() const { return shape_; }
  size_t ndim() const { return shape_.size(); }
  int64_t dim(size_t i) const;
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  // 2-D view: trailing dimension as columns, leading dimensions flattened
  // into rows. Kernels that are row-wise use this view.
  int64_t cols() const;
  int64_t rows() const;

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  float& at(int64_t r, int64_t c) { return data_[static_cast<size_t>(r * cols() + c)]; }
  float at(int64_t r, int64_t c) const { return data_[static_cast<size_t>(r * cols() + c)]; }
  const float* row(int64_t r) const { return data_.data() + r * cols(); }
  float* row(int64_t r) { return data_.data() + r * cols(); }

  std::vector<float>& storage() { return data_; }
  const std::vector<float>& storage() const { return data_; }

  Tensor reshape(std::vector<int64_t> new_shape) const;
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool bit_equal(const Tensor& o) const;
  bool all_finite() const;
  std::string shape_str() const { return ladder::shape_str(shape_); }

 private:
  std::vector<int64_t> shape_;
  std::vector<float> data_;
};

// Largest elementwise |a-b|; throws ShapeError on shape mismatch.
float max_abs_diff(const Tensor& a, const Tensor& b);
double l2_norm(const Tensor& t);

}  // namespace ladder
