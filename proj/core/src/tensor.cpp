#include "ladder/tensor.hpp"

#include <cmath>
#include <sstream>

#include "ladder/errors.hpp"

namespace ladder {

std::string shape_str(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

int64_t shape_numel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != static_cast<int64_t>(data_.size())) {
    throw ShapeError("data length " + std::to_string(data_.size()) +
                     " does not match shape " + ladder::shape_str(shape_));
  }
}

Tensor Tensor::zeros(std::vector<int64_t> shape) {
  int64_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<float>(static_cast<size_t>(n), 0.0f));
}

Tensor Tensor::full(std::vector<int64_t> shape, float value) {
  int64_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<float>(static_cast<size_t>(n), value));
}

int64_t Tensor::dim(size_t i) const {
  if (i >= shape_.size()) {
    throw ShapeError("dim index " + std::to_string(i) + " out of range for " + ladder::shape_str(shape_));
  }
  return shape_[i];
}

int64_t Tensor::cols() const {
  if (shape_.empty()) throw ShapeError("cols() on rank-0 tensor");
  return shape_.back();
}

int64_t Tensor::rows() const { return cols() == 0 ? 0 : numel() / cols(); }

Tensor Tensor::reshape(std::vector<int64_t> new_shape) const {
  if (shape_numel(new_shape) != numel()) {
    throw ShapeError("cannot reshape " + ladder::shape_str(shape_) + " to " + ladder::shape_str(new_shape));
  }
  return Tensor(std::move(new_shape), data_);
}

bool Tensor::bit_equal(const Tensor& o) const {
  return shape_ == o.shape_ && data_ == o.data_;
}

bool Tensor::all_finite() const {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("max_abs_diff shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
  }
  float m = 0.0f;
  for (int64_t i = 0; i < a.numel(); ++i) {
    float d = std::fabs(a.data()[i] - b.data()[i]);
    if (d > m) m = d;
  }
  return m;
}

double l2_norm(const Tensor& t) {
  double s = 0.0;
  for (int64_t i = 0; i < t.numel(); ++i) {
    double v = t.data()[i];
    s += v * v;
  }
  return std::sqrt(s);
}

}  // namespace ladder
