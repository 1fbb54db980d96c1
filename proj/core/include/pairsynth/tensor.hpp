#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace pairsynth {

// Dense row-major double tensor. Copies are shallow (storage is shared);
// treat a tensor as immutable once it has been handed to the autodiff graph.
// Use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape);
  Tensor(std::vector<int64_t> shape, std::vector<double> data);

  static Tensor zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int64_t> shape, double v);
  static Tensor scalar(double v) { return full({1}, v); }

  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t dim(size_t i) const { return shape_[i]; }
  size_t rank() const { return shape_.size(); }
  int64_t numel() const { return numel_; }
  bool defined() const { return data_ != nullptr; }

  double* data() { return data_->data(); }
  const double* data() const { return data_->data(); }
  double& operator[](int64_t i) { return (*data_)[i]; }
  double operator[](int64_t i) const { return (*data_)[i]; }

  // Value of a one-element tensor.
  double item() const;

  Tensor clone() const;
  Tensor reshaped(std::vector<int64_t> shape) const;  // shares storage

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  std::string shape_str() const;  // e.g. "(8, 1, 64, 64)"

 private:
  std::vector<int64_t> shape_;
  int64_t numel_ = 0;
  std::shared_ptr<std::vector<double>> data_;
};

// Throws ShapeError naming both shapes when they differ.
void check_same_shape(const Tensor& a, const Tensor& b, const char* where);

std::string shape_str(const std::vector<int64_t>& shape);

}  // namespace pairsynth
