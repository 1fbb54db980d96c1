#include "pairsynth/tensor.hpp"

#include <cmath>
#include <sstream>

#include "pairsynth/errors.hpp"

namespace pairsynth {

static int64_t numel_of(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int64_t> shape)
    : shape_(std::move(shape)), numel_(numel_of(shape_)),
      data_(std::make_shared<std::vector<double>>(numel_, 0.0)) {}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), numel_(numel_of(shape_)),
      data_(std::make_shared<std::vector<double>>(std::move(data))) {
  if (static_cast<int64_t>(data_->size()) != numel_)
    throw ShapeError("data size " + std::to_string(data_->size()) +
                     " does not match shape " + pairsynth::shape_str(shape_));
}

Tensor Tensor::full(std::vector<int64_t> shape, double v) {
  Tensor t(std::move(shape));
  for (double& x : *t.data_) x = v;
  return t;
}

double Tensor::item() const {
  if (numel_ != 1) throw ShapeError("item() on tensor of shape " + shape_str());
  return (*data_)[0];
}

Tensor Tensor::clone() const {
  Tensor t;
  t.shape_ = shape_;
  t.numel_ = numel_;
  t.data_ = std::make_shared<std::vector<double>>(*data_);
  return t;
}

Tensor Tensor::reshaped(std::vector<int64_t> shape) const {
  if (numel_of(shape) != numel_)
    throw ShapeError("cannot reshape " + shape_str() + " to " + pairsynth::shape_str(shape));
  Tensor t;
  t.shape_ = std::move(shape);
  t.numel_ = numel_;
  t.data_ = data_;
  return t;
}

bool Tensor::all_finite() const {
  for (double x : *data_)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string Tensor::shape_str() const { return pairsynth::shape_str(shape_); }

std::string shape_str(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* where) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(where) + ": shape mismatch between " + a.shape_str() +
                     " and " + b.shape_str());
}

}  // namespace pairsynth
