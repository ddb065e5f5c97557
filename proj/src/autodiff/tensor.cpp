#include "avnav/autodiff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace avnav::ad {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0f, requires_grad);
}

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  if (shape.size() > 2) {
    throw ShapeError("tensor rank > 2 is not supported: " +
                     shape_string(shape));
  }
  auto s = std::make_shared<TensorStorage>();
  s->value.assign(shape_size(shape), value);
  s->shape = std::move(shape);
  s->requires_grad = requires_grad;
  return Tensor(std::move(s));
}

Tensor Tensor::from(Shape shape, std::vector<float> values,
                    bool requires_grad) {
  if (shape.size() > 2) {
    throw ShapeError("tensor rank > 2 is not supported: " +
                     shape_string(shape));
  }
  if (values.size() != shape_size(shape)) {
    throw ShapeError("data length " + std::to_string(values.size()) +
                     " does not match shape " + shape_string(shape));
  }
  auto s = std::make_shared<TensorStorage>();
  s->shape = std::move(shape);
  s->value = std::move(values);
  s->requires_grad = requires_grad;
  return Tensor(std::move(s));
}

Tensor Tensor::scalar(float value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

std::size_t Tensor::rows() const {
  return storage_->shape.size() == 2 ? storage_->shape[0] : 1;
}

std::size_t Tensor::cols() const {
  return storage_->shape.empty() ? 1 : storage_->shape.back();
}

float Tensor::item() const {
  if (size() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_string(shape()));
  }
  return storage_->value[0];
}

std::span<float> Tensor::grad() {
  if (storage_->grad.empty()) storage_->grad.assign(size(), 0.0f);
  return storage_->grad;
}

std::span<const float> Tensor::grad() const {
  if (storage_->grad.empty()) storage_->grad.assign(size(), 0.0f);
  return storage_->grad;
}

void Tensor::zero_grad() {
  std::fill(storage_->grad.begin(), storage_->grad.end(), 0.0f);
}

Tensor Tensor::clone() const {
  auto s = std::make_shared<TensorStorage>(*storage_);
  return Tensor(std::move(s));
}

Tensor Tensor::detach() const {
  return from(storage_->shape, storage_->value, false);
}

bool all_finite(std::span<const float> values) {
  return std::all_of(values.begin(), values.end(),
                     [](float v) { return std::isfinite(v); });
}

}  // namespace avnav::ad
