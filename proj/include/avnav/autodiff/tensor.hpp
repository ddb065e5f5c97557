#ifndef AVNAV_AUTODIFF_TENSOR_HPP_
#define AVNAV_AUTODIFF_TENSOR_HPP_

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace avnav::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TensorStorage {
  Shape shape;
  std::vector<float> value;
  std::vector<float> grad;  // empty until a gradient has been written
  bool requires_grad = false;
};

// Dense row-major float32 tensor handle. Copies share storage; use clone()
// for a deep copy. Rank 0, 1 and 2 are supported; rank 1 [n] is viewed as a
// single row [1, n] by the matrix ops.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<float> values,
                     bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);

  bool defined() const { return storage_ != nullptr; }
  const Shape& shape() const { return storage_->shape; }
  std::size_t size() const { return storage_->value.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<float> data() { return storage_->value; }
  std::span<const float> data() const { return storage_->value; }
  float& operator[](std::size_t i) { return storage_->value[i]; }
  float operator[](std::size_t i) const { return storage_->value[i]; }
  float at(std::size_t r, std::size_t c) const {
    return storage_->value[r * cols() + c];
  }
  float item() const;

  bool requires_grad() const { return storage_->requires_grad; }
  void set_requires_grad(bool flag) { storage_->requires_grad = flag; }
  bool has_grad() const { return !storage_->grad.empty(); }
  // Allocates a zero gradient buffer on first access.
  std::span<float> grad();
  std::span<const float> grad() const;
  void zero_grad();

  Tensor clone() const;
  Tensor detach() const;

  TensorStorage* storage() const { return storage_.get(); }
  const std::shared_ptr<TensorStorage>& shared() const { return storage_; }

 private:
  explicit Tensor(std::shared_ptr<TensorStorage> s) : storage_(std::move(s)) {}
  std::shared_ptr<TensorStorage> storage_;
};

bool all_finite(std::span<const float> values);

}  // namespace avnav::ad

#endif  // AVNAV_AUTODIFF_TENSOR_HPP_
