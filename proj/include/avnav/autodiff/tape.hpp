#ifndef AVNAV_AUTODIFF_TAPE_HPP_
#define AVNAV_AUTODIFF_TAPE_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "avnav/autodiff/tensor.hpp"

namespace avnav::ad {

// Records executed operations in execution order, which is a topological
// order of the graph. backward() replays the record in reverse, so every
// node is visited exactly once.
//
// A tape built with recording = false evaluates ops without storing backward
// rules; that is the inference path used during rollouts.
//
// A tape is not thread-safe. Use one tape per execution context.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  bool recording() const { return recording_; }

  // When set, relu, clamp and minimum append one branch code per element to
  // `sink`. Two evaluations with equal traces lie on the same linear piece.
  void trace_branches(std::vector<std::uint8_t>* sink) { branch_trace_ = sink; }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  // [B,K] x [K,N] -> [B,N]
  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  // x [B,N] + bias [N]; the only broadcasting op.
  Tensor add_bias(const Tensor& x, const Tensor& bias);
  // scale * x + shift
  Tensor affine(const Tensor& x, float scale, float shift = 0.0f);
  // Column-wise concatenation of tensors with equal row counts.
  Tensor concat(std::span<const Tensor> parts);
  Tensor concat(std::initializer_list<Tensor> parts);
  // Columns [begin, end).
  Tensor slice(const Tensor& x, std::size_t begin, std::size_t end);
  // Rows [begin, end) of a matrix.
  Tensor row_range(const Tensor& x, std::size_t begin, std::size_t end);
  // Row-wise concatenation of tensors with equal column counts.
  Tensor stack_rows(std::span<const Tensor> parts);
  Tensor sum(const Tensor& x);
  Tensor mean(const Tensor& x);
  // [B,N] -> [B,1]
  Tensor row_sum(const Tensor& x);

  Tensor relu(const Tensor& x);
  Tensor tanh(const Tensor& x);
  Tensor sigmoid(const Tensor& x);
  Tensor exp(const Tensor& x);
  Tensor log(const Tensor& x);
  Tensor clamp(const Tensor& x, float lo, float hi);
  // Elementwise min; ties route the gradient to a.
  Tensor minimum(const Tensor& a, const Tensor& b);

  // Row-wise.
  Tensor softmax(const Tensor& logits);
  Tensor log_softmax(const Tensor& logits);
  // out[r] = x[r, index[r]], shape [B,1].
  Tensor gather(const Tensor& x, std::span<const int> index);

  // Mean over rows of -log softmax(logits[r])[label[r]].
  Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);
  // Mean of squared differences over all elements.
  Tensor mse(const Tensor& pred, const Tensor& target);
  // Squared error averaged over the elements of rows with mask[r] != 0.
  // Zero (with zero gradient) when every row is masked out.
  Tensor masked_mse(const Tensor& pred, const Tensor& target,
                    std::span<const float> row_mask);

  // Identity forward; multiplies the incoming gradient by -lambda.
  Tensor grad_reverse(const Tensor& x, float lambda);

  // Reverse-mode accumulation from a scalar loss. Gradients of leaves are
  // added to whatever is already stored; intermediate gradients are reset at
  // the start of each call so repeated calls on the same tape are additive.
  void backward(const Tensor& loss);

 private:
  struct Node {
    std::shared_ptr<TensorStorage> output;
    std::function<void()> backward;
    const char* op;
  };
  friend void inject_sign_fault(const std::string& op);
  static std::string& sign_fault();

  Tensor finish(Tensor out, const char* op);
  template <typename Forward, typename Derivative>
  Tensor unary(const Tensor& x, const char* op, Forward f, Derivative df);
  bool tracks(std::initializer_list<const Tensor*> inputs) const;
  void record(const Tensor& out, std::function<void()> fn);

  void trace(const Tensor& x, float lo, float hi);

  bool recording_;
  std::vector<Node> nodes_;
  std::vector<std::uint8_t>* branch_trace_ = nullptr;
  const char* last_op_ = "";
};

// Mutation testing only: every backward rule of `op` (e.g. "tanh") then runs
// on a negated upstream gradient, emulating a sign bug. "" clears it.
// Process-wide and not thread-safe.
void inject_sign_fault(const std::string& op);

}  // namespace avnav::ad

#endif  // AVNAV_AUTODIFF_TAPE_HPP_
