#ifndef AVNAV_AUTODIFF_OPTIMIZER_HPP_
#define AVNAV_AUTODIFF_OPTIMIZER_HPP_

#include <string>
#include <vector>

#include "avnav/autodiff/tensor.hpp"

namespace avnav::ad {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

enum class OptimizerMode { kPlain, kAdam };

OptimizerMode parse_optimizer_mode(const std::string& s);
std::string to_string(OptimizerMode mode);

struct OptimizerConfig {
  OptimizerMode mode = OptimizerMode::kAdam;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-5f;
  // Global L2 gradient-norm clip; 0 disables.
  float max_grad_norm = 0.0f;
};

// Plain mode applies theta <- theta - lr * grad verbatim. Adam mode keeps
// first/second moment estimates with bias correction.
class Optimizer {
 public:
  Optimizer(std::vector<NamedTensor> params, OptimizerConfig config);

  // Reads the current gradients, updates values in place. Throws
  // NonFiniteError (leaving parameters untouched) if any update would be
  // non-finite.
  void step(float learning_rate);
  void zero_grad();

  // Global L2 norm of all gradients, before clipping.
  double grad_norm() const;
  long step_count() const { return steps_; }
  const OptimizerConfig& config() const { return config_; }
  const std::vector<NamedTensor>& params() const { return params_; }

  // Moment buffers exposed for checkpointing ("<prefix>m.<name>",
  // "<prefix>v.<name>").
  std::vector<NamedTensor> state(const std::string& prefix) const;
  void load_state(const std::vector<NamedTensor>& tensors,
                  const std::string& prefix, long step_count);

 private:
  std::vector<NamedTensor> params_;
  OptimizerConfig config_;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
  long steps_ = 0;
};

}  // namespace avnav::ad

#endif  // AVNAV_AUTODIFF_OPTIMIZER_HPP_
