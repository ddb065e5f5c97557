#ifndef AVNAV_POLICY_LAYERS_HPP_
#define AVNAV_POLICY_LAYERS_HPP_

#include <random>
#include <string>
#include <vector>

#include "avnav/autodiff/optimizer.hpp"
#include "avnav/autodiff/tape.hpp"

namespace avnav::policy {

using ad::NamedTensor;
using ad::Tape;
using ad::Tensor;

// y = x W + b, W stored [in, out].
class Linear {
 public:
  Linear() = default;
  Linear(std::string name, std::size_t in, std::size_t out);

  Tensor forward(Tape& tape, const Tensor& x) const;
  // Uniform Glorot initialisation scaled by `gain`; zero bias.
  void init(std::mt19937_64& rng, float gain = 1.0f);
  void append_params(std::vector<NamedTensor>& out) const;

  std::size_t in() const { return weight_.rows(); }
  std::size_t out() const { return weight_.cols(); }
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }

 private:
  std::string name_;
  Tensor weight_;
  Tensor bias_;
};

// Fully connected stack with ReLU between layers. `relu_output` also applies
// ReLU after the last layer.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, const std::vector<std::size_t>& widths,
      bool relu_output);

  Tensor forward(Tape& tape, const Tensor& x) const;
  void init(std::mt19937_64& rng, float last_gain = 1.0f);
  void append_params(std::vector<NamedTensor>& out) const;
  std::size_t depth() const { return layers_.size(); }
  const Linear& layer(std::size_t i) const { return layers_[i]; }

 private:
  std::vector<Linear> layers_;
  bool relu_output_ = false;
};

// Gated recurrent unit:
//   r = sigmoid(x W_ir + b_ir + h W_hr + b_hr)
//   z = sigmoid(x W_iz + b_iz + h W_hz + b_hz)
//   n = tanh(x W_in + b_in + r * (h W_hn + b_hn))
//   h' = (1 - z) * n + z * h
class GruCell {
 public:
  GruCell() = default;
  GruCell(const std::string& name, std::size_t input, std::size_t hidden);

  Tensor forward(Tape& tape, const Tensor& x, const Tensor& h) const;
  void init(std::mt19937_64& rng);
  void append_params(std::vector<NamedTensor>& out) const;
  std::size_t hidden_size() const { return hidden_; }

 private:
  std::size_t hidden_ = 0;
  Linear input_;
  Linear recurrent_;
};

}  // namespace avnav::policy

#endif  // AVNAV_POLICY_LAYERS_HPP_
