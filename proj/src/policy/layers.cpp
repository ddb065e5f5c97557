#include "avnav/policy/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace avnav::policy {

Linear::Linear(std::string name, std::size_t in, std::size_t out)
    : name_(std::move(name)),
      weight_(Tensor::zeros({in, out}, true)),
      bias_(Tensor::zeros({out}, true)) {}

Tensor Linear::forward(Tape& tape, const Tensor& x) const {
  return tape.add_bias(tape.matmul(x, weight_), bias_);
}

void Linear::init(std::mt19937_64& rng, float gain) {
  const double limit = gain * std::sqrt(6.0 / double(in() + out()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (float& w : weight_.data()) w = static_cast<float>(dist(rng));
  for (float& b : bias_.data()) b = 0.0f;
}

void Linear::append_params(std::vector<NamedTensor>& out) const {
  out.push_back({name_ + ".weight", weight_});
  out.push_back({name_ + ".bias", bias_});
}

Mlp::Mlp(const std::string& name, const std::vector<std::size_t>& widths,
         bool relu_output)
    : relu_output_(relu_output) {
  if (widths.size() < 2) throw std::invalid_argument("Mlp needs >= 2 widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    layers_.emplace_back(name + "." + std::to_string(i), widths[i], widths[i + 1]);
  }
}

Tensor Mlp::forward(Tape& tape, const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].forward(tape, h);
    if (i + 1 < layers_.size() || relu_output_) h = tape.relu(h);
  }
  return h;
}

void Mlp::init(std::mt19937_64& rng, float last_gain) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].init(rng, i + 1 == layers_.size() ? last_gain : 1.0f);
  }
}

void Mlp::append_params(std::vector<NamedTensor>& out) const {
  for (const Linear& l : layers_) l.append_params(out);
}

GruCell::GruCell(const std::string& name, std::size_t input, std::size_t hidden)
    : hidden_(hidden),
      input_(name + ".input", input, 3 * hidden),
      recurrent_(name + ".recurrent", hidden, 3 * hidden) {}

Tensor GruCell::forward(Tape& tape, const Tensor& x, const Tensor& h) const {
  const std::size_t H = hidden_;
  const Tensor gi = input_.forward(tape, x);
  const Tensor gh = recurrent_.forward(tape, h);
  const Tensor r = tape.sigmoid(tape.add(tape.slice(gi, 0, H), tape.slice(gh, 0, H)));
  const Tensor z =
      tape.sigmoid(tape.add(tape.slice(gi, H, 2 * H), tape.slice(gh, H, 2 * H)));
  const Tensor n = tape.tanh(tape.add(tape.slice(gi, 2 * H, 3 * H),
                                      tape.mul(r, tape.slice(gh, 2 * H, 3 * H))));
  // (1 - z) * n + z * h == n + z * (h - n)
  return tape.add(n, tape.mul(z, tape.sub(h, n)));
}

void GruCell::init(std::mt19937_64& rng) {
  input_.init(rng);
  recurrent_.init(rng);
}

void GruCell::append_params(std::vector<NamedTensor>& out) const {
  input_.append_params(out);
  recurrent_.append_params(out);
}

}  // namespace avnav::policy
