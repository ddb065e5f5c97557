#include "avnav/autodiff/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace avnav::ad {

OptimizerMode parse_optimizer_mode(const std::string& s) {
  if (s == "plain" || s == "sgd") return OptimizerMode::kPlain;
  if (s == "adam") return OptimizerMode::kAdam;
  throw std::invalid_argument("unknown optimizer mode '" + s + "'");
}

std::string to_string(OptimizerMode mode) {
  return mode == OptimizerMode::kPlain ? "plain" : "adam";
}

Optimizer::Optimizer(std::vector<NamedTensor> params, OptimizerConfig config)
    : params_(std::move(params)), config_(config) {
  for (const NamedTensor& p : params_) {
    if (!p.tensor.requires_grad()) {
      throw std::invalid_argument("optimizer parameter '" + p.name +
                                  "' does not require grad");
    }
    m_.emplace_back(p.tensor.size(), 0.0f);
    v_.emplace_back(p.tensor.size(), 0.0f);
  }
}

double Optimizer::grad_norm() const {
  double sq = 0.0;
  for (const NamedTensor& p : params_) {
    if (!p.tensor.has_grad()) continue;
    for (float g : p.tensor.grad()) sq += double(g) * g;
  }
  return std::sqrt(sq);
}

void Optimizer::zero_grad() {
  for (NamedTensor& p : params_) p.tensor.zero_grad();
}

void Optimizer::step(float learning_rate) {
  float clip = 1.0f;
  if (config_.max_grad_norm > 0.0f) {
    const double norm = grad_norm();
    if (!std::isfinite(norm)) throw NonFiniteError("non-finite gradient norm");
    if (norm > config_.max_grad_norm) {
      clip = static_cast<float>(config_.max_grad_norm / (norm + 1e-6));
    }
  }

  const long t = steps_ + 1;
  const double bc1 = 1.0 - std::pow(double(config_.beta1), double(t));
  const double bc2 = 1.0 - std::pow(double(config_.beta2), double(t));

  // Compute every update first so a non-finite one leaves parameters intact.
  std::vector<std::vector<float>> next(params_.size());
  std::vector<std::vector<float>> next_m = m_, next_v = v_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].tensor;
    auto value = p.data();
    next[i].assign(value.begin(), value.end());
    if (!p.has_grad()) continue;
    auto grad = p.grad();
    for (std::size_t j = 0; j < value.size(); ++j) {
      const float g = grad[j] * clip;
      if (config_.mode == OptimizerMode::kPlain) {
        next[i][j] = value[j] - learning_rate * g;
        continue;
      }
      float& m = next_m[i][j];
      float& v = next_v[i][j];
      m = config_.beta1 * m + (1.0f - config_.beta1) * g;
      v = config_.beta2 * v + (1.0f - config_.beta2) * g * g;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      next[i][j] = static_cast<float>(
          value[j] - learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon));
    }
    if (!all_finite(next[i])) {
      throw NonFiniteError("non-finite update for parameter '" +
                           params_[i].name + "'");
    }
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    std::copy(next[i].begin(), next[i].end(), params_[i].tensor.data().begin());
  }
  m_ = std::move(next_m);
  v_ = std::move(next_v);
  steps_ = t;
}

std::vector<NamedTensor> Optimizer::state(const std::string& prefix) const {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out.push_back({prefix + "m." + params_[i].name,
                   Tensor::from(params_[i].tensor.shape(), m_[i])});
    out.push_back({prefix + "v." + params_[i].name,
                   Tensor::from(params_[i].tensor.shape(), v_[i])});
  }
  return out;
}

void Optimizer::load_state(const std::vector<NamedTensor>& tensors,
                           const std::string& prefix, long step_count) {
  auto find = [&](const std::string& name) -> const Tensor& {
    for (const NamedTensor& t : tensors) {
      if (t.name == name) return t.tensor;
    }
    throw std::runtime_error("optimizer state '" + name + "' missing");
  };
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Tensor& m = find(prefix + "m." + params_[i].name);
    const Tensor& v = find(prefix + "v." + params_[i].name);
    if (m.size() != m_[i].size() || v.size() != v_[i].size()) {
      throw std::runtime_error("optimizer state shape mismatch for '" +
                               params_[i].name + "'");
    }
    m_[i].assign(m.data().begin(), m.data().end());
    v_[i].assign(v.data().begin(), v.data().end());
  }
  steps_ = step_count;
}

}  // namespace avnav::ad
