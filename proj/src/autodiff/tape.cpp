#include "avnav/autodiff/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kernels.hpp"

namespace avnav::ad {
namespace {

using Storage = std::shared_ptr<TensorStorage>;

float* grad_buffer(TensorStorage& s) {
  if (s.grad.empty()) s.grad.assign(s.value.size(), 0.0f);
  return s.grad.data();
}

std::size_t cols_of(const Shape& s) { return s.empty() ? 1 : s.back(); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw ShapeError(std::string(op) + ": undefined tensor");
}

Shape matrix_shape(const Shape& like, std::size_t rows, std::size_t cols) {
  if (like.size() == 2) return {rows, cols};
  return {cols};
}

}  // namespace

bool Tape::tracks(std::initializer_list<const Tensor*> inputs) const {
  if (!recording_) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t->requires_grad(); });
}

void Tape::record(const Tensor& out, std::function<void()> fn) {
  out.storage()->requires_grad = true;
  nodes_.push_back(Node{out.shared(), std::move(fn), last_op_});
}

Tensor Tape::finish(Tensor out, const char* op) {
  if (!all_finite(out.data())) {
    throw NonFiniteError(std::string("non-finite output from ") + op);
  }
  last_op_ = op;
  return out;
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  if (b.shape().size() != 2 || a.shape().empty() || a.cols() != b.rows()) {
    throw ShapeError("matmul: incompatible shapes " + shape_string(a.shape()) +
                     " x " + shape_string(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = Tensor::zeros(matrix_shape(a.shape(), m, n));
  kernels::gemm_nn(a.data().data(), b.data().data(), out.data().data(), m, k,
                   n);
  finish(out, "matmul");
  if (tracks({&a, &b})) {
    Storage sa = a.shared(), sb = b.shared(), so = out.shared();
    record(out, [sa, sb, so, m, k, n] {
      const float* g = so->grad.data();
      if (sa->requires_grad) {
        kernels::gemm_nt(g, sb->value.data(), grad_buffer(*sa), m, n, k);
      }
      if (sb->requires_grad) {
        kernels::gemm_tn(sa->value.data(), g, grad_buffer(*sb), m, k, n);
      }
    });
  }
  return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = Tensor::zeros(a.shape());
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] + b[i];
  finish(out, "add");
  if (tracks({&a, &b})) {
    Storage sa = a.shared(), sb = b.shared(), so = out.shared();
    record(out, [sa, sb, so] {
      const auto& g = so->grad;
      for (Storage s : {sa, sb}) {
        if (!s->requires_grad) continue;
        float* d = grad_buffer(*s);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      }
    });
  }
  return out;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = Tensor::zeros(a.shape());
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] - b[i];
  finish(out, "sub");
  if (tracks({&a, &b})) {
    Storage sa = a.shared(), sb = b.shared(), so = out.shared();
    record(out, [sa, sb, so] {
      const auto& g = so->grad;
      if (sa->requires_grad) {
        float* d = grad_buffer(*sa);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      }
      if (sb->requires_grad) {
        float* d = grad_buffer(*sb);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] -= g[i];
      }
    });
  }
  return out;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = Tensor::zeros(a.shape());
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] * b[i];
  finish(out, "mul");
  if (tracks({&a, &b})) {
    Storage sa = a.shared(), sb = b.shared(), so = out.shared();
    record(out, [sa, sb, so] {
      const auto& g = so->grad;
      if (sa->requires_grad) {
        float* d = grad_buffer(*sa);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * sb->value[i];
      }
      if (sb->requires_grad) {
        float* d = grad_buffer(*sb);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * sa->value[i];
      }
    });
  }
  return out;
}

Tensor Tape::add_bias(const Tensor& x, const Tensor& bias) {
  const std::size_t m = x.rows(), n = x.cols();
  if (bias.size() != n || bias.rows() != 1) {
    throw ShapeError("add_bias: bias " + shape_string(bias.shape()) +
                     " does not match " + shape_string(x.shape()));
  }
  Tensor out = Tensor::zeros(x.shape());
  auto o = out.data();
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) o[r * n + c] = x[r * n + c] + bias[c];
  }
  finish(out, "add_bias");
  if (tracks({&x, &bias})) {
    Storage sx = x.shared(), sb = bias.shared(), so = out.shared();
    record(out, [sx, sb, so, m, n] {
      const auto& g = so->grad;
      if (sx->requires_grad) {
        float* d = grad_buffer(*sx);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      }
      if (sb->requires_grad) {
        float* d = grad_buffer(*sb);
        for (std::size_t r = 0; r < m; ++r) {
          for (std::size_t c = 0; c < n; ++c) d[c] += g[r * n + c];
        }
      }
    });
  }
  return out;
}

Tensor Tape::affine(const Tensor& x, float scale, float shift) {
  Tensor out = Tensor::zeros(x.shape());
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = scale * x[i] + shift;
  finish(out, "affine");
  if (tracks({&x})) {
    Storage sx = x.shared(), so = out.shared();
    record(out, [sx, so, scale] {
      const auto& g = so->grad;
      float* d = grad_buffer(*sx);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += scale * g[i];
    });
  }
  return out;
}

Tensor Tape::concat(std::initializer_list<Tensor> parts) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor Tape::concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const std::size_t m = parts[0].rows();
  std::size_t total = 0;
  bool any_grad = false;
  for (const Tensor& p : parts) {
    if (p.rows() != m || p.shape().size() != parts[0].shape().size()) {
      throw ShapeError("concat: row mismatch " + shape_string(p.shape()) +
                       " vs " + shape_string(parts[0].shape()));
    }
    total += p.cols();
    any_grad = any_grad || p.requires_grad();
  }
  Tensor out = Tensor::zeros(matrix_shape(parts[0].shape(), m, total));
  std::vector<Storage> inputs;
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    const std::size_t w = p.cols();
    for (std::size_t r = 0; r < m; ++r) {
      std::copy_n(p.data().data() + r * w, w,
                  out.data().data() + r * total + offset);
    }
    inputs.push_back(p.shared());
    offsets.push_back(offset);
    offset += w;
  }
  finish(out, "concat");
  if (recording_ && any_grad) {
    Storage so = out.shared();
    record(out, [inputs, offsets, so, m, total] {
      const auto& g = so->grad;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        TensorStorage& s = *inputs[i];
        if (!s.requires_grad) continue;
        const std::size_t w = cols_of(s.shape);
        float* d = grad_buffer(s);
        for (std::size_t r = 0; r < m; ++r) {
          for (std::size_t c = 0; c < w; ++c) {
            d[r * w + c] += g[r * total + offsets[i] + c];
          }
        }
      }
    });
  }
  return out;
}

Tensor Tape::slice(const Tensor& x, std::size_t begin, std::size_t end) {
  const std::size_t m = x.rows(), n = x.cols();
  if (begin >= end || end > n) {
    throw ShapeError("slice: bad column range [" + std::to_string(begin) +
                     "," + std::to_string(end) + ") of " +
                     shape_string(x.shape()));
  }
  const std::size_t w = end - begin;
  Tensor out = Tensor::zeros(matrix_shape(x.shape(), m, w));
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(x.data().data() + r * n + begin, w,
                out.data().data() + r * w);
  }
  finish(out, "slice");
  if (tracks({&x})) {
    Storage sx = x.shared(), so = out.shared();
    record(out, [sx, so, m, n, w, begin] {
      const auto& g = so->grad;
      float* d = grad_buffer(*sx);
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < w; ++c) d[r * n + begin + c] += g[r * w + c];
      }
    });
  }
  return out;
}

Tensor Tape::row_range(const Tensor& x, std::size_t begin, std::size_t end) {
  const std::size_t m = x.rows(), n = x.cols();
  if (begin >= end || end > m) {
    throw ShapeError("row_range: bad row range [" + std::to_string(begin) + "," +
                     std::to_string(end) + ") of " + shape_string(x.shape()));
  }
  Tensor out = Tensor::zeros({end - begin, n});
  std::copy(x.data().begin() + begin * n, x.data().begin() + end * n, out.data().begin());
  finish(out, "row_range");
  if (tracks({&x})) {
    Storage sx = x.shared(), so = out.shared();
    record(out, [sx, so, begin, n] {
      const auto& g = so->grad;
      float* d = grad_buffer(*sx) + begin * n;
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    });
  }
  return out;
}

Tensor Tape::stack_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("stack_rows: no inputs");
  const std::size_t n = parts[0].cols();
  std::size_t m = 0;
  bool any_grad = false;
  for (const Tensor& p : parts) {
    if (p.cols() != n || p.shape().size() != 2) {
      throw ShapeError("stack_rows: column mismatch " + shape_string(p.shape()) + " vs " +
                       shape_string(parts[0].shape()));
    }
    m += p.rows();
    any_grad = any_grad || p.requires_grad();
  }
  Tensor out = Tensor::zeros({m, n});
  std::vector<Storage> inputs;
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    std::copy(p.data().begin(), p.data().end(), out.data().begin() + offset);
    offset += p.size();
    inputs.push_back(p.shared());
  }
  finish(out, "stack_rows");
  if (recording_ && any_grad) {
    Storage so = out.shared();
    record(out, [inputs, so] {
      const auto& g = so->grad;
      std::size_t off = 0;
      for (const Storage& s : inputs) {
        const std::size_t k = s->value.size();
        if (s->requires_grad) {
          float* d = grad_buffer(*s);
          for (std::size_t i = 0; i < k; ++i) d[i] += g[off + i];
        }
        off += k;
      }
    });
  }
  return out;
}

Tensor Tape::sum(const Tensor& x) {
  double acc = 0.0;
  for (float v : x.data()) acc += v;
  Tensor out = Tensor::scalar(static_cast<float>(acc));
  finish(out, "sum");
  if (tracks({&x})) {
    Storage sx = x.shared(), so = out.shared();
    record(out, [sx, so] {
      const float g = so->grad[0];
      float* d = grad_buffer(*sx);
      for (std::size_t i = 0; i < sx->value.size(); ++i) d[i] += g;
    });
  }
  return out;
}

Tensor Tape::mean(const Tensor& x) {
  double acc = 0.0;
  for (float v : x.data()) acc += v;
  const float inv = 1.0f / static_cast<float>(x.size());
  Tensor out = Tensor::scalar(static_cast<float>(acc / x.size()));
  finish(out, "mean");
  if (tracks({&x})) {
    Storage sx = x.shared(), so = out.shared();
    record(out, [sx, so, inv] {
      const float g = so->grad[0] * inv;
      float* d = grad_buffer(*sx);
      for (std::size_t i = 0; i < sx->value.size(); ++i) d[i] += g;
    });
  }
  return out;
}

Tensor Tape::row_sum(const Tensor& x) {
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out = Tensor::zeros({m, 1});
  for (std::size_t r = 0; r < m; ++r) {
    float acc = 0.0f;
    for (std::size_t c = 0; c < n; ++c) acc += x[r * n + c];
    out[r] = acc;
  }
  finish(out, "row_sum");
  if (tracks({&x})) {
    Storage sx = x.shared(), so = out.shared();
    record(out, [sx, so, m, n] {
      float* d = grad_buffer(*sx);
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) d[r * n + c] += so->grad[r];
      }
    });
  }
  return out;
}

// Elementwise op: forward y = f(x), backward dx += g * df(x, y).
template <typename Forward, typename Derivative>
Tensor Tape::unary(const Tensor& x, const char* op, Forward f,
                   Derivative df) {
  Tensor out = Tensor::zeros(x.shape());
  auto o = out.data();
  auto in = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(in[i]);
  finish(out, op);
  if (tracks({&x})) {
    Storage sx = x.shared(), so = out.shared();
    record(out, [sx, so, df] {
      const auto& g = so->grad;
      float* d = grad_buffer(*sx);
      for (std::size_t i = 0; i < g.size(); ++i) {
        d[i] += g[i] * df(sx->value[i], so->value[i]);
      }
    });
  }
  return out;
}

void Tape::trace(const Tensor& x, float lo, float hi) {
  if (branch_trace_ == nullptr) return;
  for (float v : x.data()) {
    branch_trace_->push_back(static_cast<std::uint8_t>((v > lo) + (v > hi)));
  }
}

Tensor Tape::relu(const Tensor& x) {
  trace(x, 0.0f, std::numeric_limits<float>::infinity());
  return unary(
      x, "relu", [](float v) { return v > 0.0f ? v : 0.0f; },
      [](float v, float) { return v > 0.0f ? 1.0f : 0.0f; });
}

Tensor Tape::tanh(const Tensor& x) {
  return unary(
      x, "tanh", [](float v) { return std::tanh(v); },
      [](float, float y) { return 1.0f - y * y; });
}

Tensor Tape::sigmoid(const Tensor& x) {
  return unary(
      x, "sigmoid", [](float v) { return 1.0f / (1.0f + std::exp(-v)); },
      [](float, float y) { return y * (1.0f - y); });
}

Tensor Tape::exp(const Tensor& x) {
  return unary(
      x, "exp", [](float v) { return std::exp(v); },
      [](float, float y) { return y; });
}

Tensor Tape::log(const Tensor& x) {
  return unary(
      x, "log", [](float v) { return std::log(v); },
      [](float v, float) { return 1.0f / v; });
}

Tensor Tape::clamp(const Tensor& x, float lo, float hi) {
  trace(x, lo, hi);
  return unary(
      x, "clamp", [lo, hi](float v) { return std::clamp(v, lo, hi); },
      [lo, hi](float v, float) { return (v >= lo && v <= hi) ? 1.0f : 0.0f; });
}

Tensor Tape::minimum(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "minimum");
  Tensor out = Tensor::zeros(a.shape());
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] <= b[i] ? a[i] : b[i];
  if (branch_trace_ != nullptr) {
    for (std::size_t i = 0; i < o.size(); ++i) branch_trace_->push_back(a[i] <= b[i]);
  }
  finish(out, "minimum");
  if (tracks({&a, &b})) {
    Storage sa = a.shared(), sb = b.shared(), so = out.shared();
    record(out, [sa, sb, so] {
      const auto& g = so->grad;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const bool pick_a = sa->value[i] <= sb->value[i];
        if (pick_a && sa->requires_grad) grad_buffer(*sa)[i] += g[i];
        if (!pick_a && sb->requires_grad) grad_buffer(*sb)[i] += g[i];
      }
    });
  }
  return out;
}

Tensor Tape::softmax(const Tensor& logits) {
  const std::size_t m = logits.rows(), n = logits.cols();
  Tensor out = Tensor::zeros(logits.shape());
  for (std::size_t r = 0; r < m; ++r) {
    const float* x = logits.data().data() + r * n;
    float* y = out.data().data() + r * n;
    const float mx = *std::max_element(x, x + n);
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) z += std::exp(double(x[c]) - mx);
    for (std::size_t c = 0; c < n; ++c) {
      y[c] = static_cast<float>(std::exp(double(x[c]) - mx) / z);
    }
  }
  finish(out, "softmax");
  if (tracks({&logits})) {
    Storage sx = logits.shared(), so = out.shared();
    record(out, [sx, so, m, n] {
      float* d = grad_buffer(*sx);
      for (std::size_t r = 0; r < m; ++r) {
        const float* y = so->value.data() + r * n;
        const float* g = so->grad.data() + r * n;
        float s = 0.0f;
        for (std::size_t c = 0; c < n; ++c) s += g[c] * y[c];
        for (std::size_t c = 0; c < n; ++c) d[r * n + c] += y[c] * (g[c] - s);
      }
    });
  }
  return out;
}

Tensor Tape::log_softmax(const Tensor& logits) {
  const std::size_t m = logits.rows(), n = logits.cols();
  Tensor out = Tensor::zeros(logits.shape());
  for (std::size_t r = 0; r < m; ++r) {
    const float* x = logits.data().data() + r * n;
    float* y = out.data().data() + r * n;
    const float mx = *std::max_element(x, x + n);
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) z += std::exp(double(x[c]) - mx);
    const double lse = mx + std::log(z);
    for (std::size_t c = 0; c < n; ++c) y[c] = static_cast<float>(x[c] - lse);
  }
  finish(out, "log_softmax");
  if (tracks({&logits})) {
    Storage sx = logits.shared(), so = out.shared();
    record(out, [sx, so, m, n] {
      float* d = grad_buffer(*sx);
      for (std::size_t r = 0; r < m; ++r) {
        const float* y = so->value.data() + r * n;
        const float* g = so->grad.data() + r * n;
        float s = 0.0f;
        for (std::size_t c = 0; c < n; ++c) s += g[c];
        for (std::size_t c = 0; c < n; ++c) {
          d[r * n + c] += g[c] - std::exp(y[c]) * s;
        }
      }
    });
  }
  return out;
}

Tensor Tape::gather(const Tensor& x, std::span<const int> index) {
  const std::size_t m = x.rows(), n = x.cols();
  if (index.size() != m) throw ShapeError("gather: index length != rows");
  std::vector<int> idx(index.begin(), index.end());
  for (int i : idx) {
    if (i < 0 || static_cast<std::size_t>(i) >= n) {
      throw std::out_of_range("gather: index " + std::to_string(i) +
                              " out of range for " + std::to_string(n) +
                              " columns");
    }
  }
  Tensor out = Tensor::zeros({m, 1});
  for (std::size_t r = 0; r < m; ++r) out[r] = x[r * n + idx[r]];
  finish(out, "gather");
  if (tracks({&x})) {
    Storage sx = x.shared(), so = out.shared();
    record(out, [sx, so, idx, n] {
      float* d = grad_buffer(*sx);
      for (std::size_t r = 0; r < idx.size(); ++r) {
        d[r * n + idx[r]] += so->grad[r];
      }
    });
  }
  return out;
}

Tensor Tape::cross_entropy(const Tensor& logits, std::span<const int> labels) {
  const std::size_t m = logits.rows(), n = logits.cols();
  if (n < 2) throw ShapeError("cross_entropy: need at least 2 classes");
  if (labels.size() != m) {
    throw ShapeError("cross_entropy: label count != rows");
  }
  std::vector<int> lab(labels.begin(), labels.end());
  for (int l : lab) {
    if (l < 0 || static_cast<std::size_t>(l) >= n) {
      throw std::out_of_range("cross_entropy: label " + std::to_string(l) +
                              " out of range for " + std::to_string(n) +
                              " classes");
    }
  }
  // Softmax rows are kept for the backward pass.
  std::vector<float> probs(m * n);
  double total = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const float* x = logits.data().data() + r * n;
    const double mx = *std::max_element(x, x + n);
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) z += std::exp(x[c] - mx);
    for (std::size_t c = 0; c < n; ++c) {
      probs[r * n + c] = static_cast<float>(std::exp(x[c] - mx) / z);
    }
    total += std::log(z) + (mx - x[lab[r]]);
  }
  Tensor out = Tensor::scalar(static_cast<float>(total / m));
  finish(out, "cross_entropy");
  if (tracks({&logits})) {
    Storage sx = logits.shared(), so = out.shared();
    record(out, [sx, so, lab, probs = std::move(probs), m, n] {
      const float g = so->grad[0] / static_cast<float>(m);
      float* d = grad_buffer(*sx);
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
          const float onehot = static_cast<int>(c) == lab[r] ? 1.0f : 0.0f;
          d[r * n + c] += g * (probs[r * n + c] - onehot);
        }
      }
    });
  }
  return out;
}

Tensor Tape::mse(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "mse");
  const std::size_t n = pred.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = double(pred[i]) - target[i];
    acc += diff * diff;
  }
  Tensor out = Tensor::scalar(static_cast<float>(acc / n));
  finish(out, "mse");
  if (tracks({&pred, &target})) {
    Storage sp = pred.shared(), st = target.shared(), so = out.shared();
    record(out, [sp, st, so, n] {
      const float scale = 2.0f * so->grad[0] / static_cast<float>(n);
      for (std::size_t i = 0; i < n; ++i) {
        const float g = scale * (sp->value[i] - st->value[i]);
        if (sp->requires_grad) grad_buffer(*sp)[i] += g;
        if (st->requires_grad) grad_buffer(*st)[i] -= g;
      }
    });
  }
  return out;
}

Tensor Tape::masked_mse(const Tensor& pred, const Tensor& target,
                        std::span<const float> row_mask) {
  require_same_shape(pred, target, "masked_mse");
  const std::size_t m = pred.rows(), n = pred.cols();
  if (row_mask.size() != m) throw ShapeError("masked_mse: mask length != rows");
  std::vector<float> mask(row_mask.begin(), row_mask.end());
  std::size_t active = 0;
  double acc = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    if (mask[r] == 0.0f) continue;
    ++active;
    for (std::size_t c = 0; c < n; ++c) {
      const double diff = double(pred[r * n + c]) - target[r * n + c];
      acc += diff * diff;
    }
  }
  const std::size_t denom = active * n;
  Tensor out = Tensor::scalar(denom ? static_cast<float>(acc / denom) : 0.0f);
  finish(out, "masked_mse");
  if (tracks({&pred, &target}) && denom > 0) {
    Storage sp = pred.shared(), st = target.shared(), so = out.shared();
    record(out, [sp, st, so, mask, m, n, denom] {
      const float scale = 2.0f * so->grad[0] / static_cast<float>(denom);
      for (std::size_t r = 0; r < m; ++r) {
        if (mask[r] == 0.0f) continue;
        for (std::size_t c = 0; c < n; ++c) {
          const std::size_t i = r * n + c;
          const float g = scale * (sp->value[i] - st->value[i]);
          if (sp->requires_grad) grad_buffer(*sp)[i] += g;
          if (st->requires_grad) grad_buffer(*st)[i] -= g;
        }
      }
    });
  }
  return out;
}

Tensor Tape::grad_reverse(const Tensor& x, float lambda) {
  if (!std::isfinite(lambda)) {
    throw std::invalid_argument("grad_reverse: lambda must be finite");
  }
  Tensor out = Tensor::from(x.shape(), {x.data().begin(), x.data().end()});
  finish(out, "grad_reverse");
  if (tracks({&x})) {
    Storage sx = x.shared(), so = out.shared();
    const float factor = -lambda;
    record(out, [sx, so, factor] {
      const auto& g = so->grad;
      float* d = grad_buffer(*sx);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += factor * g[i];
    });
  }
  return out;
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ShapeError("backward: loss must be a scalar");
  }
  if (!recording_) throw std::logic_error("backward on a non-recording tape");
  auto it = std::find_if(nodes_.begin(), nodes_.end(), [&](const Node& n) {
    return n.output == loss.shared();
  });
  if (it == nodes_.end()) {
    throw std::logic_error("backward: loss was not produced on this tape");
  }
  for (Node& n : nodes_) n.output->grad.assign(n.output->value.size(), 0.0f);
  loss.shared()->grad[0] = 1.0f;
  const auto last = static_cast<std::ptrdiff_t>(it - nodes_.begin());
  const std::string fault = sign_fault();
  for (std::ptrdiff_t i = last; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!fault.empty() && fault == n.op) {
      for (float& g : n.output->grad) g = -g;
    }
    n.backward();
  }
}

std::string& Tape::sign_fault() {
  static std::string op;
  return op;
}

void inject_sign_fault(const std::string& op) { Tape::sign_fault() = op; }

}  // namespace avnav::ad
