#include "avnav/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>

namespace avnav::ad {
namespace {

using Rng = std::mt19937_64;

Tensor uniform(Shape shape, Rng& rng, float lo, float hi, bool requires_grad = true) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  std::uniform_real_distribution<float> d(lo, hi);
  for (float& v : t.data()) v = d(rng);
  return t;
}

// Values with magnitude in [lo, hi] and random sign.
Tensor away_from_zero(Shape shape, Rng& rng, float lo, float hi,
                      bool requires_grad = true) {
  Tensor t = uniform(std::move(shape), rng, lo, hi, requires_grad);
  std::bernoulli_distribution sign(0.5);
  for (float& v : t.data()) {
    if (sign(rng)) v = -v;
  }
  return t;
}

// sum(out * w) with a fixed random projection w.
Tensor project(Tape& tape, const Tensor& out, const Tensor& w) {
  return tape.sum(tape.mul(out, w));
}

}  // namespace

GradientError gradient_error(const LossBuilder& loss, std::span<const Tensor> leaves,
                             const GradCheckOptions& options) {
  std::vector<Tensor> params(leaves.begin(), leaves.end());
  for (Tensor& p : params) p.zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  Rng rng(options.seed);
  double diff2 = 0.0;
  double analytic2 = 0.0;
  double numeric2 = 0.0;
  GradientError result;
  std::vector<std::uint8_t> trace_up;
  std::vector<std::uint8_t> trace_down;
  for (Tensor& p : params) {
    std::vector<std::size_t> idx(p.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (idx.size() > options.max_elements) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(options.max_elements);
    }
    const std::vector<float> analytic(p.grad().begin(), p.grad().end());
    for (std::size_t i : idx) {
      const float original = p[i];
      trace_up.clear();
      trace_down.clear();
      p[i] = static_cast<float>(original + options.step);
      Tape plus(false);
      plus.trace_branches(&trace_up);
      const double up = loss(plus).item();
      p[i] = static_cast<float>(original - options.step);
      Tape minus(false);
      minus.trace_branches(&trace_down);
      const double down = loss(minus).item();
      p[i] = original;
      if (trace_up != trace_down) {
        ++result.skipped;
        continue;
      }
      ++result.compared;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[i];
      diff2 += (a - numeric) * (a - numeric);
      analytic2 += a * a;
      numeric2 += numeric * numeric;
    }
  }
  const double scale = std::sqrt(std::max(analytic2, numeric2));
  result.relative = scale == 0.0 ? std::sqrt(diff2) : std::sqrt(diff2) / scale;
  return result;
}

bool GradCheckReport::passed() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const GradCheckEntry& e) { return e.passed(); });
}

double GradCheckReport::max_error() const {
  double m = 0.0;
  for (const GradCheckEntry& e : entries) m = std::max(m, e.error);
  return m;
}

void GradCheckReport::print(std::ostream& os) const {
  char buf[160];
  for (const GradCheckEntry& e : entries) {
    std::snprintf(buf, sizeof buf, "%-28s max_rel_err=%.3e tol=%.1e compared=%zu skipped=%zu %s\n",
                  e.name.c_str(), e.error, e.tolerance, e.compared, e.skipped,
                  e.passed() ? "PASS" : "FAIL");
    os << buf;
  }
}

void check_primitives(GradCheckReport& report, double tolerance,
                      const GradCheckOptions& options) {
  Rng rng(options.seed);
  auto add = [&](const std::string& name, const LossBuilder& f,
                 std::initializer_list<Tensor> leaves) {
    const std::vector<Tensor> v(leaves);
    const GradientError e = gradient_error(f, v, options);
    report.entries.push_back({"op." + name, e.relative, tolerance, e.compared, e.skipped});
  };

  {
    Tensor a = uniform({3, 4}, rng, -1, 1), b = uniform({4, 5}, rng, -1, 1);
    Tensor w = uniform({3, 5}, rng, -1, 1, false);
    add("matmul", [=](Tape& t) { return project(t, t.matmul(a, b), w); }, {a, b});
  }
  {
    Tensor a = uniform({3, 4}, rng, -1, 1), b = uniform({3, 4}, rng, -1, 1);
    Tensor w = uniform({3, 4}, rng, -1, 1, false);
    add("add", [=](Tape& t) { return project(t, t.add(a, b), w); }, {a, b});
    add("sub", [=](Tape& t) { return project(t, t.sub(a, b), w); }, {a, b});
    add("mul", [=](Tape& t) { return project(t, t.mul(a, b), w); }, {a, b});
    add("affine", [=](Tape& t) { return project(t, t.affine(a, 1.7f, 0.3f), w); }, {a});
  }
  {
    Tensor x = uniform({3, 4}, rng, -1, 1), bias = uniform({4}, rng, -1, 1);
    Tensor w = uniform({3, 4}, rng, -1, 1, false);
    add("add_bias", [=](Tape& t) { return project(t, t.add_bias(x, bias), w); }, {x, bias});
  }
  {
    Tensor a = uniform({3, 2}, rng, -1, 1), b = uniform({3, 3}, rng, -1, 1);
    Tensor w = uniform({3, 5}, rng, -1, 1, false);
    add("concat", [=](Tape& t) { return project(t, t.concat({a, b}), w); }, {a, b});
  }
  {
    Tensor x = uniform({3, 6}, rng, -1, 1);
    Tensor w = uniform({3, 3}, rng, -1, 1, false);
    add("slice", [=](Tape& t) { return project(t, t.slice(x, 1, 4), w); }, {x});
  }
  {
    Tensor x = uniform({3, 4}, rng, -1, 1);
    Tensor w = uniform({3, 4}, rng, -1, 1, false);
    add("sum", [=](Tape& t) {
      const Tensor s = t.sum(t.mul(x, w));
      return t.mul(s, s);
    }, {x});
    add("mean", [=](Tape& t) {
      const Tensor m = t.mean(t.mul(x, w));
      return t.mul(m, m);
    }, {x});
    Tensor wr = uniform({3, 1}, rng, -1, 1, false);
    add("row_sum", [=](Tape& t) { return project(t, t.row_sum(t.mul(x, w)), wr); }, {x});
  }
  {
    Tensor w = uniform({3, 4}, rng, -1, 1, false);
    Tensor xr = away_from_zero({3, 4}, rng, 0.2f, 1.5f);
    add("relu", [=](Tape& t) { return project(t, t.relu(xr), w); }, {xr});
    Tensor xs = uniform({3, 4}, rng, -1.5f, 1.5f);
    add("tanh", [=](Tape& t) { return project(t, t.tanh(xs), w); }, {xs});
    add("sigmoid", [=](Tape& t) { return project(t, t.sigmoid(xs), w); }, {xs});
    add("exp", [=](Tape& t) { return project(t, t.exp(xs), w); }, {xs});
    Tensor xp = uniform({3, 4}, rng, 0.5f, 2.0f);
    add("log", [=](Tape& t) { return project(t, t.log(xp), w); }, {xp});
    // Inside or outside [-0.5, 0.5] by at least 0.1.
    Tensor xc = away_from_zero({3, 4}, rng, 0.0f, 0.4f);
    for (std::size_t i = 0; i < xc.size(); i += 2) xc[i] += xc[i] >= 0 ? 0.6f : -0.6f;
    add("clamp", [=](Tape& t) { return project(t, t.clamp(xc, -0.5f, 0.5f), w); }, {xc});
    Tensor a = uniform({3, 4}, rng, -1, 1), b = a.clone();
    b.set_requires_grad(true);
    Tensor gap = away_from_zero({3, 4}, rng, 0.2f, 0.8f, false);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += gap[i];
    add("minimum", [=](Tape& t) { return project(t, t.minimum(a, b), w); }, {a, b});
  }
  {
    Tensor logits = uniform({3, 5}, rng, -2, 2);
    Tensor w = uniform({3, 5}, rng, -1, 1, false);
    add("softmax", [=](Tape& t) { return project(t, t.softmax(logits), w); }, {logits});
    add("log_softmax", [=](Tape& t) { return project(t, t.log_softmax(logits), w); },
        {logits});
    const std::vector<int> index = {4, 0, 2};
    Tensor wg = uniform({3, 1}, rng, -1, 1, false);
    add("gather", [=](Tape& t) { return project(t, t.gather(logits, index), wg); }, {logits});
    const std::vector<int> labels = {1, 3, 0};
    add("cross_entropy", [=](Tape& t) { return t.cross_entropy(logits, labels); }, {logits});
  }
  {
    Tensor pred = uniform({4, 4}, rng, -1, 1), target = uniform({4, 4}, rng, -1, 1);
    add("mse", [=](Tape& t) { return t.mse(pred, target); }, {pred, target});
    const std::vector<float> mask = {1, 0, 1, 1};
    add("masked_mse", [=](Tape& t) { return t.masked_mse(pred, target, mask); },
        {pred, target});
  }
}

double grad_reverse_identity_error(float lambda, std::uint64_t seed) {
  Rng rng(seed);
  Tensor x = uniform({4, 6}, rng, -1, 1);
  Tensor w = uniform({6, 3}, rng, -1, 1, false);
  Tensor v = uniform({4, 3}, rng, -1, 1, false);

  x.zero_grad();
  {
    Tape tape;
    tape.backward(project(tape, tape.tanh(tape.matmul(x, w)), v));
  }
  const std::vector<float> plain(x.grad().begin(), x.grad().end());

  x.zero_grad();
  {
    Tape tape;
    tape.backward(project(tape, tape.tanh(tape.matmul(tape.grad_reverse(x, lambda), w)), v));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < plain.size(); ++i) {
    worst = std::max(worst, std::abs(double(x.grad()[i]) - double(-lambda * plain[i])));
  }
  return worst;
}

}  // namespace avnav::ad
