#include "avnav/policy/gradcheck.hpp"

#include <random>

#include "avnav/policy/policy.hpp"

namespace avnav::policy {
namespace {

Tensor random_tensor(ad::Shape shape, std::mt19937_64& rng, float lo, float hi) {
  Tensor t = Tensor::zeros(std::move(shape));
  std::uniform_real_distribution<float> d(lo, hi);
  for (float& v : t.data()) v = d(rng);
  return t;
}

std::vector<Tensor> tensors_of(const std::vector<NamedTensor>& params) {
  std::vector<Tensor> out;
  for (const NamedTensor& p : params) out.push_back(p.tensor);
  return out;
}

Tensor project(Tape& tape, const Tensor& out, const Tensor& w) {
  return tape.sum(tape.mul(out, w));
}

}  // namespace

ad::GradCheckReport run_gradcheck_suite(double tolerance, std::uint64_t seed) {
  ad::GradCheckOptions options;
  options.seed = seed;
  ad::GradCheckReport report;
  ad::check_primitives(report, tolerance, options);

  std::mt19937_64 rng(seed);
  const PolicyDims dims;
  auto add = [&](const std::string& name, const ad::LossBuilder& f,
                 const std::vector<Tensor>& leaves) {
    const ad::GradientError e = ad::gradient_error(f, leaves, options);
    report.entries.push_back({name, e.relative, tolerance, e.compared, e.skipped});
  };

  {
    Mlp head("audio_classifier",
             {dims.audio_embed, dims.head_hidden, dims.head_hidden, dims.head_hidden,
              static_cast<std::size_t>(dims.heard_categories)},
             false);
    head.init(rng);
    Tensor x = random_tensor({6, dims.audio_embed}, rng, 0.0f, 1.0f);
    x.set_requires_grad(true);
    const std::vector<int> labels = {0, 3, 7, 1, 5, 2};
    std::vector<NamedTensor> params;
    head.append_params(params);
    auto leaves = tensors_of(params);
    leaves.push_back(x);
    add("head.audio_classifier",
        [=](Tape& t) { return t.cross_entropy(head.forward(t, x), labels); }, leaves);
  }
  {
    Mlp head("location_predictor",
             {dims.core_hidden, dims.head_hidden, dims.head_hidden, dims.head_hidden, 4},
             false);
    head.init(rng);
    Tensor x = random_tensor({6, dims.core_hidden}, rng, -1.0f, 1.0f);
    x.set_requires_grad(true);
    const Tensor target = random_tensor({6, 4}, rng, -1.0f, 1.0f);
    const std::vector<float> mask = {1, 1, 0, 1, 1, 1};
    std::vector<NamedTensor> params;
    head.append_params(params);
    auto leaves = tensors_of(params);
    leaves.push_back(x);
    add("head.location_predictor",
        [=](Tape& t) { return t.masked_mse(head.forward(t, x), target, mask); }, leaves);
  }
  {
    GruCell core("core", dims.fusion_input(), dims.core_hidden);
    core.init(rng);
    Tensor x = random_tensor({3, dims.fusion_input()}, rng, -1.0f, 1.0f);
    Tensor h = random_tensor({3, dims.core_hidden}, rng, -1.0f, 1.0f);
    x.set_requires_grad(true);
    h.set_requires_grad(true);
    const Tensor w = random_tensor({3, dims.core_hidden}, rng, -1.0f, 1.0f);
    std::vector<NamedTensor> params;
    core.append_params(params);
    auto leaves = tensors_of(params);
    leaves.push_back(x);
    leaves.push_back(h);
    // Two steps so the recurrent weights see a non-trivial state.
    add("core.gru",
        [=](Tape& t) { return project(t, core.forward(t, x, core.forward(t, x, h)), w); },
        leaves);
  }
  {
    const Policy net(dims, seed);
    const std::size_t b = 3;
    ObservationBatch obs{random_tensor({b, dims.audio_input()}, rng, 0.0f, 1.0f),
                         random_tensor({b, std::size_t(dims.depth_rays)}, rng, 0.0f, 1.0f),
                         Tensor::zeros({b, std::size_t{env::kNumActions}})};
    for (std::size_t i = 0; i < b; ++i) obs.prev_action[i * env::kNumActions + i] = 1.0f;
    Tensor h = random_tensor({b, dims.core_hidden}, rng, -1.0f, 1.0f);
    const Tensor w_logits = random_tensor({b, 4}, rng, -1.0f, 1.0f);
    const Tensor w_value = random_tensor({b, 1}, rng, -1.0f, 1.0f);
    const Tensor w_angle = random_tensor({b, 4}, rng, -1.0f, 1.0f);
    const Tensor w_hidden = random_tensor({b, dims.core_hidden}, rng, -1.0f, 1.0f);
    const std::vector<int> labels = {2, 0, 6};
    add("policy.full",
        [=](Tape& t) {
          const PolicyOutput out = net.forward(t, obs, h, -1.0f);
          Tensor loss = project(t, out.action_logits, w_logits);
          loss = t.add(loss, project(t, out.value, w_value));
          loss = t.add(loss, project(t, out.angle_pred, w_angle));
          loss = t.add(loss, project(t, out.hidden, w_hidden));
          return t.add(loss, t.cross_entropy(out.class_logits, labels));
        },
        tensors_of(net.parameters()));
  }
  for (float lambda : {0.0f, 0.5f, 1.0f}) {
    report.entries.push_back({"grad_reverse.lambda=" + std::to_string(lambda).substr(0, 3),
                              ad::grad_reverse_identity_error(lambda, seed), 0.0, 24, 0});
  }
  return report;
}

}  // namespace avnav::policy
