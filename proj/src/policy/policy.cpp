#include "avnav/policy/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "avnav/common/random.hpp"

namespace avnav::policy {
namespace {

// Magnitudes are compressed as 0.25 * log(1 + x / 0.01).
constexpr float kAudioFloor = 0.01f;
constexpr float kAudioScale = 0.25f;

}  // namespace

EncodedObservation encode_observation(const env::ObservationBundle& obs,
                                      const PolicyDims& dims) {
  const std::size_t plane = static_cast<std::size_t>(dims.spec_bins) * dims.spec_frames;
  if (obs.audio.left.size() != plane || obs.audio.right.size() != plane) {
    throw std::invalid_argument("encode_observation: spectrogram shape mismatch");
  }
  if (obs.depth.size() != static_cast<std::size_t>(dims.depth_rays)) {
    throw std::invalid_argument("encode_observation: depth ray count mismatch");
  }
  EncodedObservation out;
  out.audio.resize(2 * plane);
  for (std::size_t i = 0; i < plane; ++i) {
    out.audio[i] = kAudioScale * std::log1p(obs.audio.left[i] / kAudioFloor);
    out.audio[plane + i] = kAudioScale * std::log1p(obs.audio.right[i] / kAudioFloor);
  }
  out.depth.resize(obs.depth.size());
  const float inv = static_cast<float>(1.0 / dims.depth_max);
  for (std::size_t i = 0; i < obs.depth.size(); ++i) out.depth[i] = obs.depth[i] * inv;
  out.prev_action = static_cast<int>(obs.prev_action);
  return out;
}

ObservationBatch make_batch(std::span<const EncodedObservation> rows,
                            const PolicyDims& dims) {
  const std::size_t b = rows.size();
  const std::size_t a = dims.audio_input();
  const std::size_t r = static_cast<std::size_t>(dims.depth_rays);
  ObservationBatch batch{Tensor::zeros({b, a}), Tensor::zeros({b, r}),
                         Tensor::zeros({b, std::size_t{env::kNumActions}})};
  for (std::size_t i = 0; i < b; ++i) {
    if (rows[i].audio.size() != a || rows[i].depth.size() != r) {
      throw std::invalid_argument("make_batch: observation shape mismatch");
    }
    std::copy(rows[i].audio.begin(), rows[i].audio.end(),
              batch.audio.data().begin() + i * a);
    std::copy(rows[i].depth.begin(), rows[i].depth.end(),
              batch.depth.data().begin() + i * r);
    batch.prev_action[i * env::kNumActions + rows[i].prev_action] = 1.0f;
  }
  return batch;
}

std::string to_string(ParamGroup g) {
  switch (g) {
    case ParamGroup::kAudioEncoder: return "audio_encoder";
    case ParamGroup::kVisualEncoder: return "visual_encoder";
    case ParamGroup::kCore: return "core";
    case ParamGroup::kActor: return "actor";
    case ParamGroup::kCritic: return "critic";
    case ParamGroup::kAudioClassifier: return "audio_classifier";
    case ParamGroup::kLocationPredictor: return "location_predictor";
  }
  return "?";
}

Policy::Policy(PolicyDims dims, std::uint64_t seed)
    : dims_(dims),
      audio_encoder_("audio_encoder",
                     {dims.audio_input(), dims.audio_hidden, dims.audio_embed}, true),
      visual_encoder_("visual_encoder",
                      {static_cast<std::size_t>(dims.depth_rays), dims.visual_hidden,
                       dims.visual_embed},
                      true),
      core_("core", dims.fusion_input(), dims.core_hidden),
      actor_("actor", dims.core_hidden, env::kNumActions),
      critic_("critic", dims.core_hidden, 1),
      audio_classifier_("audio_classifier",
                        {dims.audio_embed, dims.head_hidden, dims.head_hidden,
                         dims.head_hidden,
                         static_cast<std::size_t>(dims.heard_categories)},
                        false),
      location_predictor_("location_predictor",
                          {dims.core_hidden, dims.head_hidden, dims.head_hidden,
                           dims.head_hidden, 4},
                          false) {
  if (dims.heard_categories < 2) {
    throw std::invalid_argument("Policy: need at least two heard categories");
  }
  std::mt19937_64 rng(derive_seed(seed, "policy-init"));
  audio_encoder_.init(rng);
  visual_encoder_.init(rng);
  core_.init(rng);
  actor_.init(rng, 0.01f);
  critic_.init(rng, 1.0f);
  audio_classifier_.init(rng);
  location_predictor_.init(rng);
}

Tensor Policy::encode_audio(Tape& tape, const Tensor& audio) const {
  return audio_encoder_.forward(tape, audio);
}

Tensor Policy::initial_hidden(std::size_t batch) const {
  return Tensor::zeros({batch, dims_.core_hidden});
}

PolicyOutput Policy::forward(Tape& tape, const ObservationBatch& obs,
                             const Tensor& hidden, float lambda,
                             ForwardHeads heads) const {
  if (hidden.rows() != obs.size() || hidden.cols() != dims_.core_hidden) {
    throw ad::ShapeError("Policy::forward: hidden state " +
                         ad::shape_string(hidden.shape()) + " for batch " +
                         std::to_string(obs.size()));
  }
  PolicyOutput out;
  out.audio_feature = audio_encoder_.forward(tape, obs.audio);
  const Tensor visual = visual_encoder_.forward(tape, obs.depth);
  const Tensor fused = tape.concat({out.audio_feature, visual, obs.prev_action});
  out.hidden = core_.forward(tape, fused, hidden);
  out.action_logits = actor_.forward(tape, out.hidden);
  out.value = critic_.forward(tape, out.hidden);
  if (heads.classifier) {
    out.class_logits = audio_classifier_.forward(
        tape, tape.grad_reverse(out.audio_feature, lambda));
  }
  if (heads.locator) {
    out.angle_pred = location_predictor_.forward(tape, out.hidden);
  }
  return out;
}

PolicyOutput Policy::forward_sequence(Tape& tape, const ObservationBatch& obs,
                                      const Tensor& hidden, std::span<const float> keep,
                                      std::size_t steps, float lambda,
                                      ForwardHeads heads) const {
  const std::size_t streams = hidden.rows();
  if (steps == 0 || obs.size() != steps * streams || keep.size() != obs.size() ||
      hidden.cols() != dims_.core_hidden) {
    throw ad::ShapeError("Policy::forward_sequence: " + std::to_string(obs.size()) +
                         " rows for " + std::to_string(steps) + " steps of " +
                         std::to_string(streams) + " streams");
  }
  PolicyOutput out;
  out.audio_feature = audio_encoder_.forward(tape, obs.audio);
  const Tensor visual = visual_encoder_.forward(tape, obs.depth);
  const Tensor fused = tape.concat({out.audio_feature, visual, obs.prev_action});
  std::vector<Tensor> states;
  states.reserve(steps);
  Tensor h = hidden;
  for (std::size_t t = 0; t < steps; ++t) {
    if (t > 0) {
      Tensor mask = Tensor::zeros({streams, dims_.core_hidden});
      for (std::size_t s = 0; s < streams; ++s) {
        std::fill_n(mask.data().begin() + s * dims_.core_hidden, dims_.core_hidden,
                    keep[(t - 1) * streams + s]);
      }
      h = tape.mul(h, mask);
    }
    const Tensor x =
        steps == 1 ? fused : tape.row_range(fused, t * streams, (t + 1) * streams);
    h = core_.forward(tape, x, h);
    states.push_back(h);
  }
  out.hidden = steps == 1 ? states[0] : tape.stack_rows(states);
  out.action_logits = actor_.forward(tape, out.hidden);
  out.value = critic_.forward(tape, out.hidden);
  if (heads.classifier) {
    out.class_logits = audio_classifier_.forward(
        tape, tape.grad_reverse(out.audio_feature, lambda));
  }
  if (heads.locator) {
    out.angle_pred = location_predictor_.forward(tape, out.hidden);
  }
  return out;
}

std::vector<NamedTensor> Policy::parameters(ParamGroup group) const {
  std::vector<NamedTensor> out;
  switch (group) {
    case ParamGroup::kAudioEncoder: audio_encoder_.append_params(out); break;
    case ParamGroup::kVisualEncoder: visual_encoder_.append_params(out); break;
    case ParamGroup::kCore: core_.append_params(out); break;
    case ParamGroup::kActor: actor_.append_params(out); break;
    case ParamGroup::kCritic: critic_.append_params(out); break;
    case ParamGroup::kAudioClassifier: audio_classifier_.append_params(out); break;
    case ParamGroup::kLocationPredictor: location_predictor_.append_params(out); break;
  }
  return out;
}

std::vector<NamedTensor> Policy::parameters() const {
  std::vector<NamedTensor> out;
  for (ParamGroup g :
       {ParamGroup::kAudioEncoder, ParamGroup::kVisualEncoder, ParamGroup::kCore,
        ParamGroup::kActor, ParamGroup::kCritic, ParamGroup::kAudioClassifier,
        ParamGroup::kLocationPredictor}) {
    auto part = parameters(g);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

void Policy::zero_parameters() {
  for (NamedTensor& p : parameters()) {
    std::fill(p.tensor.data().begin(), p.tensor.data().end(), 0.0f);
  }
}

void Policy::copy_from(const Policy& other) {
  auto dst = parameters();
  const auto src = other.parameters();
  if (dst.size() != src.size()) throw std::invalid_argument("copy_from: layout mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i].tensor.shape() != src[i].tensor.shape()) {
      throw std::invalid_argument("copy_from: shape mismatch for " + dst[i].name);
    }
    std::copy(src[i].tensor.data().begin(), src[i].tensor.data().end(),
              dst[i].tensor.data().begin());
  }
}

std::size_t Policy::parameter_count() const {
  std::size_t n = 0;
  for (const NamedTensor& p : parameters()) n += p.tensor.size();
  return n;
}

ActionChoice act(std::span<const float> logits, std::mt19937_64& rng,
                 ActMode mode) {
  if (logits.size() != env::kNumActions) {
    throw std::invalid_argument("act: expected 4 action logits");
  }
  const float mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (float l : logits) z += std::exp(double(l) - mx);
  const double log_z = mx + std::log(z);

  int chosen = 0;
  if (mode == ActMode::kGreedy) {
    for (int i = 1; i < env::kNumActions; ++i) {
      if (logits[i] > logits[chosen]) chosen = i;
    }
  } else {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double cumulative = 0.0;
    chosen = env::kNumActions - 1;
    for (int i = 0; i < env::kNumActions; ++i) {
      cumulative += std::exp(double(logits[i]) - log_z);
      if (u < cumulative) {
        chosen = i;
        break;
      }
    }
  }
  return {static_cast<env::Action>(chosen),
          static_cast<float>(logits[chosen] - log_z)};
}

double lambda_schedule(double n, double total, double bound) {
  if (!(total > 0.0)) throw std::invalid_argument("lambda_schedule: N must be > 0");
  if (n < 0.0 || n > total) {
    throw std::invalid_argument("lambda_schedule: n must lie in [0, N]");
  }
  return 2.0 * bound / (1.0 + std::exp(-10.0 * n / total)) - bound;
}

double decode_angle(double sin_pred, double cos_pred) {
  const double norm = std::hypot(sin_pred, cos_pred);
  if (norm == 0.0) throw std::invalid_argument("decode_angle: zero vector");
  return std::atan2(sin_pred / norm, cos_pred / norm);
}

std::array<float, 4> angle_targets(const env::RelativeAngles& angles) {
  return {static_cast<float>(std::sin(angles.yaw)),
          static_cast<float>(std::cos(angles.yaw)),
          static_cast<float>(std::sin(angles.pitch)),
          static_cast<float>(std::cos(angles.pitch))};
}

}  // namespace avnav::policy
