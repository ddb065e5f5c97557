#include "avnav/trainer/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace avnav::trainer {

RolloutBuffer::RolloutBuffer(int length_, int num_envs_, std::size_t hidden_size_)
    : length(length_), num_envs(num_envs_), hidden_size(hidden_size_) {
  if (length < 1 || num_envs < 1) {
    throw std::invalid_argument("RolloutBuffer: length and num_envs must be >= 1");
  }
  const std::size_t n = capacity();
  observations.resize(n);
  actions.resize(n);
  logprobs.resize(n);
  values.resize(n);
  rewards.resize(n);
  dones.resize(n);
  hidden.resize(n * hidden_size);
  categories.resize(n);
  angle_targets.resize(n);
  at_source.resize(n);
  poses.resize(n);
  episodes.resize(n);
  bootstrap_values.resize(static_cast<std::size_t>(num_envs));
}

void begin_episode(EnvSlot& slot, const EpisodePicker& pick,
                   const policy::PolicyDims& dims) {
  const env::Episode& episode = pick(slot.episode_rng);
  slot.observation = policy::encode_observation(slot.env.reset(episode), dims);
  slot.hidden.assign(dims.core_hidden, 0.0f);
}

namespace {

policy::ObservationBatch current_batch(const std::vector<EnvSlot>& slots,
                                       const policy::PolicyDims& dims) {
  std::vector<policy::EncodedObservation> rows;
  rows.reserve(slots.size());
  for (const EnvSlot& s : slots) rows.push_back(s.observation);
  return policy::make_batch(rows, dims);
}

ad::Tensor current_hidden(const std::vector<EnvSlot>& slots, std::size_t h) {
  ad::Tensor out = ad::Tensor::zeros({slots.size(), h});
  for (std::size_t e = 0; e < slots.size(); ++e) {
    std::copy(slots[e].hidden.begin(), slots[e].hidden.end(),
              out.data().begin() + e * h);
  }
  return out;
}

}  // namespace

RolloutStats collect_rollout(std::vector<EnvSlot>& slots, const policy::Policy& policy,
                             int length, const EpisodePicker& pick, RolloutBuffer& out,
                             const ActionSelector& select) {
  const policy::PolicyDims& dims = policy.dims();
  const int num_envs = static_cast<int>(slots.size());
  const std::size_t h = dims.core_hidden;
  if (out.length != length || out.num_envs != num_envs || out.hidden_size != h) {
    out = RolloutBuffer(length, num_envs, h);
  }
  RolloutStats stats;
  for (int t = 0; t < length; ++t) {
    ad::Tape tape(false);
    const policy::PolicyOutput fwd =
        policy.forward(tape, current_batch(slots, dims), current_hidden(slots, h), 0.0f,
                       {false, false});
    for (int e = 0; e < num_envs; ++e) {
      EnvSlot& slot = slots[e];
      const std::size_t i = out.index(t, e);
      const std::span<const float> logits(fwd.action_logits.data().data() + e * env::kNumActions,
                                          env::kNumActions);
      const policy::ActionChoice choice =
          select ? select(logits, slot.action_rng)
                 : policy::act(logits, slot.action_rng, policy::ActMode::kSample);

      const env::AgentPose pose = slot.env.pose();
      const env::Episode& episode = slot.env.episode();
      out.observations[i] = slot.observation;
      out.actions[i] = static_cast<int>(choice.action);
      out.logprobs[i] = choice.logprob;
      out.values[i] = fwd.value[static_cast<std::size_t>(e)];
      std::copy(slot.hidden.begin(), slot.hidden.end(), out.hidden.begin() + i * h);
      out.categories[i] = episode.category_id;
      out.poses[i] = pose;
      out.episodes[i] = episode;
      out.at_source[i] = pose.cell() == episode.source() ? 1 : 0;
      out.angle_targets[i] = policy::angle_targets(env::relative_angles(pose, episode));

      const env::StepResult step = slot.env.step(choice.action);
      ++stats.env_steps;
      out.rewards[i] = static_cast<float>(step.reward);
      out.dones[i] = step.done ? 1 : 0;
      if (step.done) {
        stats.completed.push_back(
            {e, step.info.success, slot.env.step_index(), episode.category_id});
        begin_episode(slot, pick, dims);
      } else {
        slot.observation = policy::encode_observation(step.observation, dims);
        std::copy(fwd.hidden.data().begin() + e * h,
                  fwd.hidden.data().begin() + (e + 1) * h, slot.hidden.begin());
      }
    }
  }
  ad::Tape tape(false);
  const policy::PolicyOutput last =
      policy.forward(tape, current_batch(slots, dims), current_hidden(slots, h), 0.0f,
                     {false, false});
  for (int e = 0; e < num_envs; ++e) {
    out.bootstrap_values[e] = last.value[static_cast<std::size_t>(e)];
  }
  return stats;
}

Advantages gae_advantages(const RolloutBuffer& buffer, double gamma, double gae_lambda) {
  Advantages out;
  out.advantages.assign(buffer.capacity(), 0.0f);
  out.returns.assign(buffer.capacity(), 0.0f);
  for (int e = 0; e < buffer.num_envs; ++e) {
    double running = 0.0;
    double next_value = buffer.bootstrap_values[e];
    for (int t = buffer.length - 1; t >= 0; --t) {
      const std::size_t i = buffer.index(t, e);
      const double live = buffer.dones[i] ? 0.0 : 1.0;
      const double delta = buffer.rewards[i] + gamma * next_value * live - buffer.values[i];
      running = delta + gamma * gae_lambda * live * running;
      out.advantages[i] = static_cast<float>(running);
      out.returns[i] = static_cast<float>(running + buffer.values[i]);
      next_value = buffer.values[i];
    }
  }
  return out;
}

void normalize(std::vector<float>& values) {
  if (values.empty()) return;
  double mean = 0.0;
  for (float v : values) mean += v;
  mean /= double(values.size());
  double var = 0.0;
  for (float v : values) var += (v - mean) * (v - mean);
  var /= double(values.size());
  const double std = std::max(std::sqrt(var), 1e-8);
  for (float& v : values) v = static_cast<float>((v - mean) / std);
}

}  // namespace avnav::trainer
