#include "avnav/trainer/ppo.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace avnav::trainer {

Minibatch gather_minibatch(const RolloutBuffer& buffer, const std::vector<float>& advantages,
                           const std::vector<float>& returns,
                           std::span<const std::size_t> rows,
                           const policy::PolicyDims& dims) {
  const std::size_t b = rows.size();
  const std::size_t h = buffer.hidden_size;
  std::vector<policy::EncodedObservation> obs;
  obs.reserve(b);
  Minibatch mb;
  mb.hidden = ad::Tensor::zeros({b, h});
  mb.old_logprobs = ad::Tensor::zeros({b, 1});
  mb.advantages = ad::Tensor::zeros({b, 1});
  mb.returns = ad::Tensor::zeros({b, 1});
  mb.angle_targets = ad::Tensor::zeros({b, 4});
  mb.actions.resize(b);
  mb.categories.resize(b);
  mb.locator_mask.resize(b);
  mb.keep.resize(b);
  for (std::size_t k = 0; k < b; ++k) {
    const std::size_t i = rows[k];
    if (i >= buffer.capacity()) throw std::out_of_range("gather_minibatch: row index");
    obs.push_back(buffer.observations[i]);
    std::copy(buffer.hidden.begin() + i * h, buffer.hidden.begin() + (i + 1) * h,
              mb.hidden.data().begin() + k * h);
    mb.actions[k] = buffer.actions[i];
    mb.old_logprobs[k] = buffer.logprobs[i];
    mb.advantages[k] = advantages[i];
    mb.returns[k] = returns[i];
    mb.categories[k] = buffer.categories[i];
    for (int j = 0; j < 4; ++j) mb.angle_targets[k * 4 + j] = buffer.angle_targets[i][j];
    mb.locator_mask[k] = buffer.at_source[i] ? 0.0f : 1.0f;
    mb.keep[k] = buffer.dones[i] ? 0.0f : 1.0f;
  }
  mb.observations = policy::make_batch(obs, dims);
  return mb;
}

MinibatchLoss minibatch_loss(ad::Tape& tape, const policy::Policy& policy,
                             const Minibatch& batch, const PpoConfig& config,
                             float lambda) {
  const bool use_classifier = config.classifier_weight > 0.0;
  const bool use_locator = config.locator_weight > 0.0;
  const std::size_t steps = batch.steps == 0 ? 1 : batch.steps;
  const policy::PolicyOutput out =
      policy.forward_sequence(tape, batch.observations, batch.hidden, batch.keep, steps,
                              lambda, {use_classifier, use_locator});

  MinibatchLoss loss;
  const ad::Tensor logp_all = tape.log_softmax(out.action_logits);
  const ad::Tensor logp = tape.gather(logp_all, batch.actions);
  const ad::Tensor ratio = tape.exp(tape.sub(logp, batch.old_logprobs));
  const float eps = static_cast<float>(config.clip_epsilon);
  const ad::Tensor unclipped = tape.mul(ratio, batch.advantages);
  const ad::Tensor clipped =
      tape.mul(tape.clamp(ratio, 1.0f - eps, 1.0f + eps), batch.advantages);
  loss.actor = tape.affine(tape.mean(tape.minimum(unclipped, clipped)), -1.0f);
  loss.value = tape.mse(out.value, batch.returns);
  loss.entropy = tape.affine(
      tape.mean(tape.row_sum(tape.mul(tape.exp(logp_all), logp_all))), -1.0f);

  ad::Tensor total = tape.add(
      loss.actor, tape.affine(loss.value, static_cast<float>(config.value_coef)));
  total = tape.sub(total, tape.affine(loss.entropy, static_cast<float>(config.entropy_coef)));
  if (use_classifier) {
    loss.classifier = tape.cross_entropy(out.class_logits, batch.categories);
    total = tape.add(
        total, tape.affine(loss.classifier, static_cast<float>(config.classifier_weight)));
  }
  if (use_locator) {
    loss.locator = tape.masked_mse(out.angle_pred, batch.angle_targets, batch.locator_mask);
    total = tape.add(total,
                     tape.affine(loss.locator, static_cast<float>(config.locator_weight)));
  }
  loss.total = total;
  return loss;
}

LossReport ppo_update(policy::Policy& policy, ad::Optimizer& optimizer,
                      const RolloutBuffer& buffer, const Advantages& advantages,
                      const PpoConfig& config, float lambda, std::mt19937_64& rng) {
  std::vector<float> adv = advantages.advantages;
  normalize(adv);
  const std::size_t len = static_cast<std::size_t>(config.sequence_length);
  const std::size_t envs = buffer.num_envs;
  if (len == 0 || buffer.length % len != 0) {
    throw std::invalid_argument("ppo_update: sequence_length must divide the rollout length");
  }
  // Sequence k covers env k % envs, steps [(k / envs) * len, +len).
  const std::size_t sequences = buffer.length / len * envs;
  const std::size_t per_batch = sequences / static_cast<std::size_t>(config.minibatches);
  std::vector<std::size_t> order(sequences);

  LossReport report;
  for (int epoch = 0; epoch < config.update_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (int m = 0; m < config.minibatches; ++m) {
      const std::size_t begin = m * per_batch;
      const std::size_t end = m + 1 == config.minibatches ? sequences : begin + per_batch;
      const std::size_t streams = end - begin;
      std::vector<std::size_t> rows;
      rows.reserve(streams * len);
      for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t j = begin; j < end; ++j) {
          const std::size_t k = order[j];
          rows.push_back(((k / envs) * len + t) * envs + k % envs);
        }
      }
      Minibatch mb = gather_minibatch(buffer, adv, advantages.returns, rows, policy.dims());
      // Only the first step of each sequence starts from a stored state.
      mb.hidden = ad::Tensor::from({streams, buffer.hidden_size},
                                   {mb.hidden.data().begin(),
                                    mb.hidden.data().begin() + streams * buffer.hidden_size});
      mb.steps = len;
      ad::Tape tape;
      MinibatchLoss loss;
      try {
        loss = minibatch_loss(tape, policy, mb, config, lambda);
        optimizer.zero_grad();
        tape.backward(loss.total);
        optimizer.step(static_cast<float>(config.learning_rate));
      } catch (const ad::NonFiniteError& e) {
        std::ostringstream dump;
        dump << "non-finite value during PPO update (epoch " << epoch << ", minibatch "
             << m << ", lambda " << lambda << ", rows " << rows.size()
             << ", gradient norm " << optimizer.grad_norm() << "): " << e.what();
        throw ad::NonFiniteError(dump.str());
      }
      report.actor += loss.actor.item();
      report.value += loss.value.item();
      report.entropy += loss.entropy.item();
      if (loss.classifier.defined()) report.classifier += loss.classifier.item();
      if (loss.locator.defined()) report.locator += loss.locator.item();
      report.total += loss.total.item();
      ++report.minibatches;
    }
  }
  if (report.minibatches > 0) {
    const double k = report.minibatches;
    report.actor /= k;
    report.value /= k;
    report.entropy /= k;
    report.classifier /= k;
    report.locator /= k;
    report.total /= k;
  }
  return report;
}

}  // namespace avnav::trainer
