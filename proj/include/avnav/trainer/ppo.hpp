#ifndef AVNAV_TRAINER_PPO_HPP_
#define AVNAV_TRAINER_PPO_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include "avnav/autodiff/optimizer.hpp"
#include "avnav/policy/policy.hpp"
#include "avnav/trainer/config.hpp"
#include "avnav/trainer/rollout.hpp"

namespace avnav::trainer {

struct LossReport {
  double actor = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double classifier = 0.0;
  double locator = 0.0;
  double total = 0.0;
  int minibatches = 0;
};

// Gathered minibatch inputs; rows index into the rollout buffer. With
// steps > 1 the rows are time-major over hidden.rows() sequences.
struct Minibatch {
  policy::ObservationBatch observations;
  ad::Tensor hidden;          // [B, H], or [B / steps, H] for sequences
  std::size_t steps = 1;
  std::vector<float> keep;    // per row; 0 where the episode ended at that step
  std::vector<int> actions;
  ad::Tensor old_logprobs;    // [B, 1]
  ad::Tensor advantages;      // [B, 1]
  ad::Tensor returns;         // [B, 1]
  std::vector<int> categories;
  ad::Tensor angle_targets;   // [B, 4]
  std::vector<float> locator_mask;  // per row; 0 at the source
};

Minibatch gather_minibatch(const RolloutBuffer& buffer, const std::vector<float>& advantages,
                           const std::vector<float>& returns,
                           std::span<const std::size_t> rows,
                           const policy::PolicyDims& dims);

struct MinibatchLoss {
  ad::Tensor total;
  ad::Tensor actor;
  ad::Tensor value;
  ad::Tensor entropy;
  ad::Tensor classifier;  // undefined when the classifier weight is 0
  ad::Tensor locator;     // undefined when the locator weight is 0 or fully masked
};

// Builds the combined objective on `tape`:
//   actor + c_v value - c_e entropy + w_C classifier + w_P locator
// The classifier sees the audio feature through grad_reverse(lambda).
MinibatchLoss minibatch_loss(ad::Tape& tape, const policy::Policy& policy,
                             const Minibatch& batch, const PpoConfig& config,
                             float lambda);

// Runs update_epochs passes of minibatches over the buffer, one optimizer
// step per minibatch. The buffer is cut into per-env sequences of
// sequence_length steps; each minibatch unrolls a shuffled subset of them
// from their stored first hidden state. Advantages are normalised over the
// whole buffer first. `rng` drives the shuffling.
LossReport ppo_update(policy::Policy& policy, ad::Optimizer& optimizer,
                      const RolloutBuffer& buffer, const Advantages& advantages,
                      const PpoConfig& config, float lambda, std::mt19937_64& rng);

}  // namespace avnav::trainer

#endif  // AVNAV_TRAINER_PPO_HPP_
