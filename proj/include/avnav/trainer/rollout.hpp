#ifndef AVNAV_TRAINER_ROLLOUT_HPP_
#define AVNAV_TRAINER_ROLLOUT_HPP_

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <vector>

#include "avnav/env/navigation.hpp"
#include "avnav/policy/policy.hpp"

namespace avnav::trainer {

// Storage for one rollout. Step t of env e lives at index t * num_envs + e.
struct RolloutBuffer {
  int length = 0;
  int num_envs = 0;

  std::vector<policy::EncodedObservation> observations;
  std::vector<int> actions;
  std::vector<float> logprobs;
  std::vector<float> values;
  std::vector<float> rewards;
  std::vector<std::uint8_t> dones;      // episode ended with this step
  std::vector<float> hidden;            // [capacity, H] recurrent input state
  std::vector<int> categories;
  std::vector<std::array<float, 4>> angle_targets;
  std::vector<std::uint8_t> at_source;  // 1 where the angles are undefined
  std::vector<env::AgentPose> poses;    // pose at observation time
  std::vector<env::Episode> episodes;   // episode each step belongs to
  std::vector<float> bootstrap_values;  // V(s_T) per env

  std::size_t hidden_size = 0;

  RolloutBuffer() = default;
  RolloutBuffer(int length, int num_envs, std::size_t hidden_size);

  std::size_t capacity() const {
    return static_cast<std::size_t>(length) * static_cast<std::size_t>(num_envs);
  }
  std::size_t index(int t, int env) const {
    return static_cast<std::size_t>(t) * num_envs + env;
  }
};

// One environment plus the policy-side state that persists across rollouts.
struct EnvSlot {
  env::NavigationEnv env;
  policy::EncodedObservation observation;
  std::vector<float> hidden;
  std::mt19937_64 action_rng;
  std::mt19937_64 episode_rng;
};

struct EpisodeOutcome {
  int env = 0;
  bool success = false;
  int steps = 0;
  int category_id = 0;
};

// Chooses the next episode for an env slot.
using EpisodePicker = std::function<const env::Episode&(std::mt19937_64&)>;

// Sampling function used for acting; defaults to policy::act in sample mode.
using ActionSelector =
    std::function<policy::ActionChoice(std::span<const float>, std::mt19937_64&)>;

struct RolloutStats {
  std::vector<EpisodeOutcome> completed;  // in completion order
  long env_steps = 0;
};

// Resets `slot` onto the next episode and clears its hidden state.
void begin_episode(EnvSlot& slot, const EpisodePicker& pick,
                   const policy::PolicyDims& dims);

// Steps every env `length` times with the frozen policy. Finished episodes
// auto-reset; completions are reported in (step, env index) order.
RolloutStats collect_rollout(std::vector<EnvSlot>& slots, const policy::Policy& policy,
                             int length, const EpisodePicker& pick, RolloutBuffer& out,
                             const ActionSelector& select = {});

struct Advantages {
  std::vector<float> advantages;  // raw, not normalised
  std::vector<float> returns;     // advantages + values
};

// Generalised advantage estimation per env column, masking across episode
// boundaries. Episodes that time out are treated as terminal.
Advantages gae_advantages(const RolloutBuffer& buffer, double gamma, double gae_lambda);

// In-place mean 0 / std 1 over the whole vector (std floored at 1e-8).
void normalize(std::vector<float>& values);

}  // namespace avnav::trainer

#endif  // AVNAV_TRAINER_ROLLOUT_HPP_
