#ifndef AVNAV_TRAINER_TRAINER_HPP_
#define AVNAV_TRAINER_TRAINER_HPP_

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "avnav/autodiff/checkpoint.hpp"
#include "avnav/env/episode.hpp"
#include "avnav/env/scene.hpp"
#include "avnav/policy/policy.hpp"
#include "avnav/trainer/config.hpp"
#include "avnav/trainer/ppo.hpp"

namespace avnav::trainer {

struct TrainState {
  long episodes_completed = 0;  // n
  long env_steps = 0;
  long updates = 0;
  int checkpoints_written = 0;
};

struct UpdateRecord {
  long update = 0;
  long env_steps = 0;
  long episodes_completed = 0;
  double lambda = 0.0;
  double sr_rolling = 0.0;
  LossReport losses;
};

// Called after every update with the freshly updated policy.
using UpdateHook = std::function<void(const UpdateRecord&, const policy::Policy&)>;

struct TrainResult {
  TrainState state;
  std::filesystem::path log_path;
  std::filesystem::path final_checkpoint;
  std::vector<std::filesystem::path> checkpoints;
};

inline const char* const kLogHeader =
    "update,env_steps,n,lambda,sr_rolling,loss_actor,loss_value,loss_entropy,loss_C,loss_P";

std::string format_log_row(const UpdateRecord& record);

// Checkpoint meta keys shared with evaluation.
ad::Checkpoint make_checkpoint(const RunConfig& config, const policy::Policy& policy,
                               const ad::Optimizer* optimizer, const TrainState& state);
// Loads policy parameters; throws std::invalid_argument when the checkpoint
// was written for different dimensions or category counts.
void load_policy(const ad::Checkpoint& checkpoint, policy::Policy& policy);
policy::PolicyDims dims_from_checkpoint(const ad::Checkpoint& checkpoint);

// PPO training with both auxiliary heads. Writes <output_dir>/train_log.csv,
// <output_dir>/config.yaml and checkpoints under <output_dir>/checkpoints;
// the last one written is TrainResult::final_checkpoint. Runs until n
// reaches total_episodes (or max_env_steps, when set).
TrainResult train(const RunConfig& config, const std::vector<env::SceneGrid>& scenes,
                  const std::vector<env::Episode>& episodes, const UpdateHook& hook = {});

// Loads train_scenes / train_episodes from the config paths.
TrainResult train(const RunConfig& config, const UpdateHook& hook = {});

}  // namespace avnav::trainer

#endif  // AVNAV_TRAINER_TRAINER_HPP_
