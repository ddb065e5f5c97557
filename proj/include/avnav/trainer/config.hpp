#ifndef AVNAV_TRAINER_CONFIG_HPP_
#define AVNAV_TRAINER_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "avnav/acoustics/acoustics.hpp"
#include "avnav/autodiff/optimizer.hpp"
#include "avnav/env/navigation.hpp"
#include "avnav/policy/policy.hpp"

namespace avnav::trainer {

enum class AblationMode { kFull, kNoClassifier, kNoLocator, kNone };

AblationMode parse_ablation(const std::string& s);
std::string to_string(AblationMode mode);

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  int update_epochs = 4;
  int minibatches = 4;
  double learning_rate = 2.5e-4;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double locator_weight = 1.0;     // w_P
  double classifier_weight = 1.0;  // w_C
  double adversarial_bound = 1.0;  // b
  long total_episodes = 20000;     // N
  int rollout_length = 128;
  // Steps per training sequence for the recurrent core; 1 trains each step
  // from its stored hidden state alone.
  int sequence_length = 16;
  int num_envs = 4;
  std::uint64_t seed = 1;
  ad::OptimizerMode optimizer = ad::OptimizerMode::kAdam;
  double max_grad_norm = 0.5;
  double adam_epsilon = 1e-5;

  void validate() const;
};

// Every key a run accepts. Flat: one `key: value` per line in the config
// file (YAML syntax). Unknown keys are rejected.
struct RunConfig {
  PpoConfig ppo;
  AblationMode ablation = AblationMode::kFull;

  // Stop early once this many environment steps have been taken (0: never).
  long max_env_steps = 0;
  // Decay learning rate and entropy bonus linearly to zero over the run
  // (progress is the larger of the step and episode fractions).
  bool anneal = false;
  int checkpoint_every = 50;
  int sr_window = 100;
  bool deterministic = true;

  int spec_bins = 16;
  int spec_frames = 16;
  double ild_coefficient = 0.8;
  std::uint64_t dataset_seed = 1;
  int num_categories = 12;
  int heard_categories = 8;

  int depth_rays = 16;
  double depth_fov_deg = 90.0;
  double depth_max = 10.0;

  std::optional<double> audio_snr_db;
  double depth_noise_std = 0.0;

  std::filesystem::path train_scenes;
  std::filesystem::path train_episodes;
  std::filesystem::path eval_scenes;
  std::filesystem::path eval_episodes;
  int eval_every = 0;
  std::filesystem::path output_dir = "run";
  std::filesystem::path resume_from;

  void validate() const;

  acoustics::AcousticConfig acoustic() const;
  env::DepthConfig depth() const;
  env::SensorNoise noise() const;
  policy::PolicyDims policy_dims() const;
  // PPO config after applying the ablation mode.
  PpoConfig effective_ppo() const;
  bool classifier_enabled() const;
  bool locator_enabled() const;
};

struct ConfigKey {
  std::string name;
  std::string description;
};

// Documented schema, in file order.
const std::vector<ConfigKey>& config_schema();

// Applies `key -> value` assignments on top of `base`. Throws
// std::invalid_argument for unknown keys or unparsable values.
void apply_overrides(RunConfig& config,
                     const std::map<std::string, std::string>& values);

RunConfig load_run_config(const std::filesystem::path& path,
                          const RunConfig& base = {});
void write_run_config(std::ostream& os, const RunConfig& config);
std::string config_value(const RunConfig& config, const std::string& key);

}  // namespace avnav::trainer

#endif  // AVNAV_TRAINER_CONFIG_HPP_
