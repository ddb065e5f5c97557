#include "avnav/trainer/trainer.hpp"

#include <cinttypes>
#include <cstdio>
#include <deque>
#include <fstream>
#include <stdexcept>

#include "avnav/common/random.hpp"
#include "avnav/env/dataset_io.hpp"

namespace avnav::trainer {
namespace {

constexpr const char* kOptimizerPrefix = "optimizer.";

std::string meta_or_throw(const ad::Checkpoint& ckpt, const std::string& key) {
  const auto it = ckpt.meta.find(key);
  if (it == ckpt.meta.end()) {
    throw std::invalid_argument("checkpoint is missing meta key '" + key + "'");
  }
  return it->second;
}

std::string checkpoint_name(long update) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "update_%06ld", update);
  return buf;
}

ad::OptimizerConfig optimizer_config(const PpoConfig& ppo) {
  ad::OptimizerConfig c;
  c.mode = ppo.optimizer;
  c.epsilon = static_cast<float>(ppo.adam_epsilon);
  c.max_grad_norm = static_cast<float>(ppo.max_grad_norm);
  return c;
}

}  // namespace

std::string format_log_row(const UpdateRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%ld,%ld,%ld,%.9g,%.6g,%.9g,%.9g,%.9g,%.9g,%.9g", r.update,
                r.env_steps, r.episodes_completed, r.lambda, r.sr_rolling, r.losses.actor,
                r.losses.value, r.losses.entropy, r.losses.classifier, r.losses.locator);
  return buf;
}

ad::Checkpoint make_checkpoint(const RunConfig& config, const policy::Policy& policy,
                               const ad::Optimizer* optimizer, const TrainState& state) {
  ad::Checkpoint ckpt;
  const policy::PolicyDims& d = policy.dims();
  ckpt.meta["n"] = std::to_string(state.episodes_completed);
  ckpt.meta["N"] = std::to_string(config.ppo.total_episodes);
  ckpt.meta["b"] = config_value(config, "adversarial_bound");
  ckpt.meta["env_steps"] = std::to_string(state.env_steps);
  ckpt.meta["updates"] = std::to_string(state.updates);
  ckpt.meta["seed"] = std::to_string(config.ppo.seed);
  ckpt.meta["ablation"] = to_string(config.ablation);
  ckpt.meta["heard_categories"] = std::to_string(d.heard_categories);
  ckpt.meta["num_categories"] = std::to_string(config.num_categories);
  ckpt.meta["spec_bins"] = std::to_string(d.spec_bins);
  ckpt.meta["spec_frames"] = std::to_string(d.spec_frames);
  ckpt.meta["depth_rays"] = std::to_string(d.depth_rays);
  ckpt.meta["depth_max"] = config_value(config, "depth_max");
  ckpt.meta["dataset_seed"] = std::to_string(config.dataset_seed);
  ckpt.meta["ild_coefficient"] = config_value(config, "ild_coefficient");
  ckpt.meta["depth_fov_deg"] = config_value(config, "depth_fov_deg");
  ckpt.tensors = policy.parameters();
  if (optimizer != nullptr) {
    ckpt.meta["optimizer"] = ad::to_string(optimizer->config().mode);
    ckpt.meta["optimizer_steps"] = std::to_string(optimizer->step_count());
    for (const ad::NamedTensor& t : optimizer->state(kOptimizerPrefix)) {
      ckpt.tensors.push_back(t);
    }
  }
  return ckpt;
}

policy::PolicyDims dims_from_checkpoint(const ad::Checkpoint& ckpt) {
  policy::PolicyDims d;
  d.spec_bins = std::stoi(meta_or_throw(ckpt, "spec_bins"));
  d.spec_frames = std::stoi(meta_or_throw(ckpt, "spec_frames"));
  d.depth_rays = std::stoi(meta_or_throw(ckpt, "depth_rays"));
  d.depth_max = std::stod(meta_or_throw(ckpt, "depth_max"));
  d.heard_categories = std::stoi(meta_or_throw(ckpt, "heard_categories"));
  return d;
}

void load_policy(const ad::Checkpoint& ckpt, policy::Policy& policy) {
  const policy::PolicyDims d = dims_from_checkpoint(ckpt);
  const policy::PolicyDims& want = policy.dims();
  if (d.heard_categories != want.heard_categories) {
    throw std::invalid_argument("checkpoint has " + std::to_string(d.heard_categories) +
                                " heard categories, expected " +
                                std::to_string(want.heard_categories));
  }
  if (d.spec_bins != want.spec_bins || d.spec_frames != want.spec_frames ||
      d.depth_rays != want.depth_rays) {
    throw std::invalid_argument("checkpoint observation dimensions do not match");
  }
  auto params = policy.parameters();
  ad::assign_tensors(ckpt, params);
}

TrainResult train(const RunConfig& config, const std::vector<env::SceneGrid>& scenes,
                  const std::vector<env::Episode>& episodes, const UpdateHook& hook) {
  config.validate();
  if (episodes.empty()) throw std::invalid_argument("train: no training episodes");
  for (const env::Episode& ep : episodes) {
    if (ep.category_id < 0 || ep.category_id >= config.heard_categories) {
      throw std::invalid_argument("train: episode uses category " +
                                  std::to_string(ep.category_id) +
                                  " outside the heard set");
    }
    env::find_scene(scenes, ep.scene_id);
  }

  const PpoConfig ppo = config.effective_ppo();
  const std::uint64_t seed = ppo.seed;
  const acoustics::AcousticConfig acoustic = config.acoustic();
  const acoustics::SignatureBank bank(config.num_categories, acoustic.dataset_seed,
                                      acoustic.bins, acoustic.frames);

  policy::Policy net(config.policy_dims(), seed);
  ad::Optimizer optimizer(net.parameters(), optimizer_config(ppo));
  TrainState state;

  if (!config.resume_from.empty()) {
    const ad::Checkpoint ckpt = ad::load_checkpoint(config.resume_from);
    load_policy(ckpt, net);
    if (meta_or_throw(ckpt, "ablation") != to_string(config.ablation)) {
      throw std::invalid_argument("resume: checkpoint ablation mode differs");
    }
    state.episodes_completed = std::stol(meta_or_throw(ckpt, "n"));
    state.env_steps = std::stol(meta_or_throw(ckpt, "env_steps"));
    state.updates = std::stol(meta_or_throw(ckpt, "updates"));
    const auto mode = ckpt.meta.find("optimizer");
    if (mode != ckpt.meta.end() && mode->second == ad::to_string(ppo.optimizer)) {
      optimizer.load_state(ckpt.tensors, kOptimizerPrefix,
                           std::stol(meta_or_throw(ckpt, "optimizer_steps")));
    }
  }

  std::filesystem::create_directories(config.output_dir / "checkpoints");
  {
    std::ofstream cfg(config.output_dir / "config.yaml");
    if (!cfg) throw std::runtime_error("cannot write " + (config.output_dir / "config.yaml").string());
    write_run_config(cfg, config);
  }

  TrainResult result;
  result.log_path = config.output_dir / "train_log.csv";
  const bool append = !config.resume_from.empty() && std::filesystem::exists(result.log_path);
  std::ofstream log(result.log_path, append ? std::ios::app : std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + result.log_path.string());
  if (!append) log << kLogHeader << "\n" << std::flush;

  auto write_checkpoint = [&] {
    const std::filesystem::path stem =
        config.output_dir / "checkpoints" / checkpoint_name(state.updates);
    ad::save_checkpoint(stem, make_checkpoint(config, net, &optimizer, state));
    result.checkpoints.push_back(stem);
    result.final_checkpoint = stem;
    ++state.checkpoints_written;
  };
  write_checkpoint();

  // Streams restart from the update index so a resumed run stays deterministic.
  const std::uint64_t phase = static_cast<std::uint64_t>(state.updates);
  const EpisodePicker pick = [&episodes](std::mt19937_64& rng) -> const env::Episode& {
    std::uniform_int_distribution<std::size_t> d(0, episodes.size() - 1);
    return episodes[d(rng)];
  };
  std::vector<EnvSlot> slots;
  slots.reserve(static_cast<std::size_t>(ppo.num_envs));
  for (int e = 0; e < ppo.num_envs; ++e) {
    slots.push_back(EnvSlot{
        env::NavigationEnv(scenes, bank, acoustic, config.depth(), config.noise(),
                           derive_seed(seed, "noise", phase * 1024 + e)),
        {},
        {},
        std::mt19937_64(derive_seed(seed, "rollout", phase * 1024 + e)),
        std::mt19937_64(derive_seed(seed, "episode", phase * 1024 + e))});
    begin_episode(slots.back(), pick, net.dims());
  }
  std::mt19937_64 update_rng(derive_seed(seed, "minibatch", phase));

  std::deque<bool> recent;
  long successes_in_window = 0;
  RolloutBuffer buffer(ppo.rollout_length, ppo.num_envs, net.dims().core_hidden);
  const long total = ppo.total_episodes;

  while (state.episodes_completed < total &&
         (config.max_env_steps == 0 || state.env_steps < config.max_env_steps)) {
    PpoConfig step_ppo = ppo;
    if (config.anneal) {
      double progress = double(state.episodes_completed) / double(total);
      if (config.max_env_steps > 0) {
        progress = std::max(progress, double(state.env_steps) / double(config.max_env_steps));
      }
      const double keep = std::max(0.0, 1.0 - progress);
      step_ppo.learning_rate *= keep;
      step_ppo.entropy_coef *= keep;
    }
    const RolloutStats stats =
        collect_rollout(slots, net, ppo.rollout_length, pick, buffer);
    state.env_steps += stats.env_steps;
    for (const EpisodeOutcome& o : stats.completed) {
      ++state.episodes_completed;
      recent.push_back(o.success);
      successes_in_window += o.success ? 1 : 0;
      if (static_cast<int>(recent.size()) > config.sr_window) {
        successes_in_window -= recent.front() ? 1 : 0;
        recent.pop_front();
      }
    }
    const long n = std::min(state.episodes_completed, total);
    const double lambda =
        policy::lambda_schedule(double(n), double(total), ppo.adversarial_bound);
    const Advantages adv = gae_advantages(buffer, ppo.gamma, ppo.gae_lambda);
    const LossReport losses = ppo_update(net, optimizer, buffer, adv, step_ppo,
                                         static_cast<float>(lambda), update_rng);
    ++state.updates;

    UpdateRecord record;
    record.update = state.updates;
    record.env_steps = state.env_steps;
    record.episodes_completed = state.episodes_completed;
    record.lambda = lambda;
    record.sr_rolling = recent.empty() ? 0.0 : double(successes_in_window) / recent.size();
    record.losses = losses;
    log << format_log_row(record) << "\n" << std::flush;
    if (hook) hook(record, net);
    if (state.updates % config.checkpoint_every == 0) write_checkpoint();
  }
  if (result.final_checkpoint.filename() != checkpoint_name(state.updates)) {
    write_checkpoint();
  }
  result.state = state;
  return result;
}

TrainResult train(const RunConfig& config, const UpdateHook& hook) {
  if (config.train_scenes.empty() || config.train_episodes.empty()) {
    throw std::invalid_argument("train_scenes and train_episodes must be set");
  }
  const auto scenes = env::load_scenes(config.train_scenes);
  const auto episodes = env::load_episodes(config.train_episodes);
  return train(config, scenes, episodes, hook);
}

}  // namespace avnav::trainer
