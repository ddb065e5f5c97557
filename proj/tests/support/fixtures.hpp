// Shared helpers for the trainer, evaluation and acceptance tests.
#ifndef AVNAV_TESTS_SUPPORT_FIXTURES_HPP_
#define AVNAV_TESTS_SUPPORT_FIXTURES_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "avnav/acoustics/acoustics.hpp"
#include "avnav/autodiff/optimizer.hpp"
#include "avnav/autodiff/tape.hpp"
#include "avnav/env/episode.hpp"
#include "avnav/env/navigation.hpp"
#include "avnav/env/scene.hpp"
#include "avnav/policy/policy.hpp"
#include "avnav/trainer/config.hpp"
#include "avnav/trainer/ppo.hpp"
#include "avnav/trainer/rollout.hpp"

namespace avnav::testing {

struct SmallWorld {
  std::vector<env::SceneGrid> scenes;
  std::vector<env::Episode> episodes;
};

inline SmallWorld small_world(int scene_count = 2, int per_scene = 20, int size = 12,
                              int categories = 8, std::uint64_t seed = 1) {
  SmallWorld w;
  std::vector<int> cats(static_cast<std::size_t>(categories));
  std::iota(cats.begin(), cats.end(), 0);
  for (int s = 0; s < scene_count; ++s) {
    w.scenes.push_back(env::generate_scene(seed * 1000 + s, size, size, 2, s));
    const auto eps = env::generate_episodes(w.scenes.back(), per_scene, seed * 7919 + s, cats);
    w.episodes.insert(w.episodes.end(), eps.begin(), eps.end());
  }
  return w;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("avnav_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Env slots plus everything they borrow, kept alive together.
struct RolloutRig {
  SmallWorld world;
  acoustics::AcousticConfig acoustic;
  acoustics::SignatureBank bank;
  std::vector<trainer::EnvSlot> slots;
  trainer::EpisodePicker pick;

  RolloutRig(SmallWorld w, int num_envs, const policy::PolicyDims& dims,
             std::uint64_t seed = 5)
      : world(std::move(w)), bank(12, acoustic.dataset_seed, acoustic.bins, acoustic.frames) {
    pick = [this](std::mt19937_64& rng) -> const env::Episode& {
      std::uniform_int_distribution<std::size_t> d(0, world.episodes.size() - 1);
      return world.episodes[d(rng)];
    };
    slots.reserve(static_cast<std::size_t>(num_envs));
    for (int e = 0; e < num_envs; ++e) {
      slots.push_back(trainer::EnvSlot{
          env::NavigationEnv(world.scenes, bank, acoustic, env::DepthConfig{}, {}, seed + e),
          {},
          {},
          std::mt19937_64(seed * 31 + e),
          std::mt19937_64(seed * 17 + e)});
      trainer::begin_episode(slots.back(), pick, dims);
    }
  }
  RolloutRig(const RolloutRig&) = delete;
  RolloutRig& operator=(const RolloutRig&) = delete;
};

// Exhaustive breadth-first enumeration of (cell, heading) states; each move
// or turn costs one action and Stop adds one more.
inline int enumerate_min_actions(const env::SceneGrid& s, const env::AgentPose& start,
                                 env::Cell goal) {
  auto key = [&](int x, int y, env::Heading h) {
    return (y * s.width() + x) * 4 + static_cast<int>(h);
  };
  std::vector<int> dist(static_cast<std::size_t>(s.width() * s.height() * 4), -1);
  std::deque<env::AgentPose> queue{start};
  dist[key(start.x, start.y, start.heading)] = 0;
  while (!queue.empty()) {
    const env::AgentPose p = queue.front();
    queue.pop_front();
    const int d = dist[key(p.x, p.y, p.heading)];
    if (p.cell() == goal) return d + 1;
    std::array<env::AgentPose, 3> next{p, p, p};
    next[0].heading = env::turn_left(p.heading);
    next[1].heading = env::turn_right(p.heading);
    const env::Cell step = env::heading_step(p.heading);
    if (s.free({p.x + step.x, p.y + step.y})) {
      next[2].x += step.x;
      next[2].y += step.y;
    }
    for (const env::AgentPose& n : next) {
      int& slot = dist[key(n.x, n.y, n.heading)];
      if (slot < 0) {
        slot = d + 1;
        queue.push_back(n);
      }
    }
  }
  return -1;
}

using GradMap = std::map<std::string, std::vector<float>>;

inline void zero_grads(const policy::Policy& p) {
  for (const ad::NamedTensor& t : p.parameters()) const_cast<ad::Tensor&>(t.tensor).zero_grad();
}

inline GradMap snapshot_grads(const policy::Policy& p) {
  GradMap out;
  for (const ad::NamedTensor& t : p.parameters()) {
    const ad::Tensor& x = t.tensor;
    out[t.name] = x.has_grad() ? std::vector<float>(x.grad().begin(), x.grad().end())
                               : std::vector<float>(x.size(), 0.0f);
  }
  return out;
}

inline GradMap snapshot_values(const policy::Policy& p) {
  GradMap out;
  for (const ad::NamedTensor& t : p.parameters()) {
    out[t.name] = std::vector<float>(t.tensor.data().begin(), t.tensor.data().end());
  }
  return out;
}

// Minibatch covering the whole single-env buffer as one sequence, exactly as
// ppo_update builds it with epochs = minibatches = 1.
inline trainer::Minibatch whole_buffer_batch(const trainer::RolloutBuffer& buffer,
                                             const trainer::Advantages& adv,
                                             const policy::PolicyDims& dims) {
  std::vector<float> a = adv.advantages;
  trainer::normalize(a);
  std::vector<std::size_t> rows(buffer.capacity());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  trainer::Minibatch mb = trainer::gather_minibatch(buffer, a, adv.returns, rows, dims);
  mb.hidden = ad::Tensor::from({1, buffer.hidden_size},
                               {mb.hidden.data().begin(),
                                mb.hidden.data().begin() + buffer.hidden_size});
  mb.steps = buffer.capacity();
  return mb;
}

struct UpdateRuleReport {
  // Worst |measured - predicted| divided by the allowed float32 slack.
  double worst_ratio = 0.0;
  std::string worst_param;
  // Largest |update| seen, to show the check is not vacuous.
  double largest_update = 0.0;
  bool classifier_moved = false;
  bool encoder_moved = false;
};

// Runs one plain-gradient PPO update on a recorded single-env buffer and
// compares every parameter against the closed forms
//   classifier:    theta - lr * w_C dL_C/dtheta
//   audio encoder: theta - lr * (dL_O/dtheta - lambda * w_C dL_C/dtheta)
//   everything else: theta - lr * dL_O/dtheta
// where L_O is the objective without the classifier term and dL_C is the
// plain (unreversed) gradient.
inline UpdateRuleReport check_update_rules(const policy::PolicyDims& dims,
                                           const trainer::RolloutBuffer& buffer,
                                           const policy::Policy& start,
                                           trainer::PpoConfig config, float lambda) {
  config.optimizer = ad::OptimizerMode::kPlain;
  config.max_grad_norm = 0.0;
  config.update_epochs = 1;
  config.minibatches = 1;
  config.num_envs = 1;
  config.rollout_length = buffer.length;
  config.sequence_length = buffer.length;
  const float lr = static_cast<float>(config.learning_rate);
  const float wc = static_cast<float>(config.classifier_weight);

  const trainer::Advantages adv =
      trainer::gae_advantages(buffer, config.gamma, config.gae_lambda);
  const trainer::Minibatch mb = whole_buffer_batch(buffer, adv, dims);

  policy::Policy ref(dims, 0);
  ref.copy_from(start);
  const GradMap before = snapshot_values(ref);

  trainer::PpoConfig objective = config;
  objective.classifier_weight = 0.0;
  zero_grads(ref);
  {
    ad::Tape tape;
    const auto loss = trainer::minibatch_loss(tape, ref, mb, objective, lambda);
    tape.backward(loss.total);
  }
  const GradMap g_main = snapshot_grads(ref);

  zero_grads(ref);
  {
    ad::Tape tape;
    const auto out = ref.forward_sequence(tape, mb.observations, mb.hidden, mb.keep, mb.steps,
                                          -1.0f, {true, false});
    tape.backward(tape.affine(tape.cross_entropy(out.class_logits, mb.categories), wc));
  }
  const GradMap g_cls = snapshot_grads(ref);

  std::map<std::string, bool> is_classifier, is_encoder;
  for (const auto& t : ref.parameters(policy::ParamGroup::kAudioClassifier)) {
    is_classifier[t.name] = true;
  }
  for (const auto& t : ref.parameters(policy::ParamGroup::kAudioEncoder)) {
    is_encoder[t.name] = true;
  }

  policy::Policy live(dims, 0);
  live.copy_from(start);
  ad::OptimizerConfig oc;
  oc.mode = ad::OptimizerMode::kPlain;
  ad::Optimizer opt(live.parameters(), oc);
  std::mt19937_64 rng(1);
  trainer::ppo_update(live, opt, buffer, adv, config, lambda, rng);
  const GradMap after = snapshot_values(live);

  UpdateRuleReport report;
  constexpr double kUlp = std::numeric_limits<float>::epsilon();
  for (const auto& [name, theta] : before) {
    const auto& gm = g_main.at(name);
    const auto& gc = g_cls.at(name);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      double g = gm[i];
      double scale = std::abs(gm[i]);
      if (is_classifier.count(name)) {
        g = gc[i];
        scale = std::abs(gc[i]);
      } else if (is_encoder.count(name)) {
        g = gm[i] - double(lambda) * gc[i];
        scale = std::abs(gm[i]) + std::abs(double(lambda) * gc[i]);
      }
      const double predicted = theta[i] - double(lr) * g;
      const double measured = after.at(name)[i];
      // Two float32 roundings of theta plus relative error in the gradient sum.
      const double slack = 2.0 * kUlp * std::abs(theta[i]) + 1e-5 * lr * scale + 1e-12;
      const double ratio = std::abs(measured - predicted) / slack;
      if (ratio > report.worst_ratio) {
        report.worst_ratio = ratio;
        report.worst_param = name;
      }
      const double moved = std::abs(measured - theta[i]);
      report.largest_update = std::max(report.largest_update, moved);
      if (moved > 0.0 && is_classifier.count(name)) report.classifier_moved = true;
      if (moved > 0.0 && is_encoder.count(name)) report.encoder_moved = true;
    }
  }
  return report;
}

}  // namespace avnav::testing

#endif  // AVNAV_TESTS_SUPPORT_FIXTURES_HPP_
