#ifndef AVNAV_EVAL_EVALUATE_HPP_
#define AVNAV_EVAL_EVALUATE_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include "avnav/acoustics/acoustics.hpp"
#include "avnav/env/navigation.hpp"
#include "avnav/eval/metrics.hpp"
#include "avnav/policy/policy.hpp"

namespace avnav::eval {

// Something that picks actions episode by episode.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual void begin(const env::Episode& episode, const env::ObservationBundle& first) = 0;
  virtual env::Action act(const env::ObservationBundle& obs, const env::NavigationEnv& env) = 0;
};

// Greedy (argmax) acting with the recurrent policy.
class PolicyAgent : public Agent {
 public:
  explicit PolicyAgent(const policy::Policy& policy);
  void begin(const env::Episode& episode, const env::ObservationBundle& first) override;
  env::Action act(const env::ObservationBundle& obs, const env::NavigationEnv& env) override;

 private:
  const policy::Policy* policy_;
  ad::Tensor hidden_;
  std::mt19937_64 rng_;  // required by act(); greedy mode never draws
};

// Uniform over the four actions.
class RandomAgent : public Agent {
 public:
  explicit RandomAgent(std::uint64_t seed);
  void begin(const env::Episode& episode, const env::ObservationBundle& first) override;
  env::Action act(const env::ObservationBundle& obs, const env::NavigationEnv& env) override;

 private:
  std::uint64_t seed_;
  std::mt19937_64 rng_;
};

// Privileged agent that follows an optimal (cell, heading) plan to the source.
class OracleAgent : public Agent {
 public:
  void begin(const env::Episode& episode, const env::ObservationBundle& first) override;
  env::Action act(const env::ObservationBundle& obs, const env::NavigationEnv& env) override;

 private:
  std::vector<env::Action> plan_;
  std::size_t next_ = 0;
};

struct EvalConfig {
  acoustics::AcousticConfig acoustic;
  env::DepthConfig depth;
  env::SensorNoise noise;
  int heard_categories = 8;
  std::uint64_t noise_seed = 1;
};

struct EvalReport {
  std::vector<MetricsSummary> summaries;  // "heard" and/or "unheard", then "all"
  std::vector<EpisodeResult> results;     // in episode order
};

// Runs one episode to completion and scores it against the oracle.
EpisodeResult run_episode(Agent& agent, env::NavigationEnv& env, const env::Episode& episode,
                          int episode_index, int heard_categories);

// Every episode runs in a fresh environment whose noise stream depends only
// on (noise_seed, episode index), so results do not depend on order.
EvalReport evaluate_agent(Agent& agent, const std::vector<env::SceneGrid>& scenes,
                          const std::vector<env::Episode>& episodes,
                          const acoustics::SignatureBank& bank, const EvalConfig& config);

// Greedy evaluation of a policy. Throws std::invalid_argument when the
// policy's heard-category count differs from the config's.
EvalReport evaluate(const policy::Policy& policy, const std::vector<env::SceneGrid>& scenes,
                    const std::vector<env::Episode>& episodes,
                    const acoustics::SignatureBank& bank, const EvalConfig& config);

}  // namespace avnav::eval

#endif  // AVNAV_EVAL_EVALUATE_HPP_
