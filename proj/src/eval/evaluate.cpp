#include "avnav/eval/evaluate.hpp"

#include <stdexcept>

#include "avnav/common/random.hpp"

namespace avnav::eval {

PolicyAgent::PolicyAgent(const policy::Policy& policy) : policy_(&policy) {}

void PolicyAgent::begin(const env::Episode&, const env::ObservationBundle&) {
  hidden_ = policy_->initial_hidden(1);
}

env::Action PolicyAgent::act(const env::ObservationBundle& obs, const env::NavigationEnv&) {
  const policy::EncodedObservation enc = policy::encode_observation(obs, policy_->dims());
  ad::Tape tape(false);
  const policy::PolicyOutput out =
      policy_->forward(tape, policy::make_batch(std::span(&enc, 1), policy_->dims()),
                       hidden_, 0.0f, {false, false});
  hidden_ = out.hidden.detach();
  return policy::act(out.action_logits.data(), rng_, policy::ActMode::kGreedy).action;
}

RandomAgent::RandomAgent(std::uint64_t seed) : seed_(seed), rng_(seed) {}

void RandomAgent::begin(const env::Episode& episode, const env::ObservationBundle&) {
  const std::uint64_t key =
      mix64(static_cast<std::uint64_t>(episode.scene_id)) ^
      mix64(static_cast<std::uint64_t>(episode.start.y * 4096 + episode.start.x)) * 3 ^
      mix64(static_cast<std::uint64_t>(episode.source_y * 4096 + episode.source_x)) * 5;
  rng_.seed(derive_seed(seed_, "random-agent", key));
}

env::Action RandomAgent::act(const env::ObservationBundle&, const env::NavigationEnv&) {
  return static_cast<env::Action>(
      std::uniform_int_distribution<int>(0, env::kNumActions - 1)(rng_));
}

void OracleAgent::begin(const env::Episode&, const env::ObservationBundle&) {
  plan_.clear();
  next_ = 0;
}

env::Action OracleAgent::act(const env::ObservationBundle&, const env::NavigationEnv& env) {
  if (plan_.empty()) plan_ = oracle_plan(env.scene(), env.pose(), env.episode().source());
  if (next_ >= plan_.size()) return env::Action::kStop;
  return plan_[next_++];
}

EpisodeResult run_episode(Agent& agent, env::NavigationEnv& env, const env::Episode& episode,
                          int episode_index, int heard_categories) {
  EpisodeResult r;
  r.episode_index = episode_index;
  r.scene_id = episode.scene_id;
  r.category_id = episode.category_id;
  r.heard = episode.category_id < heard_categories;
  env::ObservationBundle obs = env.reset(episode);
  const OracleResult oracle =
      shortest_path_oracle(env.scene(), episode.start, episode.source());
  r.shortest_path = oracle.length;
  r.min_action_count = oracle.min_actions;
  r.trajectory.push_back(env.pose());
  agent.begin(episode, obs);
  while (!env.done()) {
    const env::AgentPose before = env.pose();
    const env::StepResult step = env.step(agent.act(obs, env));
    ++r.action_count;
    const env::AgentPose& after = env.pose();
    if (!(after.cell() == before.cell())) r.path_length += env::SceneGrid::kSpacing;
    r.trajectory.push_back(after);
    r.success = step.info.success;
    obs = step.observation;
  }
  return r;
}

namespace {

EvalReport summarize(std::vector<EpisodeResult> results) {
  EvalReport report;
  std::vector<EpisodeResult> heard;
  std::vector<EpisodeResult> unheard;
  for (const EpisodeResult& r : results) (r.heard ? heard : unheard).push_back(r);
  if (!heard.empty()) report.summaries.push_back(compute_metrics(heard, "heard"));
  if (!unheard.empty()) report.summaries.push_back(compute_metrics(unheard, "unheard"));
  if (!results.empty()) report.summaries.push_back(compute_metrics(results, "all"));
  report.results = std::move(results);
  return report;
}

}  // namespace

EvalReport evaluate_agent(Agent& agent, const std::vector<env::SceneGrid>& scenes,
                          const std::vector<env::Episode>& episodes,
                          const acoustics::SignatureBank& bank, const EvalConfig& config) {
  for (const env::Episode& ep : episodes) {
    if (ep.category_id < 0 || ep.category_id >= bank.size()) {
      throw std::invalid_argument("evaluate: episode category " +
                                  std::to_string(ep.category_id) +
                                  " has no sound signature");
    }
  }
  std::vector<EpisodeResult> results;
  results.reserve(episodes.size());
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    env::NavigationEnv env(scenes, bank, config.acoustic, config.depth, config.noise,
                           derive_seed(config.noise_seed, "eval-noise", i));
    results.push_back(
        run_episode(agent, env, episodes[i], static_cast<int>(i), config.heard_categories));
  }
  return summarize(std::move(results));
}

EvalReport evaluate(const policy::Policy& policy, const std::vector<env::SceneGrid>& scenes,
                    const std::vector<env::Episode>& episodes,
                    const acoustics::SignatureBank& bank, const EvalConfig& config) {
  if (policy.dims().heard_categories != config.heard_categories) {
    throw std::invalid_argument("evaluate: policy was trained on " +
                                std::to_string(policy.dims().heard_categories) +
                                " heard categories, evaluation expects " +
                                std::to_string(config.heard_categories));
  }
  PolicyAgent agent(policy);
  return evaluate_agent(agent, scenes, episodes, bank, config);
}

}  // namespace avnav::eval
