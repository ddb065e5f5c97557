#ifndef AVNAV_EVAL_METRICS_HPP_
#define AVNAV_EVAL_METRICS_HPP_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "avnav/env/episode.hpp"
#include "avnav/env/navigation.hpp"
#include "avnav/env/scene.hpp"

namespace avnav::eval {

struct EpisodeResult {
  int episode_index = 0;
  int scene_id = 0;
  bool success = false;
  double path_length = 0.0;    // sum of per-step displacements; turns add 0
  double shortest_path = 0.0;  // geodesic start -> source
  int action_count = 0;        // Stop included
  int min_action_count = 0;    // optimal plan, Stop included
  int category_id = 0;
  bool heard = true;
  std::vector<env::AgentPose> trajectory;  // start pose, then one per step
};

struct MetricsSummary {
  std::string split;
  double sr = 0.0;
  double spl = 0.0;
  double sna = 0.0;
  std::size_t episodes = 0;
};

struct OracleResult {
  double length = 0.0;
  int min_actions = 0;
};

// Length by BFS over cells; action count by BFS over (cell, heading) with
// unit cost per move or turn, plus the final Stop. Throws env::SceneError if
// the goal is unreachable or either cell is blocked.
OracleResult shortest_path_oracle(const env::SceneGrid& scene, const env::AgentPose& start,
                                  env::Cell goal);

// One optimal action sequence from `start` to `goal`, ending in Stop.
std::vector<env::Action> oracle_plan(const env::SceneGrid& scene, const env::AgentPose& start,
                                     env::Cell goal);

// Cells of one shortest path from start to goal, both included.
std::vector<env::Cell> oracle_cell_path(const env::SceneGrid& scene, env::Cell start,
                                        env::Cell goal);

// SR, SPL and SNA means. Throws std::invalid_argument on empty input.
MetricsSummary compute_metrics(std::span<const EpisodeResult> results,
                               const std::string& split);

// One JSON object per line.
void write_results(std::ostream& os, std::span<const EpisodeResult> results);
std::vector<EpisodeResult> read_results(std::istream& is);
// CSV: split,SR,SPL,SNA,n_episodes
void write_summaries(std::ostream& os, std::span<const MetricsSummary> summaries);

}  // namespace avnav::eval

#endif  // AVNAV_EVAL_METRICS_HPP_
