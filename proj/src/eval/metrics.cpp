#include "avnav/eval/metrics.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <istream>
#include <ostream>
#include <queue>
#include <stdexcept>

#include <json.hpp>

namespace avnav::eval {
namespace {

using env::AgentPose;
using env::Cell;
using env::Heading;
using env::SceneGrid;

int state_index(const SceneGrid& scene, const AgentPose& p) {
  return scene.index(p.cell()) * 4 + static_cast<int>(p.heading);
}

AgentPose state_pose(const SceneGrid& scene, int s) {
  const Cell c = scene.cell(s / 4);
  return {c.x, c.y, static_cast<Heading>(s % 4)};
}

AgentPose apply(const SceneGrid& scene, const AgentPose& p, env::Action a) {
  AgentPose q = p;
  switch (a) {
    case env::Action::kMoveForward: {
      const Cell d = env::heading_step(p.heading);
      const Cell next{p.x + d.x, p.y + d.y};
      if (scene.free(next)) {
        q.x = next.x;
        q.y = next.y;
      }
      break;
    }
    case env::Action::kTurnLeft: q.heading = env::turn_left(p.heading); break;
    case env::Action::kTurnRight: q.heading = env::turn_right(p.heading); break;
    case env::Action::kStop: break;
  }
  return q;
}

void check_endpoints(const SceneGrid& scene, Cell start, Cell goal) {
  if (scene.blocked(start)) throw env::SceneError("oracle: start cell is blocked");
  if (scene.blocked(goal)) throw env::SceneError("oracle: goal cell is blocked");
}

constexpr std::array<env::Action, 3> kMotions = {
    env::Action::kMoveForward, env::Action::kTurnLeft, env::Action::kTurnRight};

}  // namespace

std::vector<env::Action> oracle_plan(const SceneGrid& scene, const AgentPose& start,
                                     Cell goal) {
  check_endpoints(scene, start.cell(), goal);
  const int n = scene.width() * scene.height() * 4;
  std::vector<int> parent(static_cast<std::size_t>(n), -2);
  std::vector<std::int8_t> via(static_cast<std::size_t>(n), -1);
  std::queue<int> frontier;
  const int s0 = state_index(scene, start);
  parent[s0] = -1;
  frontier.push(s0);
  int reached = -1;
  while (!frontier.empty()) {
    const int s = frontier.front();
    frontier.pop();
    const AgentPose p = state_pose(scene, s);
    if (p.cell() == goal) {
      reached = s;
      break;
    }
    for (env::Action a : kMotions) {
      const int t = state_index(scene, apply(scene, p, a));
      if (parent[t] != -2) continue;
      parent[t] = s;
      via[t] = static_cast<std::int8_t>(a);
      frontier.push(t);
    }
  }
  if (reached < 0) throw env::SceneError("oracle: goal is unreachable");
  std::vector<env::Action> plan{env::Action::kStop};
  for (int s = reached; parent[s] != -1; s = parent[s]) {
    plan.push_back(static_cast<env::Action>(via[s]));
  }
  std::reverse(plan.begin(), plan.end());
  return plan;
}

std::vector<Cell> oracle_cell_path(const SceneGrid& scene, Cell start, Cell goal) {
  check_endpoints(scene, start, goal);
  const std::vector<int> field = env::distance_field(scene, goal);
  if (field[scene.index(start)] < 0) throw env::SceneError("oracle: goal is unreachable");
  static constexpr std::array<Cell, 4> kSteps = {{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
  std::vector<Cell> path{start};
  Cell c = start;
  while (!(c == goal)) {
    for (const Cell d : kSteps) {
      const Cell next{c.x + d.x, c.y + d.y};
      if (scene.free(next) && field[scene.index(next)] == field[scene.index(c)] - 1) {
        c = next;
        break;
      }
    }
    path.push_back(c);
  }
  return path;
}

OracleResult shortest_path_oracle(const SceneGrid& scene, const AgentPose& start,
                                  Cell goal) {
  check_endpoints(scene, start.cell(), goal);
  OracleResult out;
  out.length = env::geodesic_distance(scene, start.cell(), goal);
  out.min_actions = static_cast<int>(oracle_plan(scene, start, goal).size());
  return out;
}

MetricsSummary compute_metrics(std::span<const EpisodeResult> results,
                               const std::string& split) {
  if (results.empty()) throw std::invalid_argument("compute_metrics: no episodes");
  MetricsSummary m;
  m.split = split;
  m.episodes = results.size();
  // Summed in sorted order so the result does not depend on episode order.
  std::vector<double> spl;
  std::vector<double> sna;
  for (const EpisodeResult& r : results) {
    if (!r.success) continue;
    spl.push_back(r.shortest_path / std::max(r.path_length, r.shortest_path));
    sna.push_back(double(r.min_action_count) / std::max(r.action_count, r.min_action_count));
  }
  std::sort(spl.begin(), spl.end());
  std::sort(sna.begin(), sna.end());
  const double k = double(results.size());
  m.sr = double(spl.size()) / k;
  for (double v : spl) m.spl += v;
  for (double v : sna) m.sna += v;
  m.spl /= k;
  m.sna /= k;
  return m;
}

void write_results(std::ostream& os, std::span<const EpisodeResult> results) {
  for (const EpisodeResult& r : results) {
    nlohmann::json traj = nlohmann::json::array();
    for (const AgentPose& p : r.trajectory) {
      traj.push_back({p.x, p.y, static_cast<int>(p.heading)});
    }
    const nlohmann::json j = {{"episode", r.episode_index},
                              {"scene", r.scene_id},
                              {"category", r.category_id},
                              {"split", r.heard ? "heard" : "unheard"},
                              {"success", r.success},
                              {"path_length", r.path_length},
                              {"shortest_path", r.shortest_path},
                              {"actions", r.action_count},
                              {"min_actions", r.min_action_count},
                              {"trajectory", traj}};
    os << j.dump() << "\n";
  }
}

std::vector<EpisodeResult> read_results(std::istream& is) {
  std::vector<EpisodeResult> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    EpisodeResult r;
    r.episode_index = j.at("episode").get<int>();
    r.scene_id = j.at("scene").get<int>();
    r.category_id = j.at("category").get<int>();
    r.heard = j.at("split").get<std::string>() == "heard";
    r.success = j.at("success").get<bool>();
    r.path_length = j.at("path_length").get<double>();
    r.shortest_path = j.at("shortest_path").get<double>();
    r.action_count = j.at("actions").get<int>();
    r.min_action_count = j.at("min_actions").get<int>();
    for (const auto& p : j.at("trajectory")) {
      r.trajectory.push_back(
          {p.at(0).get<int>(), p.at(1).get<int>(), static_cast<Heading>(p.at(2).get<int>())});
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_summaries(std::ostream& os, std::span<const MetricsSummary> summaries) {
  os << "split,SR,SPL,SNA,n_episodes\n";
  char buf[256];
  for (const MetricsSummary& m : summaries) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%zu\n", m.split.c_str(), m.sr, m.spl,
                  m.sna, m.episodes);
    os << buf;
  }
}

}  // namespace avnav::eval
