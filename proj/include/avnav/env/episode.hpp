#ifndef AVNAV_ENV_EPISODE_HPP_
#define AVNAV_ENV_EPISODE_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "avnav/env/scene.hpp"

namespace avnav::env {

// Counter-clockwise order, so TurnLeft is +1 (mod 4).
enum class Heading : int { kPosX = 0, kPosY = 1, kNegX = 2, kNegY = 3 };

Heading turn_left(Heading h);
Heading turn_right(Heading h);
Cell heading_step(Heading h);
double heading_angle(Heading h);

struct AgentPose {
  int x = 0;
  int y = 0;
  Heading heading = Heading::kPosX;

  Cell cell() const { return {x, y}; }
  friend bool operator==(const AgentPose&, const AgentPose&) = default;
};

inline constexpr int kMaxEpisodeSteps = 150;
inline constexpr double kMinGeodesic = 4.0;
inline constexpr double kMinGeodesicRatio = 1.1;

struct Episode {
  int scene_id = 0;
  AgentPose start;
  int source_x = 0;
  int source_y = 0;
  double source_elevation = 0.0;
  int category_id = 0;
  int max_steps = kMaxEpisodeSteps;

  Cell source() const { return {source_x, source_y}; }
  friend bool operator==(const Episode&, const Episode&) = default;
};

// Rejects pairs closer than 4 units along the graph or whose shortest path is
// nearly straight (geodesic / euclidean < 1.1).
bool passes_episode_filters(double geodesic, double euclidean);

// Re-checks every Episode invariant against the scene.
bool is_valid_episode(const SceneGrid& scene, const Episode& episode);

// Rejection sampling over (start, heading, source, elevation, category).
// Elevation is drawn from {0, 1, 2}; category uniformly from `categories`.
// Throws SceneError if the filters cannot be met within a bounded number of
// draws.
std::vector<Episode> generate_episodes(const SceneGrid& scene, int count,
                                       std::uint64_t rng_seed,
                                       std::span<const int> categories);

}  // namespace avnav::env

#endif  // AVNAV_ENV_EPISODE_HPP_
