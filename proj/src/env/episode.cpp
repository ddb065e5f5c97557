#include "avnav/env/episode.hpp"

#include <numbers>
#include <random>

namespace avnav::env {

Heading turn_left(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 1) % 4);
}

Heading turn_right(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 3) % 4);
}

Cell heading_step(Heading h) {
  switch (h) {
    case Heading::kPosX: return {1, 0};
    case Heading::kPosY: return {0, 1};
    case Heading::kNegX: return {-1, 0};
    case Heading::kNegY: return {0, -1};
  }
  return {0, 0};
}

double heading_angle(Heading h) {
  return static_cast<int>(h) * std::numbers::pi / 2.0;
}

bool passes_episode_filters(double geodesic, double euclidean) {
  if (geodesic < kMinGeodesic) return false;
  if (euclidean <= 0.0) return false;
  return geodesic / euclidean >= kMinGeodesicRatio;
}

bool is_valid_episode(const SceneGrid& scene, const Episode& episode) {
  const Cell start = episode.start.cell();
  const Cell source = episode.source();
  if (scene.blocked(start) || scene.blocked(source) || start == source) {
    return false;
  }
  if (episode.source_elevation < 0.0 || episode.max_steps != kMaxEpisodeSteps) {
    return false;
  }
  const int hops = distance_field(scene, source)[scene.index(start)];
  if (hops < 0) return false;
  return passes_episode_filters(hops * SceneGrid::kSpacing,
                                euclidean_distance(start, source));
}

std::vector<Episode> generate_episodes(const SceneGrid& scene, int count,
                                       std::uint64_t rng_seed,
                                       std::span<const int> categories) {
  if (categories.empty()) {
    throw std::invalid_argument("generate_episodes: empty category pool");
  }
  const auto cells = scene.free_cells();
  if (cells.size() < 2) {
    throw SceneError("generate_episodes: scene has fewer than two free cells");
  }
  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<std::size_t> pick_cell(0, cells.size() - 1);
  std::uniform_int_distribution<int> pick_heading(0, 3);
  std::uniform_int_distribution<int> pick_elevation(0, 2);
  std::uniform_int_distribution<std::size_t> pick_category(0,
                                                           categories.size() - 1);

  const long max_draws = 1000L * std::max(count, 1);
  std::vector<Episode> out;
  out.reserve(count);
  for (long draw = 0; static_cast<int>(out.size()) < count; ++draw) {
    if (draw >= max_draws) {
      throw SceneError("generate_episodes: only " + std::to_string(out.size()) +
                       " of " + std::to_string(count) +
                       " episodes passed the filters in scene " +
                       std::to_string(scene.scene_id()));
    }
    // Every field is drawn each time so the stream advances uniformly.
    const Cell start = cells[pick_cell(rng)];
    const Cell source = cells[pick_cell(rng)];
    const auto heading = static_cast<Heading>(pick_heading(rng));
    const int elevation = pick_elevation(rng);
    const int category = categories[pick_category(rng)];
    if (start == source) continue;
    const double geo = geodesic_distance(scene, start, source);
    if (!passes_episode_filters(geo, euclidean_distance(start, source))) continue;
    Episode e;
    e.scene_id = scene.scene_id();
    e.start = {start.x, start.y, heading};
    e.source_x = source.x;
    e.source_y = source.y;
    e.source_elevation = elevation;
    e.category_id = category;
    out.push_back(e);
  }
  return out;
}

}  // namespace avnav::env
