#include "avnav/env/scene.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include "avnav/common/random.hpp"

namespace avnav::env {

std::string to_string(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  throw std::invalid_argument("unknown split '" + s + "'");
}

SceneGrid::SceneGrid(int width, int height, int scene_id, Split split,
                     std::uint64_t seed)
    : width_(width),
      height_(height),
      scene_id_(scene_id),
      split_(split),
      seed_(seed),
      occupancy_(static_cast<std::size_t>(width) * height, 0) {}

std::vector<Cell> SceneGrid::free_cells() const {
  std::vector<Cell> out;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (free({x, y})) out.push_back({x, y});
    }
  }
  return out;
}

namespace {

struct Room {
  int x0, y0, x1, y1;  // inclusive interior bounds
  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
};

constexpr int kMinRoomSide = 2;

// Splits the room along its longer side with a wall and a door gap of one or
// two cells. Returns false if the room is too small to split.
bool split_room(SceneGrid& grid, const Room& room, std::mt19937_64& rng,
                Room& first, Room& second) {
  const bool vertical_wall = room.width() >= room.height();
  const int lo = (vertical_wall ? room.x0 : room.y0) + kMinRoomSide;
  const int hi = (vertical_wall ? room.x1 : room.y1) - kMinRoomSide;
  if (lo > hi) return false;
  const int wall = std::uniform_int_distribution<int>(lo, hi)(rng);
  const int span_lo = vertical_wall ? room.y0 : room.x0;
  const int span_hi = vertical_wall ? room.y1 : room.x1;
  const int door_width =
      std::min(std::uniform_int_distribution<int>(1, 2)(rng), span_hi - span_lo + 1);
  const int door =
      std::uniform_int_distribution<int>(span_lo, span_hi - door_width + 1)(rng);
  for (int s = span_lo; s <= span_hi; ++s) {
    if (s >= door && s < door + door_width) continue;
    grid.set_blocked(vertical_wall ? Cell{wall, s} : Cell{s, wall}, true);
  }
  if (vertical_wall) {
    first = {room.x0, room.y0, wall - 1, room.y1};
    second = {wall + 1, room.y0, room.x1, room.y1};
  } else {
    first = {room.x0, room.y0, room.x1, wall - 1};
    second = {room.x0, wall + 1, room.x1, room.y1};
  }
  return true;
}

std::size_t reachable_count(const SceneGrid& scene, Cell source) {
  const auto field = distance_field(scene, source);
  return static_cast<std::size_t>(
      std::count_if(field.begin(), field.end(), [](int d) { return d >= 0; }));
}

}  // namespace

SceneGrid generate_scene(std::uint64_t scene_seed, int width, int height,
                         int room_count, int scene_id, Split split) {
  if (width < 8 || height < 8) {
    throw std::invalid_argument("generate_scene: width and height must be >= 8");
  }
  if (room_count < 1) {
    throw std::invalid_argument("generate_scene: room_count must be >= 1");
  }
  constexpr int kMaxAttempts = 200;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::mt19937_64 rng(derive_seed(scene_seed, "scene", attempt));
    SceneGrid grid(width, height, scene_id, split, scene_seed);
    for (int x = 0; x < width; ++x) {
      grid.set_blocked({x, 0}, true);
      grid.set_blocked({x, height - 1}, true);
    }
    for (int y = 0; y < height; ++y) {
      grid.set_blocked({0, y}, true);
      grid.set_blocked({width - 1, y}, true);
    }

    std::vector<Room> rooms{{1, 1, width - 2, height - 2}};
    bool ok = true;
    while (static_cast<int>(rooms.size()) < room_count) {
      // Split the largest room; ties resolved by list order.
      auto largest = std::max_element(
          rooms.begin(), rooms.end(), [](const Room& a, const Room& b) {
            return a.width() * a.height() < b.width() * b.height();
          });
      Room a{}, b{};
      if (!split_room(grid, *largest, rng, a, b)) {
        ok = false;
        break;
      }
      *largest = a;
      rooms.push_back(b);
    }
    if (!ok) {
      throw SceneError("generate_scene: " + std::to_string(room_count) +
                       " rooms do not fit in " + std::to_string(width) + "x" +
                       std::to_string(height) + " (seed " +
                       std::to_string(scene_seed) + ")");
    }
    if (is_valid_scene(grid)) return grid;
  }
  throw SceneError("generate_scene: no connected layout after " +
                   std::to_string(kMaxAttempts) + " attempts (seed " +
                   std::to_string(scene_seed) + ")");
}

bool is_valid_scene(const SceneGrid& scene) {
  for (int x = 0; x < scene.width(); ++x) {
    if (scene.free({x, 0}) || scene.free({x, scene.height() - 1})) return false;
  }
  for (int y = 0; y < scene.height(); ++y) {
    if (scene.free({0, y}) || scene.free({scene.width() - 1, y})) return false;
  }
  const auto cells = scene.free_cells();
  if (cells.empty()) return false;
  return reachable_count(scene, cells.front()) == cells.size();
}

std::vector<int> distance_field(const SceneGrid& scene, Cell source) {
  std::vector<int> dist(static_cast<std::size_t>(scene.width()) * scene.height(),
                        -1);
  if (scene.blocked(source)) return dist;
  std::deque<Cell> queue{source};
  dist[scene.index(source)] = 0;
  constexpr int dx[4] = {1, 0, -1, 0};
  constexpr int dy[4] = {0, 1, 0, -1};
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    const int d = dist[scene.index(c)];
    for (int k = 0; k < 4; ++k) {
      const Cell n{c.x + dx[k], c.y + dy[k]};
      if (scene.blocked(n) || dist[scene.index(n)] >= 0) continue;
      dist[scene.index(n)] = d + 1;
      queue.push_back(n);
    }
  }
  return dist;
}

double geodesic_distance(const SceneGrid& scene, Cell a, Cell b) {
  if (scene.blocked(a) || scene.blocked(b)) {
    throw SceneError("geodesic_distance: endpoint is not a free cell");
  }
  const int d = distance_field(scene, a)[scene.index(b)];
  if (d < 0) throw SceneError("geodesic_distance: cells are disconnected");
  return d * SceneGrid::kSpacing;
}

double euclidean_distance(Cell a, Cell b) {
  return std::hypot(double(a.x - b.x), double(a.y - b.y)) * SceneGrid::kSpacing;
}

}  // namespace avnav::env
