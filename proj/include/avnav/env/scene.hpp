#ifndef AVNAV_ENV_SCENE_HPP_
#define AVNAV_ENV_SCENE_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace avnav::env {

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

enum class Split { kTrain, kTest };

std::string to_string(Split split);
Split parse_split(const std::string& s);

class SceneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Occupancy grid with unit cell spacing. Cell (x, y) lives in column x and
// row y; +X points east and +Y north.
class SceneGrid {
 public:
  static constexpr double kSpacing = 1.0;

  SceneGrid() = default;
  SceneGrid(int width, int height, int scene_id, Split split,
            std::uint64_t seed = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  int scene_id() const { return scene_id_; }
  Split split() const { return split_; }
  std::uint64_t seed() const { return seed_; }
  void set_split(Split split) { split_ = split; }
  void set_scene_id(int id) { scene_id_ = id; }

  bool in_bounds(Cell c) const {
    return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_;
  }
  bool blocked(Cell c) const { return !in_bounds(c) || occupancy_[index(c)]; }
  bool free(Cell c) const { return !blocked(c); }
  void set_blocked(Cell c, bool value) { occupancy_.at(index(c)) = value; }
  int index(Cell c) const { return c.y * width_ + c.x; }
  Cell cell(int index) const { return {index % width_, index / width_}; }

  std::vector<Cell> free_cells() const;
  const std::vector<std::uint8_t>& occupancy() const { return occupancy_; }

  friend bool operator==(const SceneGrid&, const SceneGrid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int scene_id_ = 0;
  Split split_ = Split::kTrain;
  std::uint64_t seed_ = 0;
  std::vector<std::uint8_t> occupancy_;
};

// Rooms are carved by recursive partition walls, each pierced by a door gap.
// Deterministic in scene_seed. Throws SceneError (naming the seed) if no
// connected layout is found within a bounded number of attempts.
SceneGrid generate_scene(std::uint64_t scene_seed, int width, int height,
                         int room_count, int scene_id = 0,
                         Split split = Split::kTrain);

// Border blocked and free space one 4-connected component.
bool is_valid_scene(const SceneGrid& scene);

// Breadth-first hop counts from `source` over free cells; -1 marks
// unreachable or blocked cells. Indexed by SceneGrid::index.
std::vector<int> distance_field(const SceneGrid& scene, Cell source);

// Shortest 4-connected path length times spacing. Throws SceneError if the
// cells are blocked or disconnected.
double geodesic_distance(const SceneGrid& scene, Cell a, Cell b);

double euclidean_distance(Cell a, Cell b);

}  // namespace avnav::env

#endif  // AVNAV_ENV_SCENE_HPP_
