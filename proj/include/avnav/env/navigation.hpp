#ifndef AVNAV_ENV_NAVIGATION_HPP_
#define AVNAV_ENV_NAVIGATION_HPP_

#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "avnav/acoustics/acoustics.hpp"
#include "avnav/env/episode.hpp"
#include "avnav/env/scene.hpp"

namespace avnav::env {

enum class Action : int { kMoveForward = 0, kTurnLeft = 1, kTurnRight = 2, kStop = 3 };
inline constexpr int kNumActions = 4;

std::string to_string(Action a);

inline constexpr double kSuccessReward = 10.0;
inline constexpr double kShapingReward = 1.0;
inline constexpr double kTimePenalty = -0.01;

// Kinematics and reward of one step, without observations.
struct Transition {
  AgentPose pose;
  double reward = 0.0;
  bool done = false;
  bool success = false;
  double geodesic_to_source = 0.0;
};

// `source_field` is distance_field(scene, episode.source()). Throws
// std::logic_error if step_index >= episode.max_steps.
Transition transition(const SceneGrid& scene, std::span<const int> source_field,
                      const Episode& episode, const AgentPose& pose,
                      int step_index, Action action);

struct RelativeAngles {
  double yaw = 0.0;    // alpha in (-pi, pi], positive to the left
  double pitch = 0.0;  // beta in [0, pi/2)
};

// Straight-line bearing of the source in the agent frame. At the source cell
// the direction is undefined and (0, 0) is returned.
RelativeAngles relative_angles(const AgentPose& pose, const Episode& episode);

struct DepthConfig {
  int rays = 16;
  double fov = std::numbers::pi / 2.0;
  double max_range = 10.0;
};

// Rays are cast from the agent's cell centre, ray 0 on the left edge of the
// field of view. Each reading is the distance at which the ray enters the
// first blocked cell plus half a cell (so a wall in the adjacent cell reads
// 1.0, the centre-to-centre spacing), clipped to max_range.
std::vector<float> depth_render(const SceneGrid& scene, const AgentPose& pose,
                                const DepthConfig& config);

struct ObservationBundle {
  std::vector<float> depth;
  acoustics::BinauralSpectrogram audio;
  Action prev_action = Action::kStop;
};

struct StepInfo {
  double geodesic_to_source = 0.0;
  bool success = false;
};

struct StepResult {
  ObservationBundle observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

struct SensorNoise {
  // Unset disables audio noise.
  std::optional<double> audio_snr_db;
  double depth_stddev = 0.0;
};

// One agent in one episode at a time. Observations combine depth_render with
// the binaural rendering of the episode's sound category at the agent's
// geodesic distance and relative bearing. Not safe for concurrent use; any
// number of instances may run side by side.
class NavigationEnv {
 public:
  NavigationEnv(const std::vector<SceneGrid>& scenes,
                const acoustics::SignatureBank& signatures,
                acoustics::AcousticConfig acoustic, DepthConfig depth,
                SensorNoise noise, std::uint64_t noise_seed);

  ObservationBundle reset(const Episode& episode);
  StepResult step(Action action);

  bool done() const { return done_; }
  const AgentPose& pose() const { return pose_; }
  int step_index() const { return step_index_; }
  const Episode& episode() const { return episode_; }
  const SceneGrid& scene() const { return *scene_; }
  double geodesic_to_source() const;
  ObservationBundle observe(Action prev_action);

 private:
  const std::vector<SceneGrid>* scenes_;
  const acoustics::SignatureBank* signatures_;
  acoustics::AcousticConfig acoustic_;
  DepthConfig depth_;
  SensorNoise noise_;
  std::mt19937_64 noise_rng_;

  const SceneGrid* scene_ = nullptr;
  std::vector<int> source_field_;
  Episode episode_;
  AgentPose pose_;
  int step_index_ = 0;
  bool done_ = true;
};

const SceneGrid& find_scene(const std::vector<SceneGrid>& scenes, int scene_id);

}  // namespace avnav::env

#endif  // AVNAV_ENV_NAVIGATION_HPP_
