#include "avnav/env/navigation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace avnav::env {

std::string to_string(Action a) {
  switch (a) {
    case Action::kMoveForward: return "MoveForward";
    case Action::kTurnLeft: return "TurnLeft";
    case Action::kTurnRight: return "TurnRight";
    case Action::kStop: return "Stop";
  }
  return "?";
}

Transition transition(const SceneGrid& scene, std::span<const int> source_field,
                      const Episode& episode, const AgentPose& pose,
                      int step_index, Action action) {
  if (step_index >= episode.max_steps) {
    throw std::logic_error("step on a finished episode (step index " +
                           std::to_string(step_index) + ")");
  }
  const int before = source_field[scene.index(pose.cell())];
  if (before < 0) throw SceneError("agent is not on a reachable free cell");

  Transition out;
  out.pose = pose;
  switch (action) {
    case Action::kMoveForward: {
      const Cell d = heading_step(pose.heading);
      const Cell next{pose.x + d.x, pose.y + d.y};
      if (scene.free(next)) {
        out.pose.x = next.x;
        out.pose.y = next.y;
      }
      break;
    }
    case Action::kTurnLeft: out.pose.heading = turn_left(pose.heading); break;
    case Action::kTurnRight: out.pose.heading = turn_right(pose.heading); break;
    case Action::kStop: break;
  }
  const int after = source_field[scene.index(out.pose.cell())];
  out.geodesic_to_source = after * SceneGrid::kSpacing;

  double shaping = 0.0;
  if (after < before) shaping = kShapingReward;
  if (after > before) shaping = -kShapingReward;
  out.success = action == Action::kStop && out.pose.cell() == episode.source();
  out.reward = shaping + kTimePenalty + (out.success ? kSuccessReward : 0.0);
  out.done = action == Action::kStop || step_index + 1 >= episode.max_steps;
  return out;
}

RelativeAngles relative_angles(const AgentPose& pose, const Episode& episode) {
  const int dx = episode.source_x - pose.x;
  const int dy = episode.source_y - pose.y;
  if (dx == 0 && dy == 0) return {0.0, 0.0};
  // Exact integer rotation into the agent frame.
  int forward = 0, left = 0;
  switch (pose.heading) {
    case Heading::kPosX: forward = dx; left = dy; break;
    case Heading::kPosY: forward = dy; left = -dx; break;
    case Heading::kNegX: forward = -dx; left = -dy; break;
    case Heading::kNegY: forward = -dy; left = dx; break;
  }
  const double horizontal = std::hypot(double(dx), double(dy)) * SceneGrid::kSpacing;
  RelativeAngles out;
  out.yaw = std::atan2(double(left), double(forward));
  out.pitch = std::atan2(episode.source_elevation, horizontal);
  return out;
}

std::vector<float> depth_render(const SceneGrid& scene, const AgentPose& pose,
                                const DepthConfig& config) {
  if (config.rays < 3) throw std::invalid_argument("depth_render: need >= 3 rays");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr double kTie = 1e-9;
  std::vector<float> out(config.rays);
  const double ox = pose.x + 0.5, oy = pose.y + 0.5;
  const double centre = heading_angle(pose.heading);
  const double reach = config.max_range - 0.5;
  for (int i = 0; i < config.rays; ++i) {
    const double theta =
        centre + config.fov / 2.0 - i * config.fov / (config.rays - 1);
    double dx = std::cos(theta), dy = std::sin(theta);
    if (std::abs(dx) < 1e-12) dx = 0.0;
    if (std::abs(dy) < 1e-12) dy = 0.0;
    int cx = pose.x, cy = pose.y;
    const int sx = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
    const int sy = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
    double tx = dx > 0 ? (cx + 1 - ox) / dx : (dx < 0 ? (cx - ox) / dx : kInf);
    double ty = dy > 0 ? (cy + 1 - oy) / dy : (dy < 0 ? (cy - oy) / dy : kInf);
    const double step_x = dx != 0 ? 1.0 / std::abs(dx) : kInf;
    const double step_y = dy != 0 ? 1.0 / std::abs(dy) : kInf;
    double hit = kInf;
    while (true) {
      double t;
      if (std::abs(tx - ty) < kTie) {
        // Through a corner: the ray continues into the diagonal cell.
        t = tx;
        cx += sx;
        cy += sy;
        tx += step_x;
        ty += step_y;
      } else if (tx < ty) {
        t = tx;
        cx += sx;
        tx += step_x;
      } else {
        t = ty;
        cy += sy;
        ty += step_y;
      }
      if (t > reach) break;
      if (scene.blocked({cx, cy})) {
        hit = t;
        break;
      }
    }
    out[i] = static_cast<float>(std::min(hit + 0.5, config.max_range));
  }
  return out;
}

const SceneGrid& find_scene(const std::vector<SceneGrid>& scenes, int scene_id) {
  for (const SceneGrid& s : scenes) {
    if (s.scene_id() == scene_id) return s;
  }
  throw SceneError("unknown scene id " + std::to_string(scene_id));
}

NavigationEnv::NavigationEnv(const std::vector<SceneGrid>& scenes,
                             const acoustics::SignatureBank& signatures,
                             acoustics::AcousticConfig acoustic,
                             DepthConfig depth, SensorNoise noise,
                             std::uint64_t noise_seed)
    : scenes_(&scenes),
      signatures_(&signatures),
      acoustic_(acoustic),
      depth_(depth),
      noise_(noise),
      noise_rng_(noise_seed) {
  acoustic_.validate();
}

ObservationBundle NavigationEnv::reset(const Episode& episode) {
  scene_ = &find_scene(*scenes_, episode.scene_id);
  episode_ = episode;
  pose_ = episode.start;
  step_index_ = 0;
  done_ = false;
  source_field_ = distance_field(*scene_, episode.source());
  if (source_field_[scene_->index(pose_.cell())] < 0) {
    throw SceneError("episode start is not reachable from its source");
  }
  return observe(Action::kStop);
}

double NavigationEnv::geodesic_to_source() const {
  return source_field_[scene_->index(pose_.cell())] * SceneGrid::kSpacing;
}

ObservationBundle NavigationEnv::observe(Action prev_action) {
  ObservationBundle obs;
  obs.prev_action = prev_action;
  obs.depth = depth_render(*scene_, pose_, depth_);
  if (noise_.depth_stddev > 0.0) {
    obs.depth = acoustics::add_depth_noise(obs.depth, noise_.depth_stddev,
                                           depth_.max_range, noise_rng_);
  }
  const RelativeAngles angles = relative_angles(pose_, episode_);
  obs.audio = acoustics::render(signatures_->get(episode_.category_id),
                                geodesic_to_source(), angles.yaw, angles.pitch,
                                acoustic_);
  if (noise_.audio_snr_db) {
    obs.audio =
        acoustics::add_noise(obs.audio, *noise_.audio_snr_db, noise_rng_).spectrogram;
  }
  return obs;
}

StepResult NavigationEnv::step(Action action) {
  if (done_) throw std::logic_error("step on a finished episode");
  const Transition t =
      transition(*scene_, source_field_, episode_, pose_, step_index_, action);
  pose_ = t.pose;
  ++step_index_;
  done_ = t.done;
  StepResult out;
  out.reward = t.reward;
  out.done = t.done;
  out.info = {t.geodesic_to_source, t.success};
  out.observation = observe(action);
  return out;
}

}  // namespace avnav::env
