#ifndef AVNAV_EVAL_REPORT_HPP_
#define AVNAV_EVAL_REPORT_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "avnav/env/episode.hpp"
#include "avnav/env/scene.hpp"
#include "avnav/eval/metrics.hpp"

namespace avnav::eval {

// Standalone SVG: occupancy map, start (yellow), goal (red), agent path
// fading from dark to light over time, and an oracle shortest path (green).
// The agent-path polyline carries one vertex per trajectory pose and is
// omitted when the agent never left the start cell.
std::string trajectory_svg(const EpisodeResult& result, const env::SceneGrid& scene,
                           const env::Episode& episode);
void export_trajectory(const EpisodeResult& result, const env::SceneGrid& scene,
                       const env::Episode& episode, const std::filesystem::path& path);

struct CurveSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (env_steps, value)
};

// Reads (env_steps, metric) pairs from a CSV log with a header row. Throws
// std::invalid_argument when either column is missing.
CurveSeries read_curve(const std::filesystem::path& log, const std::string& metric,
                       const std::string& label);
// CSV with header label,env_steps,<metric>; series back to back.
void write_curves(std::ostream& os, const std::vector<CurveSeries>& series,
                  const std::string& metric);
void emit_learning_curve(const std::vector<std::pair<std::string, std::filesystem::path>>& runs,
                         const std::string& metric, const std::filesystem::path& out);

}  // namespace avnav::eval

#endif  // AVNAV_EVAL_REPORT_HPP_
