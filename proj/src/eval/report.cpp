#include "avnav/eval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace avnav::eval {
namespace {

constexpr int kCell = 20;

// Cell centre in SVG coordinates; y is flipped so north is up.
std::pair<int, int> centre(const env::SceneGrid& scene, int x, int y) {
  return {x * kCell + kCell / 2, (scene.height() - 1 - y) * kCell + kCell / 2};
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string hex_color(int r, int g, int b) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string trajectory_svg(const EpisodeResult& result, const env::SceneGrid& scene,
                           const env::Episode& episode) {
  if (result.trajectory.empty()) throw std::invalid_argument("trajectory_svg: empty trajectory");
  const int w = scene.width() * kCell;
  const int h = scene.height() * kCell;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << w
     << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";

  os << "  <g id=\"occupancy\">\n"
     << "    <rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h
     << "\" fill=\"#ffffff\"/>\n";
  for (int y = 0; y < scene.height(); ++y) {
    for (int x = 0; x < scene.width(); ++x) {
      if (!scene.blocked({x, y})) continue;
      os << "    <rect x=\"" << x * kCell << "\" y=\"" << (scene.height() - 1 - y) * kCell
         << "\" width=\"" << kCell << "\" height=\"" << kCell << "\" fill=\"#555555\"/>\n";
    }
  }
  os << "  </g>\n";

  const env::Cell start = result.trajectory.front().cell();
  const auto oracle = oracle_cell_path(scene, episode.start.cell(), episode.source());
  os << "  <g id=\"oracle\">\n    <polyline fill=\"none\" stroke=\"#22aa22\" "
        "stroke-width=\"3\" stroke-opacity=\"0.7\" points=\"";
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    const auto [px, py] = centre(scene, oracle[i].x, oracle[i].y);
    os << (i ? " " : "") << px << "," << py;
  }
  os << "\"/>\n  </g>\n";

  os << "  <g id=\"path\">\n";
  const bool moved = std::any_of(result.trajectory.begin(), result.trajectory.end(),
                                 [&](const env::AgentPose& p) { return !(p.cell() == start); });
  if (moved) {
    os << "    <polyline id=\"agent-path\" fill=\"none\" stroke=\"#1f3f8f\" "
          "stroke-width=\"1\" stroke-opacity=\"0.25\" points=\"";
    for (std::size_t i = 0; i < result.trajectory.size(); ++i) {
      const auto [px, py] = centre(scene, result.trajectory[i].x, result.trajectory[i].y);
      os << (i ? " " : "") << px << "," << py;
    }
    os << "\"/>\n";
    const std::size_t n = result.trajectory.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto& a = result.trajectory[i];
      const auto& b = result.trajectory[i + 1];
      if (a.cell() == b.cell()) continue;
      const double t = n > 2 ? double(i) / double(n - 2) : 0.0;
      const std::string color = hex_color(static_cast<int>(20 + t * 160),
                                          static_cast<int>(40 + t * 170),
                                          static_cast<int>(140 + t * 110));
      const auto [x1, y1] = centre(scene, a.x, a.y);
      const auto [x2, y2] = centre(scene, b.x, b.y);
      os << "    <line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\""
         << y2 << "\" stroke=\"" << color << "\" stroke-width=\"4\" "
         << "stroke-linecap=\"round\"/>\n";
    }
  }
  const auto [sx, sy] = centre(scene, start.x, start.y);
  os << "    <circle id=\"start\" cx=\"" << sx << "\" cy=\"" << sy << "\" r=\"" << kCell / 3
     << "\" fill=\"#ffd700\" stroke=\"#000000\"/>\n";
  os << "  </g>\n";

  const auto [gx, gy] = centre(scene, episode.source_x, episode.source_y);
  os << "  <g id=\"goal\">\n    <circle cx=\"" << gx << "\" cy=\"" << gy << "\" r=\""
     << kCell / 3 << "\" fill=\"#dd2222\" stroke=\"#000000\"/>\n  </g>\n";
  os << "</svg>\n";
  return os.str();
}

void export_trajectory(const EpisodeResult& result, const env::SceneGrid& scene,
                       const env::Episode& episode, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << trajectory_svg(result, scene, episode);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

CurveSeries read_curve(const std::filesystem::path& log, const std::string& metric,
                       const std::string& label) {
  std::ifstream in(log);
  if (!in) throw std::runtime_error("cannot read " + log.string());
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(log.string() + ": missing header");
  const auto header = split_csv(line);
  const auto find = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw std::invalid_argument(log.string() + ": missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t steps_col = find("env_steps");
  const std::size_t metric_col = find(metric);
  CurveSeries series{label, {}};
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw std::invalid_argument(log.string() + ": ragged row '" + line + "'");
    }
    series.points.emplace_back(std::stod(fields[steps_col]), std::stod(fields[metric_col]));
  }
  return series;
}

void write_curves(std::ostream& os, const std::vector<CurveSeries>& series,
                  const std::string& metric) {
  os << "label,env_steps," << metric << "\n";
  char buf[128];
  for (const CurveSeries& s : series) {
    for (const auto& [x, y] : s.points) {
      std::snprintf(buf, sizeof buf, ",%.17g,%.9g\n", x, y);
      os << s.label << buf;
    }
  }
}

void emit_learning_curve(const std::vector<std::pair<std::string, std::filesystem::path>>& runs,
                         const std::string& metric, const std::filesystem::path& out) {
  std::vector<CurveSeries> series;
  for (const auto& [label, path] : runs) series.push_back(read_curve(path, metric, label));
  std::ofstream os(out);
  if (!os) throw std::runtime_error("cannot write " + out.string());
  write_curves(os, series, metric);
}

}  // namespace avnav::eval
