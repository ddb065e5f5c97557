#include "avnav/env/dataset_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

namespace avnav::env {
namespace {

bool skip_line(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '#';
}

[[noreturn]] void parse_error(int line_no, const std::string& what) {
  throw std::runtime_error("line " + std::to_string(line_no) + ": " + what);
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  return is;
}

}  // namespace

void write_scenes(std::ostream& os, const std::vector<SceneGrid>& scenes) {
  for (const SceneGrid& s : scenes) {
    os << "scene " << s.scene_id() << ' ' << s.width() << ' ' << s.height()
       << ' ' << s.seed() << ' ' << to_string(s.split()) << '\n';
    for (int y = 0; y < s.height(); ++y) {
      os << "row ";
      for (int x = 0; x < s.width(); ++x) os << (s.blocked({x, y}) ? '#' : '.');
      os << '\n';
    }
  }
}

std::vector<SceneGrid> read_scenes(std::istream& is) {
  std::vector<SceneGrid> out;
  std::string line;
  int line_no = 0;
  int rows_pending = 0;
  int next_row = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    std::istringstream rec(line);
    std::string kind;
    rec >> kind;
    if (kind == "scene") {
      if (rows_pending) parse_error(line_no, "scene header before previous rows ended");
      int id, w, h;
      std::uint64_t seed;
      std::string split;
      if (!(rec >> id >> w >> h >> seed >> split)) {
        parse_error(line_no, "malformed scene header");
      }
      if (w <= 0 || h <= 0) parse_error(line_no, "bad scene dimensions");
      out.emplace_back(w, h, id, parse_split(split), seed);
      rows_pending = h;
      next_row = 0;
    } else if (kind == "row") {
      if (!rows_pending) parse_error(line_no, "row without scene header");
      std::string cells;
      rec >> cells;
      SceneGrid& s = out.back();
      if (static_cast<int>(cells.size()) != s.width()) {
        parse_error(line_no, "row width does not match header");
      }
      for (int x = 0; x < s.width(); ++x) {
        if (cells[x] != '#' && cells[x] != '.') parse_error(line_no, "bad cell");
        s.set_blocked({x, next_row}, cells[x] == '#');
      }
      ++next_row;
      --rows_pending;
    } else {
      parse_error(line_no, "unknown record '" + kind + "'");
    }
  }
  if (rows_pending) throw std::runtime_error("scene file ended mid-grid");
  return out;
}

void write_episodes(std::ostream& os, const std::vector<Episode>& episodes) {
  os << std::setprecision(17);
  for (const Episode& e : episodes) {
    os << "episode " << e.scene_id << ' ' << e.start.x << ' ' << e.start.y << ' '
       << static_cast<int>(e.start.heading) << ' ' << e.source_x << ' '
       << e.source_y << ' ' << e.source_elevation << ' ' << e.category_id << ' '
       << e.max_steps << '\n';
  }
}

std::vector<Episode> read_episodes(std::istream& is) {
  std::vector<Episode> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    std::istringstream rec(line);
    std::string kind;
    rec >> kind;
    if (kind != "episode") parse_error(line_no, "unknown record '" + kind + "'");
    Episode e;
    int heading = 0;
    if (!(rec >> e.scene_id >> e.start.x >> e.start.y >> heading >> e.source_x >>
          e.source_y >> e.source_elevation >> e.category_id >> e.max_steps)) {
      parse_error(line_no, "malformed episode record");
    }
    if (heading < 0 || heading > 3) parse_error(line_no, "bad heading");
    e.start.heading = static_cast<Heading>(heading);
    out.push_back(e);
  }
  return out;
}

void write_signatures(std::ostream& os, const acoustics::SignatureBank& bank) {
  os << std::setprecision(9);
  for (const auto& sig : bank.all()) {
    os << "signature " << sig.category_id << ' ' << sig.bins << ' ' << sig.frames
       << ' ' << bank.effective_seed() << '\n';
    for (int f = 0; f < sig.bins; ++f) {
      os << "bin " << f;
      for (int t = 0; t < sig.frames; ++t) os << ' ' << sig.envelope[f * sig.frames + t];
      os << '\n';
    }
  }
}

void save_scenes(const std::filesystem::path& path,
                 const std::vector<SceneGrid>& scenes) {
  auto os = open_out(path);
  write_scenes(os, scenes);
}

std::vector<SceneGrid> load_scenes(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_scenes(is);
}

void save_episodes(const std::filesystem::path& path,
                   const std::vector<Episode>& episodes) {
  auto os = open_out(path);
  write_episodes(os, episodes);
}

std::vector<Episode> load_episodes(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_episodes(is);
}

}  // namespace avnav::env
