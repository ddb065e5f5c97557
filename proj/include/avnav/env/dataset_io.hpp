#ifndef AVNAV_ENV_DATASET_IO_HPP_
#define AVNAV_ENV_DATASET_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "avnav/acoustics/acoustics.hpp"
#include "avnav/env/episode.hpp"
#include "avnav/env/scene.hpp"

namespace avnav::env {

// Line-delimited text formats. Blank lines and lines starting with '#' are
// ignored.
//
// Scenes: a header record followed by `height` occupancy rows, y = 0 first,
// '#' blocked and '.' free:
//   scene <scene_id> <width> <height> <seed> <split>
//   row <cells>
//
// Episodes, one record each:
//   episode <scene_id> <start_x> <start_y> <heading 0-3> <source_x>
//           <source_y> <source_elevation> <category_id> <max_steps>
//
// Category signatures (export only, for inspection): a header followed by one
// row per frequency bin:
//   signature <category_id> <bins> <frames> <dataset_seed>
//   bin <f> <v_0> ... <v_{frames-1}>
//
// Real values are written with 17 significant digits so reading them back is
// lossless.
void write_scenes(std::ostream& os, const std::vector<SceneGrid>& scenes);
std::vector<SceneGrid> read_scenes(std::istream& is);
void write_episodes(std::ostream& os, const std::vector<Episode>& episodes);
std::vector<Episode> read_episodes(std::istream& is);
void write_signatures(std::ostream& os, const acoustics::SignatureBank& bank);

void save_scenes(const std::filesystem::path& path,
                 const std::vector<SceneGrid>& scenes);
std::vector<SceneGrid> load_scenes(const std::filesystem::path& path);
void save_episodes(const std::filesystem::path& path,
                   const std::vector<Episode>& episodes);
std::vector<Episode> load_episodes(const std::filesystem::path& path);

}  // namespace avnav::env

#endif  // AVNAV_ENV_DATASET_IO_HPP_
