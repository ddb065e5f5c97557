#include <gtest/gtest.h>

#include <cmath>
#include <deque>
#include <numbers>
#include <random>
#include <sstream>

#include "avnav/env/dataset_io.hpp"
#include "avnav/env/episode.hpp"
#include "avnav/env/navigation.hpp"
#include "avnav/env/scene.hpp"

namespace env = avnav::env;
using env::Action;
using env::AgentPose;
using env::Cell;
using env::Heading;
using env::SceneGrid;

namespace {

// Empty room: border blocked, interior free.
SceneGrid open_room(int w, int h) {
  SceneGrid s(w, h, 0, env::Split::kTrain);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      s.set_blocked({x, y}, x == 0 || y == 0 || x == w - 1 || y == h - 1);
    }
  }
  return s;
}

// Independent BFS over 4-connected free cells; -1 when unreachable.
int bfs(const SceneGrid& s, Cell a, Cell b) {
  std::vector<int> dist(s.width() * s.height(), -1);
  std::deque<Cell> q{a};
  dist[a.y * s.width() + a.x] = 0;
  while (!q.empty()) {
    const Cell c = q.front();
    q.pop_front();
    if (c == b) return dist[c.y * s.width() + c.x];
    const Cell next[4] = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
    for (Cell n : next) {
      if (s.blocked(n) || dist[n.y * s.width() + n.x] >= 0) continue;
      dist[n.y * s.width() + n.x] = dist[c.y * s.width() + c.x] + 1;
      q.push_back(n);
    }
  }
  return -1;
}

std::size_t flood_fill_count(const SceneGrid& s) {
  const auto free = s.free_cells();
  if (free.empty()) return 0;
  std::size_t n = 0;
  for (Cell c : free) n += bfs(s, free[0], c) >= 0 ? 1 : 0;
  return n;
}

// Fine ray marching from the cell centre; same +0.5 reading convention.
double march(const SceneGrid& s, const AgentPose& p, double theta, double max_range) {
  const double ox = p.x + 0.5, oy = p.y + 0.5;
  constexpr double kStep = 1e-4;
  for (double t = 0.0; t < max_range; t += kStep) {
    const Cell c{static_cast<int>(std::floor(ox + t * std::cos(theta))),
                 static_cast<int>(std::floor(oy + t * std::sin(theta)))};
    if (s.blocked(c)) return std::min(t + 0.5, max_range);
  }
  return max_range;
}

}  // namespace

TEST(Scene, SingleRoomIsOpenInterior) {
  const SceneGrid s = env::generate_scene(7, 10, 10, 1);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) {
      const bool border = x == 0 || y == 0 || x == 9 || y == 9;
      EXPECT_EQ(s.blocked({x, y}), border) << x << "," << y;
    }
  }
}

TEST(Scene, GenerationIsDeterministic) {
  EXPECT_EQ(env::generate_scene(7, 16, 16, 3), env::generate_scene(7, 16, 16, 3));
  EXPECT_NE(env::generate_scene(7, 16, 16, 3).occupancy(),
            env::generate_scene(8, 16, 16, 3).occupancy());
}

TEST(Scene, FreeSpaceIsConnectedByFloodFill) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const SceneGrid s = env::generate_scene(seed, 16, 16, 3);
    EXPECT_EQ(flood_fill_count(s), s.free_cells().size()) << seed;
    EXPECT_TRUE(env::is_valid_scene(s));
  }
}

TEST(Scene, MultiRoomScenesHaveInteriorWalls) {
  const SceneGrid s = env::generate_scene(3, 16, 16, 3);
  std::size_t interior_blocked = 0;
  for (int y = 1; y < 15; ++y) {
    for (int x = 1; x < 15; ++x) interior_blocked += s.blocked({x, y}) ? 1 : 0;
  }
  EXPECT_GT(interior_blocked, 0u);
}

TEST(Scene, BadArgumentsThrow) {
  EXPECT_ANY_THROW(env::generate_scene(1, 7, 16, 1));
  EXPECT_ANY_THROW(env::generate_scene(1, 16, 16, 0));
}

TEST(Scene, ValidityRejectsOpenBorderAndDisconnectedSpace) {
  SceneGrid s = open_room(8, 8);
  EXPECT_TRUE(env::is_valid_scene(s));
  s.set_blocked({0, 3}, false);
  EXPECT_FALSE(env::is_valid_scene(s));
  SceneGrid split = open_room(8, 8);
  for (int y = 1; y < 7; ++y) split.set_blocked({4, y}, true);
  EXPECT_FALSE(env::is_valid_scene(split));
}

TEST(Geodesic, OpenGridIsManhattan) {
  const SceneGrid s = open_room(8, 8);
  EXPECT_EQ(env::geodesic_distance(s, {1, 1}, {3, 3}), 4.0);
  EXPECT_EQ(env::geodesic_distance(s, {2, 5}, {2, 5}), 0.0);
}

TEST(Geodesic, WallWithOneDoorMatchesBfs) {
  SceneGrid s = open_room(10, 10);
  for (int y = 1; y < 9; ++y) s.set_blocked({5, y}, y != 7);
  for (Cell a : {Cell{1, 1}, Cell{2, 8}, Cell{4, 4}}) {
    for (Cell b : {Cell{8, 1}, Cell{6, 2}, Cell{8, 8}}) {
      EXPECT_EQ(env::geodesic_distance(s, a, b), bfs(s, a, b));
    }
  }
  EXPECT_EQ(env::geodesic_distance(s, {4, 1}, {6, 1}), 14.0);
}

TEST(Geodesic, IsAMetricOnSmallScenes) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const SceneGrid s = env::generate_scene(seed, 10, 10, 2);
    const auto cells = s.free_cells();
    std::vector<std::vector<int>> fields;
    for (Cell c : cells) fields.push_back(env::distance_field(s, c));
    for (std::size_t i = 0; i < cells.size(); ++i) {
      EXPECT_EQ(fields[i][s.index(cells[i])], 0);
      for (std::size_t j = 0; j < cells.size(); ++j) {
        const int dij = fields[i][s.index(cells[j])];
        ASSERT_EQ(dij, fields[j][s.index(cells[i])]);
        if (i != j) {
          ASSERT_GT(dij, 0);
        }
        for (std::size_t k = 0; k < cells.size(); k += 3) {
          ASSERT_LE(dij, fields[i][s.index(cells[k])] + fields[k][s.index(cells[j])]);
        }
      }
    }
  }
}

TEST(Geodesic, UnreachablePairThrows) {
  SceneGrid s = open_room(8, 8);
  for (int y = 1; y < 7; ++y) s.set_blocked({4, y}, true);
  EXPECT_THROW(env::geodesic_distance(s, {1, 1}, {6, 1}), env::SceneError);
}

TEST(EpisodeFilter, RejectsShortAndStraightEpisodes) {
  EXPECT_FALSE(env::passes_episode_filters(3.9, 2.0));
  EXPECT_FALSE(env::passes_episode_filters(5.0, 5.0));
  EXPECT_TRUE(env::passes_episode_filters(6.0, 4.0));
}

TEST(EpisodeGeneration, EveryEpisodePassesIndependentRecheck) {
  const SceneGrid s = env::generate_scene(11, 16, 16, 3);
  const std::vector<int> cats{0, 1, 2, 3, 4, 5, 6, 7};
  const auto eps = env::generate_episodes(s, 100, 5, cats);
  ASSERT_EQ(eps.size(), 100u);
  for (const env::Episode& e : eps) {
    const int g = bfs(s, e.start.cell(), e.source());
    const double euclid = std::hypot(e.start.x - e.source_x, e.start.y - e.source_y);
    EXPECT_GE(g, 4);
    EXPECT_GE(g / euclid, 1.1);
    EXPECT_TRUE(e.source_elevation == 0.0 || e.source_elevation == 1.0 ||
                e.source_elevation == 2.0);
    EXPECT_GE(e.category_id, 0);
    EXPECT_LT(e.category_id, 8);
    EXPECT_EQ(e.max_steps, 150);
    EXPECT_TRUE(env::is_valid_episode(s, e));
  }
  EXPECT_EQ(eps, env::generate_episodes(s, 100, 5, cats));
}

TEST(EpisodeGeneration, CategoriesComeFromTheGivenSet) {
  const SceneGrid s = env::generate_scene(12, 16, 16, 3);
  const std::vector<int> cats{9, 11};
  for (const env::Episode& e : env::generate_episodes(s, 50, 1, cats)) {
    EXPECT_TRUE(e.category_id == 9 || e.category_id == 11);
  }
}

TEST(EpisodeGeneration, ImpossibleSceneThrows) {
  // A single straight corridor: every pair has ratio 1.
  SceneGrid corridor = open_room(8, 8);
  for (int y = 2; y < 7; ++y) {
    for (int x = 1; x < 7; ++x) corridor.set_blocked({x, y}, true);
  }
  const std::vector<int> cats{0};
  EXPECT_ANY_THROW(env::generate_episodes(corridor, 1, 1, cats));
}

TEST(Transition, StopAtSourceSucceeds) {
  const SceneGrid s = open_room(8, 8);
  env::Episode e;
  e.start = {3, 3, Heading::kPosX};
  e.source_x = 3;
  e.source_y = 3;
  const auto field = env::distance_field(s, e.source());
  const auto t = env::transition(s, field, e, e.start, 0, Action::kStop);
  EXPECT_NEAR(t.reward, 9.99, 1e-12);
  EXPECT_TRUE(t.done);
  EXPECT_TRUE(t.success);
}

TEST(Transition, FailedStopEndsWithoutBonus) {
  const SceneGrid s = open_room(8, 8);
  env::Episode e;
  e.start = {1, 1, Heading::kPosX};
  e.source_x = 5;
  e.source_y = 5;
  const auto field = env::distance_field(s, e.source());
  const auto t = env::transition(s, field, e, e.start, 0, Action::kStop);
  EXPECT_NEAR(t.reward, -0.01, 1e-12);
  EXPECT_TRUE(t.done);
  EXPECT_FALSE(t.success);
}

TEST(Transition, TurnsOnlyPayTimePenalty) {
  const SceneGrid s = open_room(8, 8);
  env::Episode e;
  e.start = {2, 2, Heading::kPosX};
  e.source_x = 5;
  e.source_y = 5;
  const auto field = env::distance_field(s, e.source());
  const auto l = env::transition(s, field, e, e.start, 0, Action::kTurnLeft);
  EXPECT_NEAR(l.reward, -0.01, 1e-12);
  EXPECT_EQ(l.pose.heading, Heading::kPosY);
  EXPECT_EQ(l.pose.cell(), e.start.cell());
  const auto r = env::transition(s, field, e, e.start, 0, Action::kTurnRight);
  EXPECT_EQ(r.pose.heading, Heading::kNegY);
  EXPECT_FALSE(l.done);
}

TEST(Transition, MoveIntoWallKeepsPose) {
  const SceneGrid s = open_room(8, 8);
  env::Episode e;
  e.start = {1, 3, Heading::kNegX};
  e.source_x = 5;
  e.source_y = 5;
  const auto field = env::distance_field(s, e.source());
  const auto t = env::transition(s, field, e, e.start, 0, Action::kMoveForward);
  EXPECT_EQ(t.pose, e.start);
  EXPECT_NEAR(t.reward, -0.01, 1e-12);
}

TEST(Transition, ShapingFollowsGeodesicChange) {
  const SceneGrid s = open_room(8, 8);
  env::Episode e;
  e.source_x = 5;
  e.source_y = 2;
  const auto field = env::distance_field(s, e.source());
  const auto closer =
      env::transition(s, field, e, {2, 2, Heading::kPosX}, 0, Action::kMoveForward);
  EXPECT_NEAR(closer.reward, 0.99, 1e-12);
  const auto farther =
      env::transition(s, field, e, {2, 2, Heading::kNegX}, 0, Action::kMoveForward);
  EXPECT_NEAR(farther.reward, -1.01, 1e-12);
}

TEST(Transition, BudgetEndsEpisode) {
  const SceneGrid s = open_room(8, 8);
  env::Episode e;
  e.start = {2, 2, Heading::kPosX};
  e.source_x = 5;
  e.source_y = 5;
  const auto field = env::distance_field(s, e.source());
  EXPECT_FALSE(env::transition(s, field, e, e.start, 148, Action::kTurnLeft).done);
  EXPECT_TRUE(env::transition(s, field, e, e.start, 149, Action::kTurnLeft).done);
}

TEST(Transition, ShapingTelescopesOverAnyTrajectory) {
  const SceneGrid s = env::generate_scene(4, 16, 16, 3);
  const std::vector<int> cats{0};
  std::mt19937_64 rng(9);
  for (const env::Episode& e : env::generate_episodes(s, 20, 3, cats)) {
    const auto field = env::distance_field(s, e.source());
    AgentPose p = e.start;
    double shaping = 0.0;
    for (int t = 0; t < 149; ++t) {
      const auto a = static_cast<Action>(std::uniform_int_distribution<int>(0, 2)(rng));
      const auto tr = env::transition(s, field, e, p, t, a);
      shaping += tr.reward + 0.01;
      p = tr.pose;
    }
    EXPECT_NEAR(shaping,
                field[s.index(e.start.cell())] - field[s.index(p.cell())], 1e-9);
  }
}

TEST(RelativeAngles, FrameConventions) {
  env::Episode e;
  e.source_x = 5;
  e.source_y = 2;
  const auto ahead = env::relative_angles({2, 2, Heading::kPosX}, e);
  EXPECT_DOUBLE_EQ(ahead.yaw, 0.0);
  EXPECT_DOUBLE_EQ(ahead.pitch, 0.0);
  const auto left = env::relative_angles({5, 0, Heading::kNegX}, e);
  EXPECT_NEAR(left.yaw, -std::numbers::pi / 2.0, 1e-12);
  const auto left2 = env::relative_angles({5, 0, Heading::kPosX}, e);
  EXPECT_NEAR(left2.yaw, std::numbers::pi / 2.0, 1e-12);
  const auto behind = env::relative_angles({7, 2, Heading::kPosX}, e);
  EXPECT_NEAR(behind.yaw, std::numbers::pi, 1e-12);
  e.source_elevation = 3.0;
  EXPECT_NEAR(env::relative_angles({2, 2, Heading::kPosY}, e).pitch, std::numbers::pi / 4.0,
              1e-12);
}

TEST(RelativeAngles, DegenerateAtSourceIsZero) {
  env::Episode e;
  e.source_x = 3;
  e.source_y = 3;
  e.source_elevation = 2.0;
  const auto a = env::relative_angles({3, 3, Heading::kNegY}, e);
  EXPECT_EQ(a.yaw, 0.0);
  EXPECT_EQ(a.pitch, 0.0);
}

TEST(Depth, AdjacentWallReadsOne) {
  const SceneGrid s = open_room(8, 8);
  const env::DepthConfig cfg;
  const auto d = env::depth_render(s, {6, 3, Heading::kPosX}, {3, cfg.fov, cfg.max_range});
  EXPECT_FLOAT_EQ(d[1], 1.0f);
}

TEST(Depth, LongCorridorClipsToMaxRange) {
  const SceneGrid s = open_room(30, 5);
  const auto d = env::depth_render(s, {1, 2, Heading::kPosX}, {3, 0.2, 10.0});
  EXPECT_FLOAT_EQ(d[1], 10.0f);
}

TEST(Depth, MatchesFineRayMarching) {
  const env::DepthConfig cfg;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SceneGrid s = env::generate_scene(seed, 16, 16, 3);
    for (Cell c : s.free_cells()) {
      if ((c.x * 7 + c.y * 3) % 11 != 0) continue;
      for (int h = 0; h < 4; ++h) {
        const AgentPose p{c.x, c.y, static_cast<Heading>(h)};
        const auto d = env::depth_render(s, p, cfg);
        // The two edge rays run exactly through cell corners; skip them.
        for (int i = 1; i + 1 < cfg.rays; ++i) {
          const double theta = env::heading_angle(p.heading) + cfg.fov / 2.0 -
                               i * cfg.fov / (cfg.rays - 1);
          EXPECT_NEAR(d[i], march(s, p, theta, cfg.max_range), 2e-4)
              << "seed " << seed << " cell " << c.x << "," << c.y << " ray " << i;
        }
      }
    }
  }
}

TEST(Depth, TooFewRaysThrows) {
  EXPECT_THROW(env::depth_render(open_room(8, 8), {3, 3, Heading::kPosX}, {2, 1.0, 10.0}),
               std::invalid_argument);
}

TEST(NavigationEnv, StepAfterDoneThrowsAndObservationsAreValid) {
  const std::vector<SceneGrid> scenes{env::generate_scene(2, 16, 16, 3)};
  const avnav::acoustics::SignatureBank bank(12, 1, 16, 16);
  const std::vector<int> cats{0, 1};
  const auto eps = env::generate_episodes(scenes[0], 3, 1, cats);
  env::NavigationEnv nav(scenes, bank, {}, {}, {}, 1);
  const auto obs = nav.reset(eps[0]);
  EXPECT_EQ(obs.depth.size(), 16u);
  for (float v : obs.depth) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 10.0f);
  }
  for (float v : obs.audio.left) EXPECT_GE(v, 0.0f);
  const auto r = nav.step(Action::kStop);
  EXPECT_TRUE(r.done);
  EXPECT_THROW(nav.step(Action::kStop), std::logic_error);
}

TEST(NavigationEnv, IdenticalSeedsGiveIdenticalOutcomes) {
  const std::vector<SceneGrid> scenes{env::generate_scene(2, 16, 16, 3)};
  const avnav::acoustics::SignatureBank bank(12, 1, 16, 16);
  const std::vector<int> cats{0, 1};
  const auto eps = env::generate_episodes(scenes[0], 1, 1, cats);
  env::SensorNoise noise;
  noise.audio_snr_db = 20.0;
  noise.depth_stddev = 0.1;
  auto run = [&] {
    env::NavigationEnv nav(scenes, bank, {}, {}, noise, 77);
    std::vector<float> trace;
    auto obs = nav.reset(eps[0]);
    for (int t = 0; t < 20 && !nav.done(); ++t) {
      const auto r = nav.step(static_cast<Action>(t % 3));
      trace.insert(trace.end(), r.observation.audio.left.begin(),
                   r.observation.audio.left.end());
      trace.insert(trace.end(), r.observation.depth.begin(), r.observation.depth.end());
      trace.push_back(static_cast<float>(r.reward));
    }
    return trace;
  };
  EXPECT_EQ(run(), run());
}

TEST(DatasetIo, ScenesAndEpisodesRoundTrip) {
  std::vector<SceneGrid> scenes;
  for (int i = 0; i < 3; ++i) scenes.push_back(env::generate_scene(i, 16, 12, 3, i + 5));
  std::stringstream ss;
  env::write_scenes(ss, scenes);
  EXPECT_EQ(env::read_scenes(ss), scenes);

  const std::vector<int> cats{0, 3, 9};
  auto eps = env::generate_episodes(scenes[1], 25, 2, cats);
  eps[0].source_elevation = 2.0;
  std::stringstream es;
  env::write_episodes(es, eps);
  EXPECT_EQ(env::read_episodes(es), eps);
}

TEST(DatasetIo, MalformedInputThrows) {
  std::stringstream ss("scene garbage\n");
  EXPECT_ANY_THROW(env::read_scenes(ss));
  std::stringstream es("episode 1 2\n");
  EXPECT_ANY_THROW(env::read_episodes(es));
}
