// Drives the avnav binary end to end and checks exit codes and outputs.
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "avnav/env/dataset_io.hpp"

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("avnav_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

CliRun run(const std::string& args) {
  const fs::path err = fs::temp_directory_path() / "avnav_cli_stderr.txt";
  const std::string cmd =
      std::string(AVNAV_BINARY) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err);
  return r;
}

void make_dataset(const fs::path& dir) {
  ASSERT_EQ(run("gen-scenes --out-dir " + dir.string() +
                " --train 2 --test 1 --width 12 --height 12 --rooms 2")
                .code,
            0);
  ASSERT_EQ(run("gen-episodes --scenes " + (dir / "train_scenes.txt").string() + " --out " +
                (dir / "train_eps.txt").string() + " --per-scene 10 --split train")
                .code,
            0);
  ASSERT_EQ(run("gen-episodes --scenes " + (dir / "test_scenes.txt").string() + " --out " +
                (dir / "test_eps.txt").string() + " --per-scene 6 --split eval")
                .code,
            0);
}

}  // namespace

TEST(Cli, NoSubcommandIsUsageError) {
  const CliRun r = run("");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error category=usage"), std::string::npos);
}

TEST(Cli, UnknownOptionIsUsageError) { EXPECT_EQ(run("gen-scenes --bogus 1").code, 2); }

TEST(Cli, MissingRequiredOptionIsUsageError) { EXPECT_EQ(run("gen-scenes").code, 2); }

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run("--help").code, 0); }

TEST(Cli, GenScenesIsDeterministicAndRefusesOverwrite) {
  const fs::path a = scratch("scenes_a"), b = scratch("scenes_b");
  ASSERT_EQ(run("gen-scenes --out-dir " + a.string() + " --train 3 --test 2").code, 0);
  ASSERT_EQ(run("gen-scenes --out-dir " + b.string() + " --train 3 --test 2").code, 0);
  EXPECT_EQ(slurp(a / "train_scenes.txt"), slurp(b / "train_scenes.txt"));
  EXPECT_EQ(slurp(a / "test_scenes.txt"), slurp(b / "test_scenes.txt"));
  EXPECT_EQ(run("gen-scenes --out-dir " + a.string() + " --train 3 --test 2").code, 4);
  EXPECT_EQ(run("gen-scenes --out-dir " + a.string() + " --train 3 --test 2 --force").code, 0);
}

TEST(Cli, EpisodeSplitsRespectHeardCategories) {
  const fs::path dir = scratch("splits");
  make_dataset(dir);
  for (const auto& e : avnav::env::load_episodes(dir / "train_eps.txt")) {
    EXPECT_LT(e.category_id, 8);
  }
  ASSERT_EQ(run("gen-episodes --scenes " + (dir / "test_scenes.txt").string() + " --out " +
                (dir / "unheard.txt").string() + " --per-scene 6 --split unheard")
                .code,
            0);
  for (const auto& e : avnav::env::load_episodes(dir / "unheard.txt")) {
    EXPECT_GE(e.category_id, 8);
    EXPECT_LT(e.category_id, 12);
  }
}

TEST(Cli, BadEpisodeArgumentsAreRejected) {
  const fs::path dir = scratch("bad_eps");
  ASSERT_EQ(run("gen-scenes --out-dir " + dir.string() + " --train 1 --test 1").code, 0);
  const std::string scenes = (dir / "train_scenes.txt").string();
  EXPECT_EQ(run("gen-episodes --scenes " + scenes + " --out x.txt --split sideways").code, 2);
  EXPECT_EQ(run("gen-episodes --scenes " + scenes + " --out x.txt --heard 1").code, 3);
  EXPECT_EQ(run("gen-episodes --scenes " + (dir / "nope.txt").string() + " --out x.txt").code,
            2);
}

TEST(Cli, TrainRejectsUnknownConfigKey) {
  const CliRun r = run("train --set not_a_key=1");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("error category=config"), std::string::npos);
}

TEST(Cli, TrainRejectsMalformedSet) { EXPECT_EQ(run("train --set gamma").code, 2); }

TEST(Cli, TrainThenEvaluate) {
  const fs::path dir = scratch("train_eval");
  make_dataset(dir);
  const std::string train_args =
      "train --set train_scenes=" + (dir / "train_scenes.txt").string() +
      " --set train_episodes=" + (dir / "train_eps.txt").string() +
      " --set rollout_length=16 --set sequence_length=8 --set num_envs=2 --set minibatches=2"
      " --set update_epochs=1 --total-episodes 4 --output-dir ";
  ASSERT_EQ(run(train_args + (dir / "run_a").string()).code, 0);
  ASSERT_EQ(run(train_args + (dir / "run_b").string()).code, 0);
  EXPECT_EQ(slurp(dir / "run_a" / "train_log.csv"), slurp(dir / "run_b" / "train_log.csv"));
  EXPECT_TRUE(fs::exists(dir / "run_a" / "config.yaml"));

  fs::path last;
  for (const auto& entry : fs::directory_iterator(dir / "run_a" / "checkpoints")) {
    if (entry.path().extension() == ".manifest") {
      const fs::path stem = entry.path().parent_path() / entry.path().stem();
      if (last.empty() || stem > last) last = stem;
    }
  }
  ASSERT_FALSE(last.empty());
  const std::string eval_args = "eval --checkpoint " + last.string() + " --scenes " +
                                (dir / "test_scenes.txt").string() + " --episodes " +
                                (dir / "test_eps.txt").string() + " --trajectories 2 --out-dir ";
  ASSERT_EQ(run(eval_args + (dir / "eval_a").string()).code, 0);
  ASSERT_EQ(run(eval_args + (dir / "eval_b").string() + " --snr 40 --depth-noise 0.1").code, 0);
  const std::string summary = slurp(dir / "eval_a" / "summary.csv");
  EXPECT_EQ(summary.rfind("split,SR,SPL,SNA,n_episodes", 0), 0u);
  EXPECT_NE(summary.find("unheard"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "eval_a" / "results.jsonl"));
  int svgs = 0;
  for (const auto& e : fs::directory_iterator(dir / "eval_a" / "trajectories")) {
    svgs += e.path().extension() == ".svg";
  }
  EXPECT_EQ(svgs, 2);

  EXPECT_EQ(run("curve --run full=" + (dir / "run_a" / "train_log.csv").string() +
                " --metric sr_rolling --out " + (dir / "curve.csv").string())
                .code,
            0);
  EXPECT_EQ(run("curve --run full=" + (dir / "run_a" / "train_log.csv").string() +
                " --metric no_such_column --out " + (dir / "curve2.csv").string())
                .code,
            3);
}

TEST(Cli, EvalMissingCheckpointIsIoError) {
  const fs::path dir = scratch("eval_missing");
  ASSERT_EQ(run("gen-scenes --out-dir " + dir.string() + " --train 1 --test 1").code, 0);
  const std::string scenes = (dir / "test_scenes.txt").string();
  EXPECT_EQ(run("eval --checkpoint " + (dir / "none").string() + " --scenes " + scenes +
                " --episodes " + scenes)
                .code,
            4);
}

TEST(Cli, GradcheckPassesAndCatchesInjectedSignBug) {
  EXPECT_EQ(run("gradcheck").code, 0);
  const CliRun r = run("gradcheck --inject-sign-bug tanh");
  EXPECT_EQ(r.code, 7);
  EXPECT_NE(r.err.find("error category=check_failed"), std::string::npos);
}
