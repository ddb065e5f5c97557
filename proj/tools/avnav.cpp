// avnav: dataset generation, training, evaluation and gradient checks.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "avnav/acoustics/acoustics.hpp"
#include "avnav/autodiff/checkpoint.hpp"
#include "avnav/common/random.hpp"
#include "avnav/env/dataset_io.hpp"
#include "avnav/env/episode.hpp"
#include "avnav/env/scene.hpp"
#include "avnav/eval/evaluate.hpp"
#include "avnav/eval/metrics.hpp"
#include "avnav/eval/probe.hpp"
#include "avnav/eval/report.hpp"
#include "avnav/policy/gradcheck.hpp"
#include "avnav/trainer/config.hpp"
#include "avnav/trainer/trainer.hpp"

namespace fs = std::filesystem;
using namespace avnav;

namespace {

enum class ErrorCategory { kInternal = 1, kUsage = 2, kConfig = 3, kIo = 4, kData = 5,
                           kNumeric = 6, kCheckFailed = 7 };

const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kInternal: return "internal";
    case ErrorCategory::kUsage: return "usage";
    case ErrorCategory::kConfig: return "config";
    case ErrorCategory::kIo: return "io";
    case ErrorCategory::kData: return "data";
    case ErrorCategory::kNumeric: return "numeric";
    case ErrorCategory::kCheckFailed: return "check_failed";
  }
  return "internal";
}

struct CliError {
  ErrorCategory category;
  std::string message;
};

int report_error(ErrorCategory category, std::string message) {
  for (char& c : message) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::fprintf(stderr, "error category=%s message=\"%s\"\n", category_name(category),
               message.c_str());
  return static_cast<int>(category);
}

void refuse_overwrite(const fs::path& path, bool force) {
  if (!force && fs::exists(path)) {
    throw CliError{ErrorCategory::kIo, path.string() + " exists (use --force to overwrite)"};
  }
}

// ---------------------------------------------------------------- gen-scenes

struct GenScenesArgs {
  fs::path out_dir;
  int train_count = 16;
  int test_count = 8;
  int width = 16;
  int height = 16;
  int rooms = 3;
  std::uint64_t seed = 1;
  bool force = false;
};

std::vector<env::SceneGrid> make_scene_set(const GenScenesArgs& a, env::Split split, int count,
                                           int first_id) {
  std::vector<env::SceneGrid> scenes;
  const char* stream = split == env::Split::kTrain ? "scene-train" : "scene-test";
  for (int i = 0; i < count; ++i) {
    scenes.push_back(env::generate_scene(derive_seed(a.seed, stream, i), a.width, a.height,
                                         a.rooms, first_id + i, split));
    if (!env::is_valid_scene(scenes.back())) {
      throw CliError{ErrorCategory::kData, "generated scene failed validation"};
    }
  }
  return scenes;
}

int cmd_gen_scenes(const GenScenesArgs& a) {
  const fs::path train = a.out_dir / "train_scenes.txt";
  const fs::path test = a.out_dir / "test_scenes.txt";
  refuse_overwrite(train, a.force);
  refuse_overwrite(test, a.force);
  fs::create_directories(a.out_dir);
  env::save_scenes(train, make_scene_set(a, env::Split::kTrain, a.train_count, 0));
  env::save_scenes(test, make_scene_set(a, env::Split::kTest, a.test_count, 1000));
  std::printf("wrote %d train scenes to %s\nwrote %d test scenes to %s\n", a.train_count,
              train.c_str(), a.test_count, test.c_str());
  return 0;
}

// -------------------------------------------------------------- gen-episodes

struct GenEpisodesArgs {
  fs::path scenes;
  fs::path out;
  int per_scene = 50;
  std::string split = "train";
  int heard = 8;
  int num_categories = 12;
  std::uint64_t seed = 1;
  bool force = false;
};

int cmd_gen_episodes(const GenEpisodesArgs& a) {
  if (a.heard < 2 || a.heard > a.num_categories) {
    throw CliError{ErrorCategory::kConfig, "--heard must lie in [2, --num-categories]"};
  }
  std::vector<int> categories;
  if (a.split == "train") {
    for (int c = 0; c < a.heard; ++c) categories.push_back(c);
  } else if (a.split == "eval") {
    for (int c = 0; c < a.num_categories; ++c) categories.push_back(c);
  } else if (a.split == "unheard") {
    for (int c = a.heard; c < a.num_categories; ++c) categories.push_back(c);
  } else {
    throw CliError{ErrorCategory::kUsage, "--split must be train, eval or unheard"};
  }
  if (categories.empty()) throw CliError{ErrorCategory::kConfig, "no categories selected"};
  refuse_overwrite(a.out, a.force);
  const auto scenes = env::load_scenes(a.scenes);
  std::vector<env::Episode> all;
  for (const env::SceneGrid& s : scenes) {
    const auto eps = env::generate_episodes(
        s, a.per_scene, derive_seed(a.seed, "episode-" + a.split, s.scene_id()), categories);
    for (const env::Episode& e : eps) {
      if (!env::is_valid_episode(s, e)) {
        throw CliError{ErrorCategory::kData, "generated episode failed validation"};
      }
    }
    all.insert(all.end(), eps.begin(), eps.end());
  }
  if (!a.out.parent_path().empty()) fs::create_directories(a.out.parent_path());
  env::save_episodes(a.out, all);
  std::printf("wrote %zu episodes (%d per scene, %zu scenes) to %s\n", all.size(),
              a.per_scene, scenes.size(), a.out.c_str());
  return 0;
}

// --------------------------------------------------------------------- train

struct TrainArgs {
  fs::path config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::string> ablation;
  std::optional<long> total_episodes;
  std::optional<long> max_env_steps;
  bool deterministic = false;
};

std::map<std::string, std::string> parse_assignments(const std::vector<std::string>& sets) {
  std::map<std::string, std::string> out;
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw CliError{ErrorCategory::kUsage, "--set expects key=value, got '" + s + "'"};
    }
    out[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return out;
}

eval::EvalConfig eval_config_from(const trainer::RunConfig& cfg, std::uint64_t noise_seed) {
  eval::EvalConfig e;
  e.acoustic = cfg.acoustic();
  e.depth = cfg.depth();
  e.noise = cfg.noise();
  e.heard_categories = cfg.heard_categories;
  e.noise_seed = noise_seed;
  return e;
}

int cmd_train(const TrainArgs& a) {
  trainer::RunConfig cfg;
  std::map<std::string, std::string> flags = parse_assignments(a.sets);
  if (a.seed) flags["seed"] = std::to_string(*a.seed);
  if (a.output_dir) flags["output_dir"] = *a.output_dir;
  if (a.ablation) flags["ablation"] = *a.ablation;
  if (a.total_episodes) flags["total_episodes"] = std::to_string(*a.total_episodes);
  if (a.max_env_steps) flags["max_env_steps"] = std::to_string(*a.max_env_steps);
  if (a.deterministic) flags["deterministic"] = "true";
  trainer::apply_overrides(cfg, flags);
  // The config file has the final word.
  if (!a.config.empty()) cfg = trainer::load_run_config(a.config, cfg);
  cfg.validate();

  trainer::UpdateHook hook;
  std::vector<env::SceneGrid> eval_scenes;
  std::vector<env::Episode> eval_episodes;
  std::optional<acoustics::SignatureBank> bank;
  std::ofstream eval_log;
  if (cfg.eval_every > 0) {
    if (cfg.eval_scenes.empty() || cfg.eval_episodes.empty()) {
      throw CliError{ErrorCategory::kConfig, "eval_every needs eval_scenes and eval_episodes"};
    }
    eval_scenes = env::load_scenes(cfg.eval_scenes);
    eval_episodes = env::load_episodes(cfg.eval_episodes);
    bank.emplace(cfg.num_categories, cfg.dataset_seed, cfg.spec_bins, cfg.spec_frames);
    fs::create_directories(cfg.output_dir);
    eval_log.open(cfg.output_dir / "eval_log.csv",
                  cfg.resume_from.empty() ? std::ios::trunc : std::ios::app);
    if (cfg.resume_from.empty()) eval_log << "update,env_steps,split,SR,SPL,SNA,n_episodes\n";
    hook = [&](const trainer::UpdateRecord& rec, const policy::Policy& net) {
      if (rec.update % cfg.eval_every != 0) return;
      const eval::EvalReport report =
          eval::evaluate(net, eval_scenes, eval_episodes, *bank,
                         eval_config_from(cfg, derive_seed(cfg.ppo.seed, "eval")));
      for (const eval::MetricsSummary& m : report.summaries) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%ld,%ld,%s,%.6f,%.6f,%.6f,%zu\n", rec.update,
                      rec.env_steps, m.split.c_str(), m.sr, m.spl, m.sna, m.episodes);
        eval_log << buf << std::flush;
      }
    };
  }

  const trainer::TrainResult result = trainer::train(cfg, hook);
  std::printf("updates=%ld env_steps=%ld episodes=%ld\nlog=%s\nfinal_checkpoint=%s\n",
              result.state.updates, result.state.env_steps, result.state.episodes_completed,
              result.log_path.c_str(), result.final_checkpoint.c_str());
  return 0;
}

// ---------------------------------------------------------------------- eval

struct EvalArgs {
  fs::path checkpoint;
  fs::path scenes;
  fs::path episodes;
  fs::path out_dir = "eval_out";
  std::string snr = "none";
  double depth_noise = 0.0;
  int trajectories = 0;
  bool probe = false;
  int probe_train = 4000;
  int probe_test = 1000;
  std::uint64_t seed = 1;
};

int cmd_eval(const EvalArgs& a) {
  const ad::Checkpoint ckpt = ad::load_checkpoint(a.checkpoint);
  const policy::PolicyDims dims = trainer::dims_from_checkpoint(ckpt);
  policy::Policy net(dims, 0);
  trainer::load_policy(ckpt, net);

  trainer::RunConfig cfg;
  std::map<std::string, std::string> from_meta;
  for (const char* key : {"num_categories", "heard_categories", "spec_bins", "spec_frames",
                          "depth_rays", "depth_max", "dataset_seed", "ild_coefficient",
                          "depth_fov_deg"}) {
    const auto it = ckpt.meta.find(key);
    if (it == ckpt.meta.end()) {
      throw CliError{ErrorCategory::kData, std::string("checkpoint lacks meta key ") + key};
    }
    from_meta[key] = it->second;
  }
  from_meta["audio_snr_db"] = a.snr;
  from_meta["depth_noise_std"] = std::to_string(a.depth_noise);
  trainer::apply_overrides(cfg, from_meta);
  cfg.validate();

  const auto scenes = env::load_scenes(a.scenes);
  const auto episodes = env::load_episodes(a.episodes);
  for (const env::Episode& e : episodes) {
    if (e.category_id >= cfg.num_categories) {
      throw CliError{ErrorCategory::kConfig,
                     "episode category " + std::to_string(e.category_id) +
                         " exceeds the checkpoint's category count " +
                         std::to_string(cfg.num_categories)};
    }
  }
  const acoustics::SignatureBank bank(cfg.num_categories, cfg.dataset_seed, cfg.spec_bins,
                                      cfg.spec_frames);
  const eval::EvalReport report = eval::evaluate(
      net, scenes, episodes, bank, eval_config_from(cfg, derive_seed(a.seed, "eval")));

  fs::create_directories(a.out_dir);
  {
    std::ofstream os(a.out_dir / "summary.csv");
    eval::write_summaries(os, report.summaries);
  }
  {
    std::ofstream os(a.out_dir / "results.jsonl");
    eval::write_results(os, report.results);
  }
  eval::write_summaries(std::cout, report.summaries);
  if (a.trajectories > 0) {
    fs::create_directories(a.out_dir / "trajectories");
    const int n = std::min<int>(a.trajectories, static_cast<int>(report.results.size()));
    for (int i = 0; i < n; ++i) {
      const env::Episode& ep = episodes[i];
      char name[64];
      std::snprintf(name, sizeof name, "episode_%04d_cat%02d.svg", i, ep.category_id);
      eval::export_trajectory(report.results[i], env::find_scene(scenes, ep.scene_id), ep,
                              a.out_dir / "trajectories" / name);
    }
  }
  if (a.probe) {
    eval::ProbeConfig pc;
    pc.train_samples = a.probe_train;
    pc.test_samples = a.probe_test;
    pc.seed = derive_seed(a.seed, "probe");
    const eval::ProbeResult probe =
        eval::probe_semantic_leakage(net, scenes, bank, cfg.acoustic(), pc);
    std::ofstream os(a.out_dir / "probe.csv");
    os << "accuracy,chance,train_samples,test_samples\n"
       << probe.accuracy << "," << probe.chance << "," << probe.train_samples << ","
       << probe.test_samples << "\n";
    std::printf("probe accuracy=%.4f chance=%.4f\n", probe.accuracy, probe.chance);
  }
  return 0;
}

// ----------------------------------------------------------------- gradcheck

int cmd_gradcheck(double tolerance, std::uint64_t seed, const std::string& fault) {
  ad::inject_sign_fault(fault);
  const ad::GradCheckReport report = policy::run_gradcheck_suite(tolerance, seed);
  report.print(std::cout);
  if (!report.passed()) {
    throw CliError{ErrorCategory::kCheckFailed, "gradient check failed"};
  }
  std::printf("all %zu checks passed\n", report.entries.size());
  return 0;
}

// --------------------------------------------------------------------- curve

int cmd_curve(const std::vector<std::string>& runs, const std::string& metric,
              const fs::path& out) {
  std::vector<std::pair<std::string, fs::path>> labelled;
  for (const std::string& r : runs) {
    const auto eq = r.find('=');
    if (eq == std::string::npos) labelled.emplace_back(fs::path(r).stem().string(), r);
    else labelled.emplace_back(r.substr(0, eq), r.substr(eq + 1));
  }
  eval::emit_learning_curve(labelled, metric, out);
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audio-visual navigation: datasets, training, evaluation"};
  app.require_subcommand(1);
  bool deterministic = false;
  app.add_flag("--deterministic", deterministic,
               "Single-threaded, reproducible execution (always on for this build)");

  GenScenesArgs gs;
  auto* gen_scenes = app.add_subcommand("gen-scenes", "Generate train/test scene sets");
  gen_scenes->add_option("--out-dir", gs.out_dir, "Output directory")->required();
  gen_scenes->add_option("--train", gs.train_count, "Number of train scenes");
  gen_scenes->add_option("--test", gs.test_count, "Number of test scenes");
  gen_scenes->add_option("--width", gs.width, "Grid width");
  gen_scenes->add_option("--height", gs.height, "Grid height");
  gen_scenes->add_option("--rooms", gs.rooms, "Rooms per scene");
  gen_scenes->add_option("--seed", gs.seed, "Root seed");
  gen_scenes->add_flag("--force", gs.force, "Overwrite existing files");

  GenEpisodesArgs ge;
  auto* gen_eps = app.add_subcommand("gen-episodes", "Generate episodes for a scene set");
  gen_eps->add_option("--scenes", ge.scenes, "Scene file")->required()->check(CLI::ExistingFile);
  gen_eps->add_option("--out", ge.out, "Episode file to write")->required();
  gen_eps->add_option("--per-scene", ge.per_scene, "Episodes per scene");
  gen_eps->add_option("--split", ge.split,
                      "train: heard categories only; eval: all; unheard: unheard only");
  gen_eps->add_option("--heard", ge.heard, "Categories 0..k-1 are heard");
  gen_eps->add_option("--num-categories", ge.num_categories, "Total sound categories");
  gen_eps->add_option("--seed", ge.seed, "Root seed");
  gen_eps->add_flag("--force", ge.force, "Overwrite an existing file");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a policy with PPO");
  train->add_option("--config", ta.config, "Flat key: value config file (wins over flags)")
      ->check(CLI::ExistingFile);
  train->add_option("--set", ta.sets, "Override one config key (key=value), repeatable");
  train->add_option("--seed", ta.seed, "Root seed");
  train->add_option("--output-dir", ta.output_dir, "Log and checkpoint directory");
  train->add_option("--ablation", ta.ablation, "full | no_AC | no_LP | none");
  train->add_option("--total-episodes", ta.total_episodes, "Episodes before stopping");
  train->add_option("--max-env-steps", ta.max_env_steps, "Env-step cap, 0 = none");
  train->footer([] {
    std::string s = "Config keys:\n";
    for (const auto& k : trainer::config_schema()) {
      s += "  " + k.name + std::string(k.name.size() < 20 ? 20 - k.name.size() : 1, ' ') +
           k.description + "\n";
    }
    return s;
  }());

  EvalArgs ea;
  auto* evaluate = app.add_subcommand("eval", "Evaluate a checkpoint (greedy)");
  evaluate->add_option("--checkpoint", ea.checkpoint, "Checkpoint stem")->required();
  evaluate->add_option("--scenes", ea.scenes, "Scene file")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--episodes", ea.episodes, "Episode file")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--out-dir", ea.out_dir, "Output directory");
  evaluate->add_option("--snr", ea.snr, "Audio SNR in dB (e.g. 20, 30, 40, 50) or none");
  evaluate->add_option("--depth-noise", ea.depth_noise, "Depth noise standard deviation");
  evaluate->add_option("--trajectories", ea.trajectories, "Export SVGs for the first N episodes");
  evaluate->add_flag("--probe", ea.probe, "Also run the semantic-leakage probe");
  evaluate->add_option("--probe-train", ea.probe_train, "Probe training samples");
  evaluate->add_option("--probe-test", ea.probe_test, "Probe held-out samples");
  evaluate->add_option("--seed", ea.seed, "Noise and probe seed");

  double tolerance = 1e-3;
  std::uint64_t gc_seed = 7;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck->add_option("--tolerance", tolerance, "Maximum relative error");
  gradcheck->add_option("--seed", gc_seed, "Seed for random inputs");
  std::string fault;
  gradcheck->add_option("--inject-sign-bug", fault,
                        "Negate the backward rule of this op (self-test of the checker)");

  std::vector<std::string> runs;
  std::string metric = "sr_rolling";
  fs::path curve_out = "curve.csv";
  auto* curve = app.add_subcommand("curve", "Extract learning curves from training logs");
  curve->add_option("--run", runs, "label=path/to/log.csv, repeatable")->required();
  curve->add_option("--metric", metric, "Column to extract");
  curve->add_option("--out", curve_out, "Output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(ErrorCategory::kUsage, e.what());
  }
  ta.deterministic = deterministic;

  try {
    if (*gen_scenes) return cmd_gen_scenes(gs);
    if (*gen_eps) return cmd_gen_episodes(ge);
    if (*train) return cmd_train(ta);
    if (*evaluate) return cmd_eval(ea);
    if (*gradcheck) return cmd_gradcheck(tolerance, gc_seed, fault);
    if (*curve) return cmd_curve(runs, metric, curve_out);
  } catch (const CliError& e) {
    return report_error(e.category, e.message);
  } catch (const env::SceneError& e) {
    return report_error(ErrorCategory::kData, e.what());
  } catch (const ad::NonFiniteError& e) {
    return report_error(ErrorCategory::kNumeric, e.what());
  } catch (const ad::ShapeError& e) {
    return report_error(ErrorCategory::kData, e.what());
  } catch (const fs::filesystem_error& e) {
    return report_error(ErrorCategory::kIo, e.what());
  } catch (const std::invalid_argument& e) {
    return report_error(ErrorCategory::kConfig, e.what());
  } catch (const std::out_of_range& e) {
    return report_error(ErrorCategory::kData, e.what());
  } catch (const std::runtime_error& e) {
    return report_error(ErrorCategory::kIo, e.what());
  } catch (const std::exception& e) {
    return report_error(ErrorCategory::kInternal, e.what());
  }
  return report_error(ErrorCategory::kUsage, "no subcommand");
}
