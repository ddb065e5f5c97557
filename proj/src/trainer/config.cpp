#include "avnav/trainer/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <system_error>

namespace avnav::trainer {
namespace {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || std::isnan(v)) {
    throw std::invalid_argument("config key '" + key + "': not a number: '" + s + "'");
  }
  return v;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& s) {
  Int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("config key '" + key + "': not an integer: '" + s + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("config key '" + key + "': not a boolean: '" + s + "'");
}

struct KeyHandler {
  ConfigKey doc;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename T>
KeyHandler number_key(std::string name, std::string doc, T RunConfig::*member) {
  KeyHandler h{{name, std::move(doc)}, {}, {}};
  h.get = [member](const RunConfig& c) {
    if constexpr (std::is_floating_point_v<T>) {
      return format_double(c.*member);
    } else {
      return std::to_string(c.*member);
    }
  };
  h.set = [member, name](RunConfig& c, const std::string& s) {
    if constexpr (std::is_floating_point_v<T>) {
      c.*member = parse_double(name, s);
    } else {
      c.*member = parse_int<T>(name, s);
    }
  };
  return h;
}

template <typename T>
KeyHandler ppo_key(std::string name, std::string doc, T PpoConfig::*member) {
  KeyHandler h{{name, std::move(doc)}, {}, {}};
  h.get = [member](const RunConfig& c) {
    if constexpr (std::is_floating_point_v<T>) {
      return format_double(c.ppo.*member);
    } else {
      return std::to_string(c.ppo.*member);
    }
  };
  h.set = [member, name](RunConfig& c, const std::string& s) {
    if constexpr (std::is_floating_point_v<T>) {
      c.ppo.*member = parse_double(name, s);
    } else {
      c.ppo.*member = parse_int<T>(name, s);
    }
  };
  return h;
}

KeyHandler path_key(std::string name, std::string doc,
                    std::filesystem::path RunConfig::*member) {
  return {{std::move(name), std::move(doc)},
          [member](const RunConfig& c) { return (c.*member).string(); },
          [member](RunConfig& c, const std::string& s) { c.*member = s; }};
}

const std::vector<KeyHandler>& handlers() {
  static const std::vector<KeyHandler> table = [] {
    std::vector<KeyHandler> t;
    t.push_back(ppo_key("gamma", "discount factor, (0, 1]", &PpoConfig::gamma));
    t.push_back(ppo_key("gae_lambda", "GAE lambda, [0, 1]", &PpoConfig::gae_lambda));
    t.push_back(ppo_key("clip_epsilon", "PPO ratio clip, > 0", &PpoConfig::clip_epsilon));
    t.push_back(ppo_key("update_epochs", "PPO epochs per rollout", &PpoConfig::update_epochs));
    t.push_back(ppo_key("minibatches", "minibatches per epoch", &PpoConfig::minibatches));
    t.push_back(ppo_key("learning_rate", "optimizer step size", &PpoConfig::learning_rate));
    t.push_back(ppo_key("value_coef", "value loss weight", &PpoConfig::value_coef));
    t.push_back(ppo_key("entropy_coef", "entropy bonus weight", &PpoConfig::entropy_coef));
    t.push_back(ppo_key("locator_weight", "location-predictor loss weight",
                        &PpoConfig::locator_weight));
    t.push_back(ppo_key("classifier_weight", "audio-classifier loss weight",
                        &PpoConfig::classifier_weight));
    t.push_back(ppo_key("adversarial_bound", "upper bound of the reversal strength",
                        &PpoConfig::adversarial_bound));
    t.push_back(ppo_key("total_episodes", "episodes to complete before stopping",
                        &PpoConfig::total_episodes));
    t.push_back(ppo_key("rollout_length", "steps per env per rollout",
                        &PpoConfig::rollout_length));
    t.push_back(ppo_key("sequence_length", "recurrent unroll length; divides rollout_length",
                        &PpoConfig::sequence_length));
    t.push_back(ppo_key("num_envs", "parallel environments", &PpoConfig::num_envs));
    t.push_back(ppo_key("seed", "root seed", &PpoConfig::seed));
    t.push_back({{"optimizer", "adam | plain"},
                 [](const RunConfig& c) { return ad::to_string(c.ppo.optimizer); },
                 [](RunConfig& c, const std::string& s) {
                   c.ppo.optimizer = ad::parse_optimizer_mode(s);
                 }});
    t.push_back(ppo_key("max_grad_norm", "global gradient-norm clip, 0 disables",
                        &PpoConfig::max_grad_norm));
    t.push_back(ppo_key("adam_epsilon", "Adam denominator epsilon",
                        &PpoConfig::adam_epsilon));
    t.push_back({{"ablation", "full | no_AC | no_LP | none"},
                 [](const RunConfig& c) { return to_string(c.ablation); },
                 [](RunConfig& c, const std::string& s) { c.ablation = parse_ablation(s); }});
    t.push_back(number_key("max_env_steps", "stop after this many env steps, 0 = no cap",
                           &RunConfig::max_env_steps));
    t.push_back({{"anneal", "linearly decay learning rate and entropy bonus to zero"},
                 [](const RunConfig& c) { return std::string(c.anneal ? "true" : "false"); },
                 [](RunConfig& c, const std::string& s) { c.anneal = parse_bool("anneal", s); }});
    t.push_back(number_key("checkpoint_every", "updates between checkpoints",
                           &RunConfig::checkpoint_every));
    t.push_back(number_key("sr_window", "episodes in the rolling success rate",
                           &RunConfig::sr_window));
    t.push_back({{"deterministic", "single-threaded reproducible execution"},
                 [](const RunConfig& c) {
                   return std::string(c.deterministic ? "true" : "false");
                 },
                 [](RunConfig& c, const std::string& s) {
                   c.deterministic = parse_bool("deterministic", s);
                 }});
    t.push_back(number_key("spec_bins", "spectrogram frequency bins", &RunConfig::spec_bins));
    t.push_back(number_key("spec_frames", "spectrogram time frames",
                           &RunConfig::spec_frames));
    t.push_back(number_key("ild_coefficient", "interaural level difference strength",
                           &RunConfig::ild_coefficient));
    t.push_back(number_key("dataset_seed", "sound signature seed", &RunConfig::dataset_seed));
    t.push_back(number_key("num_categories", "sound categories in total",
                           &RunConfig::num_categories));
    t.push_back(number_key("heard_categories", "categories 0..k-1 used for training",
                           &RunConfig::heard_categories));
    t.push_back(number_key("depth_rays", "depth sensor rays", &RunConfig::depth_rays));
    t.push_back(number_key("depth_fov_deg", "depth field of view in degrees",
                           &RunConfig::depth_fov_deg));
    t.push_back(number_key("depth_max", "depth clip range", &RunConfig::depth_max));
    t.push_back({{"audio_snr_db", "audio noise SNR in dB, none disables"},
                 [](const RunConfig& c) {
                   return c.audio_snr_db ? format_double(*c.audio_snr_db)
                                         : std::string("none");
                 },
                 [](RunConfig& c, const std::string& s) {
                   if (s == "none" || s.empty()) {
                     c.audio_snr_db.reset();
                   } else {
                     c.audio_snr_db = parse_double("audio_snr_db", s);
                   }
                 }});
    t.push_back(number_key("depth_noise_std", "depth noise standard deviation",
                           &RunConfig::depth_noise_std));
    t.push_back(path_key("train_scenes", "training scene file", &RunConfig::train_scenes));
    t.push_back(path_key("train_episodes", "training episode file",
                         &RunConfig::train_episodes));
    t.push_back(path_key("eval_scenes", "scenes for periodic evaluation",
                         &RunConfig::eval_scenes));
    t.push_back(path_key("eval_episodes", "episodes for periodic evaluation",
                         &RunConfig::eval_episodes));
    t.push_back(number_key("eval_every", "updates between evaluations, 0 disables",
                           &RunConfig::eval_every));
    t.push_back(path_key("output_dir", "log and checkpoint directory",
                         &RunConfig::output_dir));
    t.push_back(path_key("resume_from", "checkpoint stem to resume from",
                         &RunConfig::resume_from));
    return t;
  }();
  return table;
}

const KeyHandler& handler(const std::string& key) {
  for (const KeyHandler& h : handlers()) {
    if (h.doc.name == key) return h;
  }
  throw std::invalid_argument("unknown config key '" + key + "'");
}

}  // namespace

AblationMode parse_ablation(const std::string& s) {
  if (s == "full") return AblationMode::kFull;
  if (s == "no_AC") return AblationMode::kNoClassifier;
  if (s == "no_LP") return AblationMode::kNoLocator;
  if (s == "none") return AblationMode::kNone;
  throw std::invalid_argument("unknown ablation mode '" + s + "'");
}

std::string to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::kFull: return "full";
    case AblationMode::kNoClassifier: return "no_AC";
    case AblationMode::kNoLocator: return "no_LP";
    case AblationMode::kNone: return "none";
  }
  return "?";
}

void PpoConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must lie in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) fail("gae_lambda must lie in [0, 1]");
  if (!(clip_epsilon > 0.0)) fail("clip_epsilon must be > 0");
  if (update_epochs < 1) fail("update_epochs must be >= 1");
  if (minibatches < 1) fail("minibatches must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    fail("learning_rate must be finite and >= 0");
  }
  if (value_coef < 0.0 || entropy_coef < 0.0) fail("loss coefficients must be >= 0");
  if (locator_weight < 0.0 || classifier_weight < 0.0) fail("aux weights must be >= 0");
  if (!(adversarial_bound >= 0.0)) fail("adversarial_bound must be >= 0");
  if (total_episodes < 0) fail("total_episodes must be >= 0");
  if (rollout_length < 1 || num_envs < 1) fail("rollout_length and num_envs must be >= 1");
  if (sequence_length < 1 || rollout_length % sequence_length != 0) {
    fail("sequence_length must be >= 1 and divide rollout_length");
  }
  if (minibatches > rollout_length / sequence_length * num_envs) {
    fail("minibatches exceeds the number of training sequences");
  }
  if (max_grad_norm < 0.0) fail("max_grad_norm must be >= 0");
  if (!(adam_epsilon > 0.0)) fail("adam_epsilon must be > 0");
}

void RunConfig::validate() const {
  ppo.validate();
  acoustic().validate();
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (max_env_steps < 0) fail("max_env_steps must be >= 0");
  if (checkpoint_every < 1) fail("checkpoint_every must be >= 1");
  if (sr_window < 1) fail("sr_window must be >= 1");
  if (heard_categories < 2 || heard_categories > num_categories) {
    fail("heard_categories must lie in [2, num_categories]");
  }
  if (depth_rays < 1) fail("depth_rays must be >= 1");
  if (!(depth_fov_deg > 0.0 && depth_fov_deg < 360.0)) fail("depth_fov_deg out of range");
  if (!(depth_max > 0.0)) fail("depth_max must be > 0");
  if (depth_noise_std < 0.0) fail("depth_noise_std must be >= 0");
  if (eval_every < 0) fail("eval_every must be >= 0");
}

acoustics::AcousticConfig RunConfig::acoustic() const {
  acoustics::AcousticConfig a;
  a.bins = spec_bins;
  a.frames = spec_frames;
  a.ild_coefficient = ild_coefficient;
  a.noise_snr_db = audio_snr_db;
  a.dataset_seed = dataset_seed;
  return a;
}

env::DepthConfig RunConfig::depth() const {
  return {depth_rays, depth_fov_deg * std::numbers::pi / 180.0, depth_max};
}

env::SensorNoise RunConfig::noise() const { return {audio_snr_db, depth_noise_std}; }

policy::PolicyDims RunConfig::policy_dims() const {
  policy::PolicyDims d;
  d.spec_bins = spec_bins;
  d.spec_frames = spec_frames;
  d.depth_rays = depth_rays;
  d.depth_max = depth_max;
  d.heard_categories = heard_categories;
  return d;
}

bool RunConfig::classifier_enabled() const {
  return ablation == AblationMode::kFull || ablation == AblationMode::kNoLocator;
}

bool RunConfig::locator_enabled() const {
  return ablation == AblationMode::kFull || ablation == AblationMode::kNoClassifier;
}

PpoConfig RunConfig::effective_ppo() const {
  PpoConfig p = ppo;
  if (!classifier_enabled()) p.classifier_weight = 0.0;
  if (!locator_enabled()) p.locator_weight = 0.0;
  return p;
}

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = [] {
    std::vector<ConfigKey> out;
    for (const KeyHandler& h : handlers()) out.push_back(h.doc);
    return out;
  }();
  return schema;
}

void apply_overrides(RunConfig& config,
                     const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) handler(key).set(config, value);
}

std::string config_value(const RunConfig& config, const std::string& key) {
  return handler(key).get(config);
}

RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    throw std::runtime_error("cannot read config file " + path.string());
  } catch (const YAML::Exception& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  RunConfig config = base;
  if (root.IsNull()) return config;
  if (!root.IsMap()) {
    throw std::invalid_argument("config " + path.string() + ": expected key: value lines");
  }
  std::map<std::string, std::string> values;
  for (const auto& kv : root) {
    if (!kv.second.IsScalar() && !kv.second.IsNull()) {
      throw std::invalid_argument("config key '" + kv.first.as<std::string>() +
                                  "': nested values are not allowed");
    }
    values[kv.first.as<std::string>()] =
        kv.second.IsNull() ? std::string() : kv.second.as<std::string>();
  }
  apply_overrides(config, values);
  return config;
}

void write_run_config(std::ostream& os, const RunConfig& config) {
  for (const KeyHandler& h : handlers()) {
    os << h.doc.name << ": " << h.get(config) << "\n";
  }
}

}  // namespace avnav::trainer
