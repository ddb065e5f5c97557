#include "avnav/eval/probe.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

#include "avnav/common/random.hpp"
#include "avnav/env/navigation.hpp"

namespace avnav::eval {
namespace {

ad::Tensor features(const policy::Policy& policy, const std::vector<ProbeSample>& samples) {
  const std::size_t a = policy.dims().audio_input();
  const std::size_t e = policy.dims().audio_embed;
  ad::Tensor out = ad::Tensor::zeros({samples.size(), e});
  constexpr std::size_t kChunk = 256;
  for (std::size_t begin = 0; begin < samples.size(); begin += kChunk) {
    const std::size_t end = std::min(samples.size(), begin + kChunk);
    ad::Tensor audio = ad::Tensor::zeros({end - begin, a});
    for (std::size_t i = begin; i < end; ++i) {
      std::copy(samples[i].audio.begin(), samples[i].audio.end(),
                audio.data().begin() + (i - begin) * a);
    }
    ad::Tape tape(false);
    const ad::Tensor f = policy.encode_audio(tape, audio);
    std::copy(f.data().begin(), f.data().end(), out.data().begin() + begin * e);
  }
  return out;
}

ad::Tensor rows_of(const ad::Tensor& x, std::span<const std::size_t> rows) {
  const std::size_t c = x.cols();
  ad::Tensor out = ad::Tensor::zeros({rows.size(), c});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    std::copy(x.data().begin() + rows[k] * c, x.data().begin() + (rows[k] + 1) * c,
              out.data().begin() + k * c);
  }
  return out;
}

}  // namespace

std::vector<ProbeSample> make_probe_samples(const std::vector<env::SceneGrid>& scenes,
                                            const acoustics::SignatureBank& bank,
                                            const acoustics::AcousticConfig& acoustic,
                                            const policy::PolicyDims& dims, int count,
                                            std::uint64_t seed) {
  if (scenes.empty()) throw std::invalid_argument("probe: no scenes");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<env::Cell>> free_cells;
  for (const env::SceneGrid& s : scenes) free_cells.push_back(s.free_cells());
  std::vector<ProbeSample> out;
  out.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(out.size()) < count) {
    const std::size_t si = std::uniform_int_distribution<std::size_t>(0, scenes.size() - 1)(rng);
    const auto& cells = free_cells[si];
    if (cells.size() < 2) continue;
    std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
    const env::Cell agent = cells[pick(rng)];
    const env::Cell source = cells[pick(rng)];
    const int heading = std::uniform_int_distribution<int>(0, 3)(rng);
    const int elevation = std::uniform_int_distribution<int>(0, 2)(rng);
    const int category = std::uniform_int_distribution<int>(0, dims.heard_categories - 1)(rng);
    if (agent == source) continue;
    const std::vector<int> field = env::distance_field(scenes[si], source);
    const int steps = field[scenes[si].index(agent)];
    if (steps < 0) continue;

    env::Episode ep;
    ep.scene_id = scenes[si].scene_id();
    ep.source_x = source.x;
    ep.source_y = source.y;
    ep.source_elevation = elevation;
    ep.category_id = category;
    const env::AgentPose pose{agent.x, agent.y, static_cast<env::Heading>(heading)};
    const env::RelativeAngles angles = env::relative_angles(pose, ep);

    env::ObservationBundle obs;
    obs.depth.assign(static_cast<std::size_t>(dims.depth_rays), 0.0f);
    obs.audio = acoustics::render(bank.get(category), steps * env::SceneGrid::kSpacing,
                                  angles.yaw, angles.pitch, acoustic);
    out.push_back({policy::encode_observation(obs, dims).audio, category});
  }
  return out;
}

ProbeResult probe_semantic_leakage(const policy::Policy& policy,
                                   const std::vector<env::SceneGrid>& scenes,
                                   const acoustics::SignatureBank& bank,
                                   const acoustics::AcousticConfig& acoustic,
                                   const ProbeConfig& config) {
  const int classes = policy.dims().heard_categories;
  if (config.train_samples < 10 * classes || config.test_samples < 1) {
    throw std::invalid_argument("probe: insufficient probe data (need >= " +
                                std::to_string(10 * classes) +
                                " training samples and >= 1 test sample)");
  }
  if (config.epochs < 1 || config.batch_size < 1) {
    throw std::invalid_argument("probe: epochs and batch_size must be >= 1");
  }
  const auto train = make_probe_samples(scenes, bank, acoustic, policy.dims(),
                                        config.train_samples,
                                        derive_seed(config.seed, "probe-train"));
  const auto test = make_probe_samples(scenes, bank, acoustic, policy.dims(),
                                       config.test_samples,
                                       derive_seed(config.seed, "probe-test"));
  const ad::Tensor train_x = features(policy, train);
  const ad::Tensor test_x = features(policy, test);
  std::vector<int> train_y(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) train_y[i] = train[i].category_id;
  std::mt19937_64 rng(derive_seed(config.seed, "probe-fit"));
  if (config.shuffle_labels) std::shuffle(train_y.begin(), train_y.end(), rng);

  policy::Mlp head("probe", {policy.dims().audio_embed, 64, static_cast<std::size_t>(classes)},
                   false);
  head.init(rng);
  std::vector<ad::NamedTensor> params;
  head.append_params(params);
  ad::OptimizerConfig opt_cfg;
  opt_cfg.epsilon = 1e-8f;
  ad::Optimizer opt(params, opt_cfg);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t begin = 0; begin < order.size(); begin += bs) {
      const std::span<const std::size_t> rows(order.data() + begin,
                                              std::min(bs, order.size() - begin));
      std::vector<int> labels(rows.size());
      for (std::size_t k = 0; k < rows.size(); ++k) labels[k] = train_y[rows[k]];
      ad::Tape tape;
      const ad::Tensor loss = tape.cross_entropy(head.forward(tape, rows_of(train_x, rows)), labels);
      opt.zero_grad();
      tape.backward(loss);
      opt.step(static_cast<float>(config.learning_rate));
    }
  }

  ad::Tape tape(false);
  const ad::Tensor logits = head.forward(tape, test_x);
  int correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const float* row = logits.data().data() + i * classes;
    const int guess = static_cast<int>(std::max_element(row, row + classes) - row);
    correct += guess == test[i].category_id ? 1 : 0;
  }
  ProbeResult r;
  r.accuracy = double(correct) / double(test.size());
  r.chance = 1.0 / classes;
  r.train_samples = static_cast<int>(train.size());
  r.test_samples = static_cast<int>(test.size());
  return r;
}

}  // namespace avnav::eval
