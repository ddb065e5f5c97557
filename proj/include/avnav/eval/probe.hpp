#ifndef AVNAV_EVAL_PROBE_HPP_
#define AVNAV_EVAL_PROBE_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "avnav/acoustics/acoustics.hpp"
#include "avnav/env/scene.hpp"
#include "avnav/policy/policy.hpp"

namespace avnav::eval {

struct ProbeConfig {
  int train_samples = 4000;
  int test_samples = 1000;
  int epochs = 30;
  int batch_size = 128;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  // Sanity control: permute the training labels.
  bool shuffle_labels = false;
};

struct ProbeResult {
  double accuracy = 0.0;
  double chance = 0.0;
  int train_samples = 0;
  int test_samples = 0;
};

struct ProbeSample {
  std::vector<float> audio;  // policy-encoded spectrogram
  int category_id = 0;
};

// Noise-free renders of heard categories at random (agent, source) pairs.
std::vector<ProbeSample> make_probe_samples(const std::vector<env::SceneGrid>& scenes,
                                            const acoustics::SignatureBank& bank,
                                            const acoustics::AcousticConfig& acoustic,
                                            const policy::PolicyDims& dims, int count,
                                            std::uint64_t seed);

// Trains a fresh 64-64-C classifier on frozen audio-encoder features and
// reports held-out accuracy. Throws std::invalid_argument when there are
// fewer than 10 training samples per class or no test samples.
ProbeResult probe_semantic_leakage(const policy::Policy& policy,
                                   const std::vector<env::SceneGrid>& scenes,
                                   const acoustics::SignatureBank& bank,
                                   const acoustics::AcousticConfig& acoustic,
                                   const ProbeConfig& config);

}  // namespace avnav::eval

#endif  // AVNAV_EVAL_PROBE_HPP_
