#ifndef AVNAV_POLICY_POLICY_HPP_
#define AVNAV_POLICY_POLICY_HPP_

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "avnav/env/navigation.hpp"
#include "avnav/policy/layers.hpp"

namespace avnav::policy {

struct PolicyDims {
  int spec_bins = 16;
  int spec_frames = 16;
  int depth_rays = 16;
  double depth_max = 10.0;
  int heard_categories = 8;
  std::size_t audio_hidden = 128;
  std::size_t audio_embed = 64;
  std::size_t visual_hidden = 64;
  std::size_t visual_embed = 32;
  std::size_t core_hidden = 128;
  std::size_t head_hidden = 64;

  std::size_t audio_input() const {
    return 2 * static_cast<std::size_t>(spec_bins) * spec_frames;
  }
  std::size_t fusion_input() const {
    return audio_embed + visual_embed + env::kNumActions;
  }
};

// Policy-side encoding of one observation: log-compressed spectrogram
// (left then right), depth scaled to [0, 1], previous action index.
struct EncodedObservation {
  std::vector<float> audio;
  std::vector<float> depth;
  int prev_action = 0;
};

EncodedObservation encode_observation(const env::ObservationBundle& obs,
                                      const PolicyDims& dims);

struct ObservationBatch {
  Tensor audio;        // [B, 2 F T]
  Tensor depth;        // [B, R]
  Tensor prev_action;  // [B, 4] one-hot
  std::size_t size() const { return audio.rows(); }
};

ObservationBatch make_batch(std::span<const EncodedObservation> rows,
                            const PolicyDims& dims);

struct PolicyOutput {
  Tensor action_logits;  // [B, 4]
  Tensor value;          // [B, 1]
  Tensor class_logits;   // [B, C_heard]; undefined when the classifier is off
  Tensor angle_pred;     // [B, 4] = (sin a, cos a, sin b, cos b); undefined when off
  Tensor hidden;         // [B, H] temporal feature O_t
  Tensor audio_feature;  // [B, 64] audio-encoder output
};

struct ForwardHeads {
  bool classifier = true;
  bool locator = true;
};

enum class ParamGroup {
  kAudioEncoder,
  kVisualEncoder,
  kCore,
  kActor,
  kCritic,
  kAudioClassifier,
  kLocationPredictor,
};

std::string to_string(ParamGroup g);

// Recurrent actor-critic with two auxiliary heads. The audio classifier sees
// only the audio-encoder output, routed through a gradient reversal layer;
// the location predictor, actor and critic see only O_t.
class Policy {
 public:
  Policy(PolicyDims dims, std::uint64_t seed);

  PolicyOutput forward(Tape& tape, const ObservationBatch& obs,
                       const Tensor& hidden, float lambda,
                       ForwardHeads heads = {}) const;

  // Unrolls the core over `steps` time steps of `streams` parallel sequences.
  // Rows of `obs` are time-major (row t * streams + s). `hidden` [streams, H]
  // enters step 0; after step t the state of stream s is multiplied by
  // keep[t * streams + s], so 0 restarts it from zeros. All outputs keep the
  // time-major row order. steps == 1 matches forward().
  PolicyOutput forward_sequence(Tape& tape, const ObservationBatch& obs,
                                const Tensor& hidden, std::span<const float> keep,
                                std::size_t steps, float lambda,
                                ForwardHeads heads = {}) const;

  // Audio-encoder output alone, [B, audio_embed].
  Tensor encode_audio(Tape& tape, const Tensor& audio) const;

  Tensor initial_hidden(std::size_t batch) const;
  const PolicyDims& dims() const { return dims_; }

  std::vector<NamedTensor> parameters() const;
  std::vector<NamedTensor> parameters(ParamGroup group) const;
  void zero_parameters();
  void copy_from(const Policy& other);
  std::size_t parameter_count() const;

 private:
  PolicyDims dims_;
  Mlp audio_encoder_;
  Mlp visual_encoder_;
  GruCell core_;
  Linear actor_;
  Linear critic_;
  Mlp audio_classifier_;
  Mlp location_predictor_;
};

enum class ActMode { kSample, kGreedy };

struct ActionChoice {
  env::Action action = env::Action::kStop;
  float logprob = 0.0f;
};

// Sample mode draws from softmax(logits); greedy mode takes the argmax with
// the lowest index winning ties.
ActionChoice act(std::span<const float> logits, std::mt19937_64& rng,
                 ActMode mode);

// Adversarial intensity 2b / (1 + exp(-10 n / N)) - b.
double lambda_schedule(double n, double total, double bound);

// atan2 of the pair after normalising it to unit length.
double decode_angle(double sin_pred, double cos_pred);

// (sin a, cos a, sin b, cos b) regression target.
std::array<float, 4> angle_targets(const env::RelativeAngles& angles);

}  // namespace avnav::policy

#endif  // AVNAV_POLICY_POLICY_HPP_
