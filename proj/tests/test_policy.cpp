#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "avnav/env/episode.hpp"
#include "avnav/env/navigation.hpp"
#include "avnav/policy/gradcheck.hpp"
#include "avnav/policy/policy.hpp"

namespace ad = avnav::ad;
namespace env = avnav::env;
namespace pol = avnav::policy;
using ad::Tape;
using ad::Tensor;

namespace {

pol::ObservationBatch random_batch(const pol::PolicyDims& dims, std::size_t b,
                                   std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<pol::EncodedObservation> rows(b);
  for (auto& r : rows) {
    r.audio.resize(dims.audio_input());
    for (float& v : r.audio) v = u(rng);
    r.depth.resize(dims.depth_rays);
    for (float& v : r.depth) v = u(rng);
    r.prev_action = static_cast<int>(rng() % 4);
  }
  return pol::make_batch(rows, dims);
}

Tensor random_hidden(std::size_t b, std::size_t h, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(-0.9f, 0.9f);
  std::vector<float> v(b * h);
  for (float& x : v) x = u(rng);
  return Tensor::from({b, h}, v);
}

std::vector<float> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

std::vector<float> grads_of(const std::vector<ad::NamedTensor>& params) {
  std::vector<float> out;
  for (const auto& p : params) {
    if (p.tensor.has_grad()) {
      out.insert(out.end(), p.tensor.grad().begin(), p.tensor.grad().end());
    } else {
      out.insert(out.end(), p.tensor.size(), 0.0f);
    }
  }
  return out;
}

void zero_all(const pol::Policy& p) {
  for (auto& t : p.parameters()) const_cast<Tensor&>(t.tensor).zero_grad();
}

}  // namespace

TEST(LambdaSchedule, KnownValues) {
  for (double b : {0.5, 1.0, 2.0}) EXPECT_EQ(pol::lambda_schedule(0, 1000, b), 0.0);
  EXPECT_NEAR(pol::lambda_schedule(500, 1000, 1.0), 0.986614, 1e-6);
  EXPECT_NEAR(pol::lambda_schedule(1000, 1000, 1.0), 0.9999092, 1e-6);
  EXPECT_NEAR(pol::lambda_schedule(500, 1000, 1.0), 2.0 / (1.0 + std::exp(-5.0)) - 1.0,
              1e-15);
}

TEST(LambdaSchedule, MonotoneAndBounded) {
  double prev = -1.0;
  for (int n = 0; n <= 2000; ++n) {
    const double l = pol::lambda_schedule(n, 2000, 1.5);
    EXPECT_GE(l, prev);
    EXPECT_GE(l, 0.0);
    EXPECT_LT(l, 1.5);
    prev = l;
  }
}

TEST(LambdaSchedule, InvalidArgumentsThrow) {
  EXPECT_THROW(pol::lambda_schedule(0, 0, 1.0), std::invalid_argument);
  EXPECT_THROW(pol::lambda_schedule(11, 10, 1.0), std::invalid_argument);
  EXPECT_THROW(pol::lambda_schedule(-1, 10, 1.0), std::invalid_argument);
}

TEST(Act, DominantLogitWinsInBothModes) {
  const std::vector<float> logits{0.0f, 0.0f, 0.0f, 80.0f};
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(pol::act(logits, rng, pol::ActMode::kSample).action, env::Action::kStop);
  }
  EXPECT_EQ(pol::act(logits, rng, pol::ActMode::kGreedy).action, env::Action::kStop);
}

TEST(Act, GreedyTieBreaksToLowestIndex) {
  const std::vector<float> logits{1.0f, 1.0f, 1.0f, 1.0f};
  std::mt19937_64 rng(1);
  const auto c = pol::act(logits, rng, pol::ActMode::kGreedy);
  EXPECT_EQ(c.action, env::Action::kMoveForward);
  EXPECT_NEAR(c.logprob, std::log(0.25), 1e-6);
}

TEST(Act, SampleFrequenciesMatchSoftmax) {
  const std::vector<float> logits{0.5f, -1.0f, 1.2f, 0.0f};
  double z = 0.0;
  for (float l : logits) z += std::exp(l);
  std::mt19937_64 rng(42);
  std::array<int, 4> counts{};
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) {
    const auto c = pol::act(logits, rng, pol::ActMode::kSample);
    ++counts[static_cast<int>(c.action)];
    ASSERT_NEAR(c.logprob, logits[static_cast<int>(c.action)] - std::log(z), 1e-5);
  }
  for (int a = 0; a < 4; ++a) {
    EXPECT_NEAR(double(counts[a]) / kDraws, std::exp(logits[a]) / z, 0.01) << a;
  }
}

TEST(DecodeAngle, Examples) {
  EXPECT_DOUBLE_EQ(pol::decode_angle(0.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(pol::decode_angle(1.0, 0.0), std::numbers::pi / 2.0);
  EXPECT_NEAR(pol::decode_angle(0.6, 0.8), 0.643501, 1e-6);
  EXPECT_NEAR(pol::decode_angle(3.0, 4.0), 0.643501, 1e-6);
  EXPECT_THROW(pol::decode_angle(0.0, 0.0), std::invalid_argument);
}

TEST(AngleTargets, UnitCircleWithinTolerance) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> yaw(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> pitch(0.0, std::numbers::pi / 2.0);
  for (int i = 0; i < 1000; ++i) {
    const auto t = pol::angle_targets({yaw(rng), pitch(rng)});
    EXPECT_NEAR(double(t[0]) * t[0] + double(t[1]) * t[1], 1.0, 1e-6);
    EXPECT_NEAR(double(t[2]) * t[2] + double(t[3]) * t[3], 1.0, 1e-6);
  }
}

TEST(Forward, ZeroParametersGiveUniformActions) {
  pol::PolicyDims dims;
  pol::Policy net(dims, 1);
  net.zero_parameters();
  std::mt19937_64 rng(2);
  Tape tape(false);
  const auto out = net.forward(tape, random_batch(dims, 3, rng), net.initial_hidden(3), 0.0f);
  for (float v : out.action_logits.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Forward, OutputShapes) {
  pol::PolicyDims dims;
  pol::Policy net(dims, 1);
  std::mt19937_64 rng(2);
  Tape tape(false);
  const auto out = net.forward(tape, random_batch(dims, 5, rng), net.initial_hidden(5), 0.3f);
  EXPECT_EQ(out.action_logits.shape(), (ad::Shape{5, 4}));
  EXPECT_EQ(out.value.shape(), (ad::Shape{5, 1}));
  EXPECT_EQ(out.class_logits.shape(), (ad::Shape{5, 8}));
  EXPECT_EQ(out.angle_pred.shape(), (ad::Shape{5, 4}));
  EXPECT_EQ(out.hidden.shape(), (ad::Shape{5, 128}));
  EXPECT_EQ(out.audio_feature.shape(), (ad::Shape{5, 64}));
  EXPECT_THROW(net.forward(tape, random_batch(dims, 5, rng), net.initial_hidden(4), 0.0f),
               ad::ShapeError);
}

TEST(Forward, HiddenStateChangesTemporalFeature) {
  pol::PolicyDims dims;
  pol::Policy net(dims, 3);
  std::mt19937_64 rng(4);
  const auto obs = random_batch(dims, 1, rng);
  Tape tape(false);
  const auto a = net.forward(tape, obs, random_hidden(1, 128, rng), 0.0f);
  const auto b = net.forward(tape, obs, random_hidden(1, 128, rng), 0.0f);
  EXPECT_NE(values(a.hidden), values(b.hidden));
}

TEST(Forward, LambdaNeverChangesForwardValues) {
  pol::PolicyDims dims;
  pol::Policy net(dims, 5);
  std::mt19937_64 rng(6);
  const auto obs = random_batch(dims, 4, rng);
  const Tensor h = random_hidden(4, 128, rng);
  Tape tape;
  const auto a = net.forward(tape, obs, h, 0.0f);
  const auto b = net.forward(tape, obs, h, 1.0f);
  EXPECT_EQ(values(a.action_logits), values(b.action_logits));
  EXPECT_EQ(values(a.class_logits), values(b.class_logits));
  EXPECT_EQ(values(a.angle_pred), values(b.angle_pred));
  EXPECT_EQ(values(a.value), values(b.value));
}

TEST(Forward, ReplayReproducesTemporalFeaturesBitExactly) {
  pol::PolicyDims dims;
  pol::Policy net(dims, 8);
  std::mt19937_64 rng(9);
  std::vector<pol::ObservationBatch> seq;
  for (int t = 0; t < 6; ++t) seq.push_back(random_batch(dims, 2, rng));
  auto replay = [&] {
    std::vector<float> trace;
    Tensor h = net.initial_hidden(2);
    for (const auto& obs : seq) {
      Tape tape(false);
      h = net.forward(tape, obs, h, 0.0f, {false, false}).hidden.detach();
      trace.insert(trace.end(), h.data().begin(), h.data().end());
    }
    return trace;
  };
  EXPECT_EQ(replay(), replay());
}

TEST(Forward, SequenceUnrollMatchesStepwiseForward) {
  pol::PolicyDims dims;
  pol::Policy net(dims, 10);
  std::mt19937_64 rng(11);
  constexpr std::size_t kStreams = 3, kSteps = 4;
  const auto obs = random_batch(dims, kStreams * kSteps, rng);
  const Tensor h0 = random_hidden(kStreams, 128, rng);
  std::vector<float> keep(kStreams * kSteps, 1.0f);
  keep[1 * kStreams + 2] = 0.0f;  // stream 2 restarts after step 1
  Tape tape(false);
  const auto seq = net.forward_sequence(tape, obs, h0, keep, kSteps, 0.0f);

  Tensor h = h0;
  for (std::size_t t = 0; t < kSteps; ++t) {
    std::vector<pol::EncodedObservation> rows;
    pol::ObservationBatch step;
    step.audio = Tensor::zeros({kStreams, dims.audio_input()});
    step.depth = Tensor::zeros({kStreams, std::size_t(dims.depth_rays)});
    step.prev_action = Tensor::zeros({kStreams, 4});
    for (std::size_t s = 0; s < kStreams; ++s) {
      const std::size_t r = t * kStreams + s;
      for (std::size_t j = 0; j < dims.audio_input(); ++j) {
        step.audio[s * dims.audio_input() + j] = obs.audio[r * dims.audio_input() + j];
      }
      for (int j = 0; j < dims.depth_rays; ++j) {
        step.depth[s * dims.depth_rays + j] = obs.depth[r * dims.depth_rays + j];
      }
      for (int j = 0; j < 4; ++j) step.prev_action[s * 4 + j] = obs.prev_action[r * 4 + j];
    }
    const auto out = net.forward(tape, step, h, 0.0f);
    for (std::size_t s = 0; s < kStreams; ++s) {
      for (std::size_t j = 0; j < 128; ++j) {
        EXPECT_NEAR(seq.hidden.at(t * kStreams + s, j), out.hidden.at(s, j), 1e-6);
      }
      for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_NEAR(seq.action_logits.at(t * kStreams + s, j), out.action_logits.at(s, j),
                    1e-6);
      }
    }
    h = out.hidden.clone();
    for (std::size_t s = 0; s < kStreams; ++s) {
      if (keep[t * kStreams + s] == 0.0f) {
        std::fill_n(h.data().begin() + s * 128, 128, 0.0f);
      }
    }
  }
}

TEST(GradientRouting, ClassifierLossNeverReachesVisualEncoder) {
  pol::PolicyDims dims;
  pol::Policy net(dims, 12);
  std::mt19937_64 rng(13);
  const auto obs = random_batch(dims, 6, rng);
  const std::vector<int> labels{0, 1, 2, 3, 4, 5};
  Tape tape;
  const auto out = net.forward(tape, obs, net.initial_hidden(6), 0.7f);
  tape.backward(tape.cross_entropy(out.class_logits, labels));
  for (float g : grads_of(net.parameters(pol::ParamGroup::kVisualEncoder))) EXPECT_EQ(g, 0.0f);
  for (float g : grads_of(net.parameters(pol::ParamGroup::kCore))) EXPECT_EQ(g, 0.0f);
  for (float g : grads_of(net.parameters(pol::ParamGroup::kLocationPredictor))) {
    EXPECT_EQ(g, 0.0f);
  }
  double classifier_norm = 0.0;
  for (float g : grads_of(net.parameters(pol::ParamGroup::kAudioClassifier))) {
    classifier_norm += g * g;
  }
  EXPECT_GT(classifier_norm, 0.0);
}

TEST(GradientRouting, LocatorLossNeverReachesClassifier) {
  pol::PolicyDims dims;
  pol::Policy net(dims, 14);
  std::mt19937_64 rng(15);
  const auto obs = random_batch(dims, 6, rng);
  Tape tape;
  const auto out = net.forward(tape, obs, net.initial_hidden(6), 0.7f);
  tape.backward(tape.mse(out.angle_pred, Tensor::full({6, 4}, 0.5f)));
  for (float g : grads_of(net.parameters(pol::ParamGroup::kAudioClassifier))) {
    EXPECT_EQ(g, 0.0f);
  }
}

TEST(GradientRouting, ClassifierGradientOnAudioEncoderIsMinusLambdaTimesPlain) {
  pol::PolicyDims dims;
  pol::Policy net(dims, 16);
  std::mt19937_64 rng(17);
  const auto obs = random_batch(dims, 8, rng);
  const std::vector<int> labels{0, 1, 2, 3, 4, 5, 6, 7};
  auto encoder_grad = [&](float lambda) {
    zero_all(net);
    Tape tape;
    const auto out = net.forward(tape, obs, net.initial_hidden(8), lambda, {true, false});
    tape.backward(tape.cross_entropy(out.class_logits, labels));
    return grads_of(net.parameters(pol::ParamGroup::kAudioEncoder));
  };
  // Strength -1 turns the reversal layer into the identity.
  const auto plain = encoder_grad(-1.0f);
  for (float lambda : {0.0f, 0.5f, 0.986614f}) {
    const auto reversed = encoder_grad(lambda);
    double err = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < plain.size(); ++i) {
      err = std::max(err, std::abs(double(reversed[i]) + lambda * plain[i]));
      norm = std::max(norm, std::abs(double(plain[i])));
    }
    EXPECT_LE(err, 1e-6 * norm) << lambda;
  }
}

TEST(Encoding, ObservationScalingAndShapeChecks) {
  pol::PolicyDims dims;
  env::ObservationBundle obs;
  obs.depth.assign(16, 10.0f);
  obs.audio.left.assign(256, 0.0f);
  obs.audio.right.assign(256, 0.0f);
  obs.prev_action = env::Action::kTurnRight;
  const auto enc = pol::encode_observation(obs, dims);
  for (float v : enc.depth) EXPECT_FLOAT_EQ(v, 1.0f);
  for (float v : enc.audio) EXPECT_EQ(v, 0.0f);
  EXPECT_EQ(enc.prev_action, 2);
  obs.depth.pop_back();
  EXPECT_THROW(pol::encode_observation(obs, dims), std::invalid_argument);
}

TEST(Parameters, CopyFromMakesIdenticalPolicies) {
  pol::PolicyDims dims;
  pol::Policy a(dims, 1), b(dims, 2);
  EXPECT_NE(values(a.parameters()[0].tensor), values(b.parameters()[0].tensor));
  b.copy_from(a);
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].name, pb[i].name);
    EXPECT_EQ(values(pa[i].tensor), values(pb[i].tensor));
  }
}

TEST(GradCheckSuite, HeadsCoreAndPolicyPass) {
  const ad::GradCheckReport report = pol::run_gradcheck_suite();
  for (const auto& e : report.entries) EXPECT_TRUE(e.passed()) << e.name << " " << e.error;
  bool saw_classifier = false, saw_locator = false, saw_core = false, saw_policy = false;
  for (const auto& e : report.entries) {
    saw_classifier |= e.name == "head.audio_classifier";
    saw_locator |= e.name == "head.location_predictor";
    saw_core |= e.name == "core.gru";
    saw_policy |= e.name == "policy.full";
  }
  EXPECT_TRUE(saw_classifier && saw_locator && saw_core && saw_policy);
}
