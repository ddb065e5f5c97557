#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "avnav/acoustics/acoustics.hpp"

namespace ac = avnav::acoustics;
using std::numbers::pi;

namespace {

ac::AcousticConfig config() { return {}; }

double mean(const std::vector<float>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

}  // namespace

TEST(Signature, DeterministicInIdAndSeed) {
  const auto a = ac::make_signature(3, 42, 16, 16);
  const auto b = ac::make_signature(3, 42, 16, 16);
  EXPECT_EQ(a.envelope, b.envelope);
  EXPECT_NE(a.envelope, ac::make_signature(3, 43, 16, 16).envelope);
}

TEST(Signature, UnitMeanMagnitude) {
  for (int id = 0; id < 12; ++id) {
    const auto s = ac::make_signature(id, 1, 16, 16);
    EXPECT_NEAR(mean(s.envelope), 1.0, 1e-6) << id;
    for (float v : s.envelope) EXPECT_GE(v, 0.0f);
  }
}

TEST(Signature, DistinctIdsAreSeparated) {
  EXPECT_GE(ac::relative_distance(ac::make_signature(0, 1, 16, 16),
                                  ac::make_signature(1, 1, 16, 16)),
            ac::kMinSignatureDistance);
}

TEST(Signature, TooSmallShapeThrows) {
  EXPECT_THROW(ac::make_signature(0, 1, 3, 16), std::invalid_argument);
}

TEST(SignatureBank, EveryPairIsSeparated) {
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    const ac::SignatureBank bank(12, seed, 16, 16);
    for (int i = 0; i < bank.size(); ++i) {
      for (int j = i + 1; j < bank.size(); ++j) {
        EXPECT_GE(ac::relative_distance(bank.get(i), bank.get(j)), ac::kMinSignatureDistance);
      }
    }
    EXPECT_GE(bank.effective_seed(), seed);
  }
}

TEST(SignatureBank, UnknownCategoryThrows) {
  const ac::SignatureBank bank(4, 1, 16, 16);
  EXPECT_THROW(bank.get(4), std::out_of_range);
  EXPECT_THROW(bank.get(-1), std::out_of_range);
}

TEST(Render, FrontalSourceIsSymmetric) {
  const auto sig = ac::make_signature(0, 1, 16, 16);
  const auto spec = ac::render(sig, 2.0, 0.0, 0.3, config());
  EXPECT_EQ(spec.left, spec.right);
}

TEST(Render, LateralSourceGivesExpectedEnergyRatio) {
  const auto sig = ac::make_signature(0, 1, 16, 16);
  const auto spec = ac::render(sig, 1.0, pi / 2.0, 0.0, config());
  EXPECT_NEAR(spec.left_energy() / spec.right_energy(), 81.0, 1e-3);
}

TEST(Render, ZeroDistanceHasUnitAttenuation) {
  EXPECT_EQ(ac::attenuation(0.0), 1.0);
  const auto sig = ac::make_signature(2, 1, 16, 16);
  const auto spec = ac::render(sig, 0.0, 0.0, 0.0, config());
  for (std::size_t i = 0; i < sig.envelope.size(); ++i) {
    EXPECT_FLOAT_EQ(spec.left[i] + spec.right[i], sig.envelope[i]);
  }
}

TEST(Render, NegativeDistanceThrows) {
  const auto sig = ac::make_signature(0, 1, 16, 16);
  EXPECT_THROW(ac::render(sig, -1.0, 0.0, 0.0, config()), std::invalid_argument);
}

TEST(Render, EnergyStrictlyDecreasesWithDistance) {
  const auto sig = ac::make_signature(5, 1, 16, 16);
  double prev = std::numeric_limits<double>::infinity();
  for (double d = 0.0; d <= 30.0; d += 0.5) {
    const double e = ac::render(sig, d, 0.4, 0.2, config()).total_energy();
    EXPECT_LT(e, prev) << d;
    prev = e;
  }
}

TEST(Render, CategoryChangesEnvelopeButNotSpatialFactors) {
  const ac::SignatureBank bank(12, 1, 16, 16);
  const double alpha = 1.1, beta = 0.3, d = 3.0;
  const auto a = ac::render(bank.get(0), d, alpha, beta, config());
  const auto b = ac::render(bank.get(7), d, alpha, beta, config());
  EXPECT_NE(a.left, b.left);
  const ac::IldGains g = ac::ild_gains(alpha, beta, 0.8);
  const double k = ac::attenuation(d);
  for (std::size_t i = 0; i < a.left.size(); ++i) {
    EXPECT_NEAR(a.left[i] / bank.get(0).envelope[i], k * g.left, 1e-6);
    EXPECT_NEAR(b.left[i] / bank.get(7).envelope[i], k * g.left, 1e-6);
    EXPECT_NEAR(b.right[i] / bank.get(7).envelope[i], k * g.right, 1e-6);
  }
}

TEST(Render, QuarterTurnChangesLevelRatio) {
  const auto sig = ac::make_signature(1, 1, 16, 16);
  const auto a = ac::render(sig, 2.0, 0.2, 0.0, config());
  const auto b = ac::render(sig, 2.0, 0.2 + pi / 2.0, 0.0, config());
  EXPECT_NE(a.left_energy() / a.right_energy(), b.left_energy() / b.right_energy());
}

TEST(IldGains, SumToOneEverywhere) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> angle(-pi, pi);
  for (int i = 0; i < 10000; ++i) {
    const auto g = ac::ild_gains(angle(rng), angle(rng) / 2.0, 0.8);
    EXPECT_DOUBLE_EQ(g.left + g.right, 1.0);
    EXPECT_GT(g.left, 0.0);
    EXPECT_GT(g.right, 0.0);
  }
}

TEST(AcousticConfig, RejectsIldCoefficientOfOne) {
  ac::AcousticConfig c;
  c.ild_coefficient = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Noise, InfiniteSnrIsIdentity) {
  const auto spec = ac::render(ac::make_signature(0, 1, 16, 16), 2.0, 0.5, 0.0, config());
  std::mt19937_64 rng(1);
  const auto out = ac::add_noise(spec, std::numeric_limits<double>::infinity(), rng);
  EXPECT_EQ(out.spectrogram.left, spec.left);
  EXPECT_EQ(out.spectrogram.right, spec.right);
}

TEST(Noise, ZeroEnergyInputThrows) {
  ac::BinauralSpectrogram spec{4, 4, std::vector<float>(16, 0.0f), std::vector<float>(16, 0.0f)};
  std::mt19937_64 rng(1);
  EXPECT_THROW(ac::add_noise(spec, 20.0, rng), std::invalid_argument);
}

TEST(Noise, OutputIsNonNegative) {
  const auto spec = ac::render(ac::make_signature(0, 1, 16, 16), 8.0, 0.5, 0.0, config());
  std::mt19937_64 rng(2);
  const auto out = ac::add_noise(spec, 0.0, rng);
  for (float v : out.spectrogram.left) EXPECT_GE(v, 0.0f);
  for (float v : out.spectrogram.right) EXPECT_GE(v, 0.0f);
}

TEST(Noise, MeasuredSnrMatchesRequestAtEveryLevel) {
  const ac::SignatureBank bank(12, 1, 16, 16);
  for (double snr : {20.0, 30.0, 40.0, 50.0}) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(snr));
    double signal = 0.0, noise = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const auto spec = ac::render(bank.get(i % 12), 1.0 + i % 9, 0.1 * (i % 30), 0.0,
                                   config());
      const auto out = ac::add_noise(spec, snr, rng);
      signal += out.signal_power;
      noise += out.noise_power;
    }
    EXPECT_NEAR(10.0 * std::log10(signal / noise), snr, 0.5) << snr;
  }
}

TEST(DepthNoise, ZeroStddevIsIdentity) {
  const std::vector<float> depth{0.0f, 1.5f, 10.0f};
  std::mt19937_64 rng(1);
  EXPECT_EQ(ac::add_depth_noise(depth, 0.0, 10.0, rng), depth);
}

TEST(DepthNoise, EmpiricalDeviationMatchesStddev) {
  const std::vector<float> depth(20000, 5.0f);
  std::mt19937_64 rng(4);
  const auto out = ac::add_depth_noise(depth, 0.1, 10.0, rng);
  double sq = 0.0;
  for (float v : out) sq += (v - 5.0) * (v - 5.0);
  EXPECT_NEAR(std::sqrt(sq / out.size()), 0.1, 0.003);
}

TEST(DepthNoise, ClippedToRange) {
  const std::vector<float> depth(1000, 0.0f);
  std::mt19937_64 rng(5);
  for (float v : ac::add_depth_noise(depth, 1.0, 10.0, rng)) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 10.0f);
  }
}
