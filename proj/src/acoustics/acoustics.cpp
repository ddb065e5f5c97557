#include "avnav/acoustics/acoustics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "avnav/common/random.hpp"

namespace avnav::acoustics {
namespace {

double sum_sq(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += double(x) * x;
  return s;
}

}  // namespace

double BinauralSpectrogram::left_energy() const { return sum_sq(left); }
double BinauralSpectrogram::right_energy() const { return sum_sq(right); }

double BinauralSpectrogram::power() const {
  const std::size_t n = left.size() + right.size();
  return n ? total_energy() / n : 0.0;
}

void AcousticConfig::validate() const {
  if (bins < 4 || frames < 4) {
    throw std::invalid_argument("acoustic config: bins and frames must be >= 4");
  }
  if (!(ild_coefficient >= 0.0 && ild_coefficient < 1.0)) {
    throw std::invalid_argument("acoustic config: ild_coefficient must be in [0, 1)");
  }
}

CategorySignature make_signature(int category_id, std::uint64_t dataset_seed,
                                 int bins, int frames) {
  if (bins < 4 || frames < 4) {
    throw std::invalid_argument("make_signature: bins and frames must be >= 4");
  }
  std::mt19937_64 rng(derive_seed(dataset_seed, "category",
                                  static_cast<std::uint64_t>(category_id)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> spectral(bins, 0.05);
  const int formants = 2 + static_cast<int>(unit(rng) * 2.0);
  for (int j = 0; j < formants; ++j) {
    const double centre = unit(rng) * (bins - 1);
    const double width = 0.6 + unit(rng) * 0.15 * bins;
    const double gain = 0.5 + unit(rng);
    for (int f = 0; f < bins; ++f) {
      const double z = (f - centre) / width;
      spectral[f] += gain * std::exp(-0.5 * z * z);
    }
  }

  const double depth = 0.3 + 0.5 * unit(rng);
  const double rate = 1.0 + std::floor(unit(rng) * 3.0);
  const double phase = 2.0 * std::numbers::pi * unit(rng);
  std::vector<double> temporal(frames);
  for (int t = 0; t < frames; ++t) {
    temporal[t] =
        1.0 + depth * std::sin(2.0 * std::numbers::pi * rate * t / frames + phase);
  }

  CategorySignature sig{category_id, bins, frames, {}};
  sig.envelope.resize(static_cast<std::size_t>(bins) * frames);
  double total = 0.0;
  for (int f = 0; f < bins; ++f) {
    for (int t = 0; t < frames; ++t) total += spectral[f] * temporal[t];
  }
  const double scale = static_cast<double>(bins) * frames / total;
  for (int f = 0; f < bins; ++f) {
    for (int t = 0; t < frames; ++t) {
      sig.envelope[f * frames + t] =
          static_cast<float>(spectral[f] * temporal[t] * scale);
    }
  }
  return sig;
}

double relative_distance(const CategorySignature& a,
                         const CategorySignature& b) {
  if (a.envelope.size() != b.envelope.size()) {
    throw std::invalid_argument("relative_distance: envelope size mismatch");
  }
  double diff = 0.0;
  for (std::size_t i = 0; i < a.envelope.size(); ++i) {
    const double d = double(a.envelope[i]) - b.envelope[i];
    diff += d * d;
  }
  const double norm = std::sqrt(std::max(sum_sq(a.envelope), sum_sq(b.envelope)));
  return std::sqrt(diff) / norm;
}

SignatureBank::SignatureBank(int category_count, std::uint64_t dataset_seed,
                             int bins, int frames)
    : requested_seed_(dataset_seed) {
  if (category_count < 1) {
    throw std::invalid_argument("SignatureBank: category_count must be >= 1");
  }
  constexpr int kMaxAttempts = 1000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const std::uint64_t seed = dataset_seed + attempt;
    std::vector<CategorySignature> sigs;
    for (int c = 0; c < category_count; ++c) {
      sigs.push_back(make_signature(c, seed, bins, frames));
    }
    bool separated = true;
    for (int i = 0; i < category_count && separated; ++i) {
      for (int j = i + 1; j < category_count; ++j) {
        if (relative_distance(sigs[i], sigs[j]) < kMinSignatureDistance) {
          separated = false;
          break;
        }
      }
    }
    if (separated) {
      signatures_ = std::move(sigs);
      effective_seed_ = seed;
      return;
    }
  }
  throw std::runtime_error("SignatureBank: no separated signature set found from seed " +
                           std::to_string(dataset_seed));
}

const CategorySignature& SignatureBank::get(int category_id) const {
  if (category_id < 0 || category_id >= size()) {
    throw std::out_of_range("unknown sound category " +
                            std::to_string(category_id));
  }
  return signatures_[category_id];
}

double attenuation(double geodesic_distance) {
  return 1.0 / (1.0 + geodesic_distance);
}

IldGains ild_gains(double alpha, double beta, double ild_coefficient) {
  const double s = ild_coefficient * std::cos(beta) * std::sin(alpha);
  return {0.5 * (1.0 + s), 0.5 * (1.0 - s)};
}

BinauralSpectrogram render(const CategorySignature& signature,
                           double geodesic_distance, double alpha, double beta,
                           const AcousticConfig& config) {
  if (!(geodesic_distance >= 0.0)) {
    throw std::invalid_argument("render: geodesic distance must be >= 0");
  }
  if (signature.bins != config.bins || signature.frames != config.frames) {
    throw std::invalid_argument("render: signature shape does not match config");
  }
  const double a = attenuation(geodesic_distance);
  const IldGains g = ild_gains(alpha, beta, config.ild_coefficient);
  const float left_gain = static_cast<float>(a * g.left);
  const float right_gain = static_cast<float>(a * g.right);
  BinauralSpectrogram out{signature.bins, signature.frames, {}, {}};
  out.left.resize(signature.envelope.size());
  out.right.resize(signature.envelope.size());
  for (std::size_t i = 0; i < signature.envelope.size(); ++i) {
    out.left[i] = left_gain * signature.envelope[i];
    out.right[i] = right_gain * signature.envelope[i];
  }
  return out;
}

NoisySpectrogram add_noise(const BinauralSpectrogram& spec, double snr_db,
                           std::mt19937_64& rng) {
  NoisySpectrogram out{spec, 0.0, spec.power()};
  if (std::isinf(snr_db) && snr_db > 0) return out;
  if (!(out.signal_power > 0.0)) {
    throw std::invalid_argument("add_noise: input has zero energy");
  }
  const double noise_power = out.signal_power / std::pow(10.0, snr_db / 10.0);
  std::normal_distribution<double> normal(0.0, std::sqrt(noise_power));
  double drawn = 0.0;
  auto perturb = [&](std::vector<float>& channel) {
    for (float& v : channel) {
      const double n = normal(rng);
      drawn += n * n;
      v = static_cast<float>(std::max(0.0, v + n));
    }
  };
  perturb(out.spectrogram.left);
  perturb(out.spectrogram.right);
  out.noise_power = drawn / (spec.left.size() + spec.right.size());
  return out;
}

std::vector<float> add_depth_noise(std::span<const float> depth, double stddev,
                                   double depth_max, std::mt19937_64& rng) {
  std::vector<float> out(depth.begin(), depth.end());
  if (stddev <= 0.0) return out;
  std::normal_distribution<double> normal(0.0, stddev);
  for (float& v : out) {
    v = static_cast<float>(std::clamp(v + normal(rng), 0.0, depth_max));
  }
  return out;
}

}  // namespace avnav::acoustics
