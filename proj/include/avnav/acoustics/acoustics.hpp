#ifndef AVNAV_ACOUSTICS_ACOUSTICS_HPP_
#define AVNAV_ACOUSTICS_ACOUSTICS_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace avnav::acoustics {

// Magnitude envelope of one sound category, F frequency bins by T frames,
// stored bin-major (index = f * T + t).
struct CategorySignature {
  int category_id = 0;
  int bins = 0;
  int frames = 0;
  std::vector<float> envelope;
};

struct BinauralSpectrogram {
  int bins = 0;
  int frames = 0;
  std::vector<float> left;
  std::vector<float> right;

  double left_energy() const;
  double right_energy() const;
  double total_energy() const { return left_energy() + right_energy(); }
  // Mean squared magnitude over both channels.
  double power() const;
};

struct AcousticConfig {
  int bins = 16;
  int frames = 16;
  // Interaural level difference strength k in [0, 1).
  double ild_coefficient = 0.8;
  // Unset means noise-free rendering.
  std::optional<double> noise_snr_db;
  std::uint64_t dataset_seed = 1;

  void validate() const;
};

// Deterministic in (category_id, dataset_seed). Smooth spectral envelope made
// of a few Gaussian formants over a floor, times a sinusoidal temporal
// modulation, normalised to unit mean magnitude.
CategorySignature make_signature(int category_id, std::uint64_t dataset_seed,
                                 int bins, int frames);

// ||a - b|| / max(||a||, ||b||) over the envelopes.
double relative_distance(const CategorySignature& a,
                         const CategorySignature& b);

inline constexpr double kMinSignatureDistance = 0.2;

// All category signatures of one dataset. If any pair is closer than
// kMinSignatureDistance the dataset seed is advanced and the whole set is
// regenerated; effective_seed() reports the seed that was accepted.
class SignatureBank {
 public:
  SignatureBank() = default;
  SignatureBank(int category_count, std::uint64_t dataset_seed, int bins,
                int frames);

  const CategorySignature& get(int category_id) const;
  int size() const { return static_cast<int>(signatures_.size()); }
  std::uint64_t requested_seed() const { return requested_seed_; }
  std::uint64_t effective_seed() const { return effective_seed_; }
  const std::vector<CategorySignature>& all() const { return signatures_; }

 private:
  std::vector<CategorySignature> signatures_;
  std::uint64_t requested_seed_ = 0;
  std::uint64_t effective_seed_ = 0;
};

// 1 / (1 + d)
double attenuation(double geodesic_distance);

struct IldGains {
  double left;
  double right;
};

// g_L = (1 + k cos(beta) sin(alpha)) / 2, g_R = (1 - k cos(beta) sin(alpha)) / 2.
IldGains ild_gains(double alpha, double beta, double ild_coefficient);

// left = a(d) g_L envelope, right = a(d) g_R envelope. Noise is not applied
// here; see add_noise.
BinauralSpectrogram render(const CategorySignature& signature,
                           double geodesic_distance, double alpha, double beta,
                           const AcousticConfig& config);

struct NoisySpectrogram {
  BinauralSpectrogram spectrogram;
  // Mean squared value of the Gaussian perturbation actually drawn, measured
  // before negative magnitudes were clamped.
  double noise_power = 0.0;
  double signal_power = 0.0;
};

// Adds zero-mean Gaussian noise with power signal_power / 10^(snr_db / 10),
// then clamps negatives to zero. An infinite snr_db returns the input
// unchanged. Throws std::invalid_argument on zero-energy input.
NoisySpectrogram add_noise(const BinauralSpectrogram& spec, double snr_db,
                           std::mt19937_64& rng);

// Per-ray Gaussian perturbation, clipped to [0, depth_max].
std::vector<float> add_depth_noise(std::span<const float> depth, double stddev,
                                   double depth_max, std::mt19937_64& rng);

}  // namespace avnav::acoustics

#endif  // AVNAV_ACOUSTICS_ACOUSTICS_HPP_
