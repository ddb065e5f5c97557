#ifndef AVNAV_COMMON_RANDOM_HPP_
#define AVNAV_COMMON_RANDOM_HPP_

#include <cstdint>
#include <string_view>

namespace avnav {

// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Independent named stream from one root seed, e.g.
// derive_seed(root, "rollout", env_index).
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                                    std::uint64_t index = 0) {
  return mix64(mix64(root ^ fnv1a(stream)) + index);
}

}  // namespace avnav

#endif  // AVNAV_COMMON_RANDOM_HPP_
