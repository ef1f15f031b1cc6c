#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace relforge {

// SplitMix64 finalizer. Used everywhere a deterministic, platform-stable
// hash or random stream is needed; std:: distributions and std::shuffle are
// implementation-defined and would break byte-reproducibility contracts.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Stateful stream over splitmix64.
class MixRng {
 public:
  explicit MixRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_++); }

  // Uniform in [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [-1, 1).
  double next_symmetric() { return next_unit() * 2.0 - 1.0; }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return n ? next_u64() % n : 0; }

 private:
  std::uint64_t state_;
};

// Fisher-Yates with an explicit algorithm so shuffles are identical across
// standard libraries.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, MixRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

inline std::uint64_t hash_str(std::uint64_t seed, const std::string& s) {
  std::uint64_t h = splitmix64(seed ^ 0x5851F42D4C957F2DULL);
  for (unsigned char c : s) h = splitmix64(h ^ c);
  return h;
}

}  // namespace relforge
