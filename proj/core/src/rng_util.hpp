#ifndef D2DTO_SRC_RNG_UTIL_HPP_
#define D2DTO_SRC_RNG_UTIL_HPP_

#include <cstdint>

namespace d2dto::detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Derives an independent substream seed from a base seed and a stream index.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream + 0x9E3779B97F4A7C15ULL));
}

// Uniform double in [0, 1) from 53 random bits.
template <typename Rng>
double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace d2dto::detail

#endif  // D2DTO_SRC_RNG_UTIL_HPP_
