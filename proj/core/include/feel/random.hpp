#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace feel {

using Rng = std::mt19937_64;

// Stream tags keep independent consumers of the master seed from sharing draws.
enum class Stream : std::uint64_t {
  pool = 1,
  partition = 2,
  device_hardware = 3,
  channel = 4,
  training = 5,
  model_init = 6,
  scheduler = 7,
  sampling = 8,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Mixes a base seed with an ordered list of coordinates (stream, device id,
/// round, ...). Changing any coordinate yields an unrelated seed, so adding a
/// device never perturbs another device's draws.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> coords) noexcept {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t c : coords) h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> coords) {
  return Rng(derive_seed(base, coords));
}

inline std::uint64_t tag(Stream s) noexcept { return static_cast<std::uint64_t>(s); }

}  // namespace feel
