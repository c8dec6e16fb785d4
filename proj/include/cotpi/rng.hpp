#pragma once

#include <cstdint>
#include <random>

namespace cotpi {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent child streams from a
/// single top-level seed so that per-repetition and per-fold streams do not
/// depend on execution order.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  return mix64(mix64(base) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                    std::uint64_t index) noexcept {
  return derive_seed(derive_seed(base, stream), index);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

}  // namespace cotpi
