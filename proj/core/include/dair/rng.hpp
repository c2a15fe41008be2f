#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dair {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Folds `keys` into `base` so that every (base, keys...) tuple names its own
/// stream. Streams do not depend on the order in which they are requested,
/// which keeps data generation independent of thread scheduling.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys);

Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> keys = {});

// Stream tags used across the library.
namespace stream {
inline constexpr std::uint64_t kData = 0x64617461;
inline constexpr std::uint64_t kAugment = 0x61756720;
inline constexpr std::uint64_t kPairing = 0x70616972;
inline constexpr std::uint64_t kNoise = 0x6e6f6973;
inline constexpr std::uint64_t kInit = 0x696e6974;
inline constexpr std::uint64_t kShuffle = 0x73687566;
inline constexpr std::uint64_t kTest = 0x74657374;
}  // namespace stream

}  // namespace dair
