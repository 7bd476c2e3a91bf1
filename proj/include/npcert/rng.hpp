#pragma once

#include <cstdint>

namespace npcert {

// SplitMix64 finalizer (Steele, Lea & Flood 2014). Used both as the step
// function of a sequential stream and as a stateless per-index hash.
inline std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next_u64() noexcept { return mix64(state_ += kGolden); }

    // Uniform on [0,1), 53 random mantissa bits.
    double next_double() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

// The (index+1)-th output of SplitMix64(seed), addressable without stepping
// a stream. Acceptance decisions keyed by (seed, index) therefore do not
// depend on how many other indexes exist.
inline std::uint64_t indexed_u64(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(seed + kGolden * (index + 1));
}

// Uniform on [0,1) for the given (seed, index) pair.
inline double indexed_uniform01(std::uint64_t seed, std::uint64_t index) noexcept {
    return static_cast<double>(indexed_u64(seed, index) >> 11) * 0x1.0p-53;
}

// Decorrelated child seed for stream `stream` (trial index, subsystem id, ...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(mix64(seed ^ 0xA0761D6478BD642FULL) + kGolden * (stream + 1));
}

}  // namespace npcert
