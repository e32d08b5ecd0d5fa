#pragma once

#include <cstdint>

namespace robustqm {

/// SplitMix64 finalizer (Steele, Lea & Flood). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/**
 * Counter-based generator: the i-th draw of stream `s` under `seed` is a pure
 * function of (seed, s, i). Streams are cheap to construct, so simulators
 * give every trial its own stream and results do not depend on how trials
 * are scheduled across workers.
 */
class CounterRng {
  public:
    static constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ull;

    constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_(mix64(seed ^ mix64(stream * golden_gamma + 0x632be59bd9b4e019ull))) {}

    constexpr std::uint64_t next() noexcept {
        return mix64(key_ + (++counter_) * golden_gamma);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    constexpr std::uint64_t counter() const noexcept { return counter_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace robustqm
