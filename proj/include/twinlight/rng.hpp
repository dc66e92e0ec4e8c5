// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace twinlight {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based key: the stream for a sample depends only on these four values,
/// never on which thread or in which order the sample is evaluated.
constexpr std::uint64_t sample_key(std::uint64_t seed, std::uint64_t x, std::uint64_t y, std::uint64_t s) {
    std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
    h = mix64(h ^ (x + 0x632be59bd9b4e019ULL));
    h = mix64(h ^ (y + 0x85157af5e6b3c1d3ULL));
    h = mix64(h ^ (s + 0xd6e8feb86659fd93ULL));
    return h;
}

/// Small splitmix64 stream. Uniform doubles use the top 53 bits, so results are
/// identical on every platform.
class SplitMix {
public:
    explicit constexpr SplitMix(std::uint64_t state) : state_(state) {}

    constexpr std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }
    /// Uniform in [0, 1).
    constexpr double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

}  // namespace twinlight
