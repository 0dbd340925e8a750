#pragma once

#include <cstdint>

namespace genrs {

/// Deterministic counter-based random stream.
///
/// A stream is identified by a 64-bit seed plus up to three id counters
/// (typically realization index, user, subcarrier).  Identical ids give
/// identical draws on every run and under any thread schedule; distinct
/// ids give statistically independent streams.  Output generation is
/// splitmix64 over a key derived by mixing the id words.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                       std::uint64_t c = 0) {
        state_ = mix(mix(mix(mix(seed) ^ a) ^ b) ^ c);
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return finalize(state_);
    }

    /// Uniform in the open interval (0, 1).
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        return finalize(x);
    }

private:
    static std::uint64_t finalize(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_ = 0;
};

}  // namespace genrs
