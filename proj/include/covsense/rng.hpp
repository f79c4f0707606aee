#pragma once

#include <cstdint>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_real_distribution.hpp>

namespace covsense {

namespace detail {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/**
 * Deterministic random stream keyed by (seed, stream_id).
 *
 * Identical keys give identical sequences on every platform: the engine is a
 * Mersenne Twister seeded from a SplitMix64 hash of the key, and the distributions are
 * Boost's header-defined ones rather than the implementation-defined std:: variants.
 * Sub-streams derive further independent keys for the separate draws inside one trial.
 */
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id),
          engine_(detail::mix64(detail::mix64(seed) ^ detail::mix64(stream_id ^ 0x5DEECE66DULL))) {}

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }

    /// Independent stream for a named purpose inside the same trial.
    [[nodiscard]] RngStream substream(std::uint64_t tag) const {
        return RngStream(detail::mix64(seed_ ^ detail::mix64(tag + 0xA5A5A5A5ULL)), stream_id_);
    }

    double normal() { return normal_(engine_); }
    double uniform01() { return uniform_(engine_); }
    double uniform(double lo, double hi) { return boost::random::uniform_real_distribution<double>(lo, hi)(engine_); }
    bool coin() { return (engine_() >> 63) != 0; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    boost::random::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_{0.0, 1.0};
    boost::random::uniform_01<double> uniform_;
};

}  // namespace covsense
