#pragma once

#include <cmath>
#include <cstdint>

namespace paireval {

// 64-bit finalizer used by splitmix64. Bijective.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// splitmix64 (Steele, Lea, Flood 2014). Every random draw in this project
// comes from one of these, so identical seeds reproduce identical output
// bytes across runs and platforms.
class SplitMix64 {
  public:
    explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

    constexpr std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        return mix64(z);
    }

    // Unbiased uniform draw in [0, n) by rejection.
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t threshold = (0ULL - n) % n;
        std::uint64_t r;
        do {
            r = next();
        } while (r < threshold);
        return r % n;
    }

    // Uniform double in [0, 1), 53 bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller on (0,1] x [0,1) uniforms. One value
    // per call (the sine half is discarded to keep the stream layout simple).
    double normal() {
        const double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
        const double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

  private:
    std::uint64_t state_;
};

// Named substreams so that independent sampling roles never share a stream.
// Stream seed = mix64(seed ^ mix64(role + 1)); documented and frozen, a run
// is reconstructible from its seed alone.
enum class RngRole : std::uint64_t {
    kComparisonSampling = 1, // comparison-example choice for scoring
    kDialoguePick = 2,       // synth: which corpus dialogue
    kCutPoint = 3,           // synth: where to cut the dialogue
    kNegativePick = 4,       // synth: random negative choice
    kSlotAssign = 5,         // synth: positive response slot A/B
    kNegativeKind = 6,       // synth: adversarial-vs-random draw
    kJitter = 7,             // plot-data gaussian jitter
    kPermutation = 8,        // permutation-test shuffles
    kStabilityRuns = 9,      // per-run comparison seeds in the stability protocol
};

inline SplitMix64 stream_for(std::uint64_t seed, RngRole role) {
    return SplitMix64(mix64(seed ^ mix64(static_cast<std::uint64_t>(role) + 1)));
}

// Per-item substream (used for seed traces in synthesized pairs).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed ^ mix64(index + 0x9E3779B97F4A7C15ULL));
}

} // namespace paireval
