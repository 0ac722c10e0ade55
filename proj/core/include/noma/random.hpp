#pragma once

#include <cstdint>
#include <random>

namespace noma {

/// Reproducible random stream with cheap derivation of independent substreams.
///
/// A stream is identified by a 64-bit key. `substream(tag)` mixes the tag into
/// the key with SplitMix64, so the same (seed, tag path) always yields the same
/// draws no matter how many other substreams were created or consumed first.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed);

    RandomStream substream(std::uint64_t tag) const;

    std::uint64_t key() const noexcept { return key_; }

    /// Standard normal draw.
    double normal();

    /// Uniform integer in [0, n).
    int uniform_index(int n);

    /// Uniform real in [lo, hi).
    double uniform(double lo, double hi);

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t key_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace noma
