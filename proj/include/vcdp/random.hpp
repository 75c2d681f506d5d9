#pragma once

#include <array>
#include <cstdint>

namespace vcdp {

/// Philox4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Counter-based random stream. Draw i of stream (seed, stream_id) is a pure
/// function of (seed, stream_id, i), so streams can be handed to concurrent
/// tasks without affecting results.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::uint64_t position() const { return counter_; }

    /// Raw 128 bits of the next block as two 64-bit words.
    std::array<std::uint64_t, 2> next_block();
    std::uint64_t next_u64() { return next_block()[0]; }
    /// Uniform on [0, 1).
    double uniform();
    /// Uniform on [lo, hi].
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, bound).
    std::uint64_t index(std::uint64_t bound);
    /// Standard normal via Box-Muller on one block.
    double normal();

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t counter_ = 0;
};

/// Mixes a seed with two labels into a fresh seed (used to key replicate,
/// city and bootstrap streams).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace vcdp
