#include "vcdp/random.hpp"

#include <cmath>
#include <numbers>

namespace vcdp {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
inline std::uint32_t hi32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

// Keeps derived seeds out of the counter space used by ordinary streams.
constexpr std::uint64_t kDeriveTag = 0xA5F1523B7C04E96Dull;

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
        c = {hi32(p1) ^ c[1] ^ k[0], lo32(p1), hi32(p0) ^ c[3] ^ k[1], lo32(p0)};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return c;
}

std::array<std::uint64_t, 2> RandomStream::next_block() {
    const auto out = philox4x32({lo32(counter_), hi32(counter_), lo32(stream_id_), hi32(stream_id_)},
                                {lo32(seed_), hi32(seed_)});
    ++counter_;
    return {(static_cast<std::uint64_t>(out[1]) << 32) | out[0],
            (static_cast<std::uint64_t>(out[3]) << 32) | out[2]};
}

double RandomStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t RandomStream::index(std::uint64_t bound) {
    // Lemire's multiply-shift; the bias is below 2^-64 * bound, irrelevant at our sizes.
    const auto x = next_u64();
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(x) * bound) >> 64);
}

double RandomStream::normal() {
    const auto block = next_block();
    const double u1 = (static_cast<double>(block[0] >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(block[1] >> 11) * 0x1.0p-53;          // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    const std::uint64_t key = seed ^ kDeriveTag;
    const auto out = philox4x32({lo32(a), hi32(a), lo32(b), hi32(b)}, {lo32(key), hi32(key)});
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

}  // namespace vcdp
