#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace wormchain {

/// All stochastic components run on std::mt19937_64. The bounded and unit-interval
/// draws below are defined here rather than through <random> distributions so that
/// trajectories are bit-identical across standard library implementations.
using Engine = std::mt19937_64;
inline constexpr std::string_view generator_id = "mt19937_64";

// Gen is any generator returning full 64-bit words (Engine in practice).

/// Uniform integer in [0, bound) via Lemire's multiply-shift with rejection. bound > 0.
template <class Gen>
std::uint64_t uniform_index(Gen& rng, std::uint64_t bound) noexcept {
    auto product = static_cast<unsigned __int128>(rng()) * bound;
    auto low = static_cast<std::uint64_t>(product);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            product = static_cast<unsigned __int128>(rng()) * bound;
            low = static_cast<std::uint64_t>(product);
        }
    }
    return static_cast<std::uint64_t>(product >> 64);
}

/// Uniform double on [0, 1) with 53 random bits.
template <class Gen>
double uniform01(Gen& rng) noexcept {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// splitmix64 finalizer, used to spread structured seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Engine for independent sample (outer, inner) of a run keyed by `seed`.
/// The three indices are folded into one 64-bit seed through splitmix64 rounds.
inline Engine stream_engine(std::uint64_t seed, std::uint64_t outer, std::uint64_t inner) {
    const std::uint64_t a = mix64(seed);
    const std::uint64_t b = mix64(a ^ mix64(outer + 0x632BE59BD9B4E019ULL));
    return Engine(mix64(b ^ mix64(inner + 0x8CB92BA72F3D8DD7ULL)));
}

}  // namespace wormchain
