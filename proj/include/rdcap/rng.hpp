#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace rdcap {

// Reported in run metadata so results can be reproduced with the same engine.
inline constexpr std::string_view kGeneratorName = "mt19937_64";

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stable seed derivation: the same (base, parts...) always yields the same seed,
// independent of how many other seeds were derived before it.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = mix64(base);
    for (std::uint64_t p : parts) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
    return h;
}

// Named sub-streams of one simulation seed.
enum class Stream : std::uint64_t {
    placement = 1,
    destinations = 2,
    control = 3,
    floods = 4,
    calibration = 5,
};

inline std::uint64_t stream_seed(std::uint64_t seed, Stream s) {
    return derive_seed(seed, {static_cast<std::uint64_t>(s)});
}

// Thin wrapper over mt19937_64. Variates are derived from raw engine output with
// fixed formulas (not std distributions) so sequences match across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer on [0, bound).
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do { x = engine_(); } while (x >= limit);
        return x % bound;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Number of trials up to and including the first success; always >= 1.
    std::uint64_t geometric(double p) {
        if (p >= 1.0) return 1;
        const double u = 1.0 - uniform(); // (0, 1]
        const double k = std::floor(std::log(u) / std::log1p(-p));
        if (!(k < 9.0e18)) return UINT64_MAX / 4;
        return 1 + static_cast<std::uint64_t>(k);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace rdcap
