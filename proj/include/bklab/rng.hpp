#pragma once

#include <cstdint>
#include <random>

namespace bklab {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Per-run seed derivation, fixed bit-exactly:
///
///   derive_seed(master, n, r) =
///       splitmix64(splitmix64(splitmix64(master) ^ n) ^ (r + 0x632BE59BD9B4E019))
///
/// with all arithmetic modulo 2^64. The additive constant keeps r = 0 from
/// collapsing onto the n stage.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t n, std::uint64_t replicate) {
    return splitmix64(splitmix64(splitmix64(master) ^ n) ^ (replicate + 0x632BE59BD9B4E019ULL));
}

/// Uniform stream on the open interval (0, 1) backed by mt19937_64. The
/// mapping from engine output to doubles is ((x >> 11) + 0.5) * 2^-53, so
/// streams are reproducible across standard libraries.
class UniformStream {
public:
    explicit UniformStream(std::uint64_t seed) : engine_(seed) {}

    double next() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t next_bits() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace bklab
