#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace coevo {

/// Seeded generator with a serializable state.
///
/// Draws are built directly on the raw 64-bit engine output so sequences do
/// not depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform on [0, bound), bound > 0. Unbiased (rejection on the tail).
    std::uint64_t below(std::uint64_t bound);

    // Uniform on the closed range [lo, hi].
    int uniform_int(int lo, int hi);

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::string state_hex() const;
    static Rng from_state_hex(const std::string& hex);

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
};

// SplitMix64 finalizer; derives independent seeds from a master seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace coevo
