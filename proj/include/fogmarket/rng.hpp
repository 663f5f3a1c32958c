// Deterministic random streams. All randomness in the library flows from one
// integer seed through named substreams, so every experiment is reproducible
// from its manifest alone. mt19937_64 has a fixed algorithm in the standard;
// uniform doubles are derived from raw 64-bit draws explicitly because the
// standard distribution adaptors are implementation-defined.
#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include "fogmarket/market.hpp"

namespace fogmarket {

inline constexpr const char* kRngAlgorithm = "mt19937_64/u53";

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// One named substream of the manifest seed.
class rng_stream {
  public:
    rng_stream(std::uint64_t seed, std::string_view name)
        : eng_(splitmix64(seed ^ fnv1a64(name.data(), name.size()))) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) {
        if (!(lo <= hi)) throw std::invalid_argument("uniform: lo > hi");
        return lo + (hi - lo) * next_unit();
    }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("next_below: n must be > 0");
        return eng_() % n;
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace fogmarket
