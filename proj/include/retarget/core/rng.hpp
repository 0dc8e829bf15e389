#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace retarget {

uint64_t fnv1a64(const void* data, std::size_t n);
uint64_t fnv1a64(std::string_view s);
uint64_t splitmix64(uint64_t x);
std::string hex64(uint64_t v);

// Deterministic random stream. Every stage of the pipeline derives its own
// stream from the root seed and a stable name, so results are reproducible
// bit-for-bit regardless of how work is batched or ordered.
//
// The engine is std::mt19937_64 (bit-exact per the standard); the uniform and
// normal transforms are implemented here rather than via std::*_distribution,
// whose output is implementation-defined.
class RngStream {
  public:
    RngStream(uint64_t root_seed, std::string_view name);
    explicit RngStream(uint64_t raw_seed);

    uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller (second value cached).
    double normal();

    // Uniform integer in [lo, hi], inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi);

    // Uniform in [lo, hi).
    double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Derived stream, independent of this stream's consumption state.
    RngStream child(std::string_view name) const;

    uint64_t seed() const { return seed_; }

  private:
    uint64_t seed_;
    std::mt19937_64 eng_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace retarget
