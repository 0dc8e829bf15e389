#include "retarget/core/rng.hpp"

#include <cmath>
#include <cstdio>

#include "retarget/core/errors.hpp"

namespace retarget {

uint64_t fnv1a64(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

RngStream::RngStream(uint64_t root_seed, std::string_view name)
    : RngStream(splitmix64(root_seed ^ fnv1a64(name))) {}

RngStream::RngStream(uint64_t raw_seed) : seed_(raw_seed), eng_(raw_seed) {}

double RngStream::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    // u1 in (0,1] so log() is finite.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(a);
    has_cached_normal_ = true;
    return r * std::cos(a);
}

int64_t RngStream::uniform_int(int64_t lo, int64_t hi) {
    if (lo > hi) throw param_error("uniform_int: lo > hi");
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    // Rejection sampling to avoid modulo bias.
    uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return lo + static_cast<int64_t>(v % span);
}

RngStream RngStream::child(std::string_view name) const {
    return RngStream(splitmix64(seed_ ^ fnv1a64(name)));
}

}  // namespace retarget
