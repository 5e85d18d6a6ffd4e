#pragma once

#include <cstdint>

namespace ncx {

// splitmix64: identical sequences on every platform for a given seed, which
// std::mt19937 + distributions do not guarantee across standard libraries.
struct Rng {
    uint64_t state;

    explicit Rng(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, n) by rejection; n must be > 0
    uint64_t below(uint64_t n) {
        uint64_t limit = n * (UINT64_MAX / n);
        uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return v % n;
    }

    // small signed rational ingredients for random test elements
    long small_int(long lo, long hi) { return lo + static_cast<long>(below(static_cast<uint64_t>(hi - lo + 1))); }

    bool coin() { return (next() & 1) != 0; }
};

}  // namespace ncx
