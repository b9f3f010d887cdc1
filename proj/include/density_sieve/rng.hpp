#pragma once

#include <cstdint>
#include <limits>

namespace density_sieve {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Fixed two-argument hash used for every derived seed and counter draw:
/// hash64(a, b) = mix64(mix64(a) ^ (b * golden + 0x632be59bd9b4e019)).
constexpr std::uint64_t hash64(std::uint64_t a, std::uint64_t b) {
    return mix64(mix64(a) ^ (b * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL));
}

/// Counter-based stream: the draw for block k depends only on (seed, k), so
/// blocks can be sampled in any order or in parallel.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Raw 64-bit word for (counter, attempt).
    std::uint64_t word(std::uint64_t counter, std::uint64_t attempt = 0) const {
        return hash64(hash64(seed_, counter), attempt);
    }

    /// Uniform draw from {0, ..., k-1} for counter k, exact by rejection.
    std::uint64_t uniform_below(std::uint64_t counter, std::uint64_t k) const {
        if (k <= 1) return 0;
        // Largest multiple of k representable is 2^64 - (2^64 mod k).
        const std::uint64_t rem = (std::numeric_limits<std::uint64_t>::max() % k + 1) % k;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - rem;  // accept v <= limit
        for (std::uint64_t attempt = 0;; ++attempt) {
            std::uint64_t v = word(counter, attempt);
            if (v <= limit) return v % k;
        }
    }

    /// Block-k residue choice: uniform on {0, ..., k-1}.
    std::uint64_t residue_for_block(std::uint64_t k) const { return uniform_below(k, k); }

private:
    std::uint64_t seed_;
};

}  // namespace density_sieve
