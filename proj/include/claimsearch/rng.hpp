#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace claimsearch {

// Seeded generator with a fixed, platform-independent output sequence.
// std::uniform_int_distribution and std::shuffle are implementation defined,
// so the bounded draw and the shuffle are spelled out here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        // splitmix64
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [lo, hi], inclusive. Rejection sampling, no modulo bias.
    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) noexcept {
        const std::uint64_t span = hi - lo;
        if (span == ~0ull) return next();
        const std::uint64_t range = span + 1;
        const std::uint64_t limit = ~0ull - (~0ull % range);
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return lo + x % range;
    }

    // Uniform in [0, 1).
    double unit() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    template <typename T>
    void shuffle(std::span<T> items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform(0, i - 1));
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t state_;
};

inline std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

// Derives an independent stream for one key (e.g. a patent id) from a global seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) noexcept {
    Rng mix(seed ^ fnv1a64(key));
    return mix.next();
}

}  // namespace claimsearch
