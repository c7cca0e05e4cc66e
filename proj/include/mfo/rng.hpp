#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace mfo {

// SplitMix64 finalizer; used to turn arbitrary key tuples into seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives a child seed from a root seed and a list of integer keys.
// Streams keyed this way are independent of evaluation order, which is
// what keeps parallel runs and resumed runs bit-identical.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = splitmix64(root);
    for (std::uint64_t k : keys) {
        h = splitmix64(h ^ (k + 0x9e3779b97f4a7c15ULL));
    }
    return h;
}

// Small string key helper so call sites can salt streams by purpose.
inline std::uint64_t key_of(const char* tag) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (const char* p = tag; *p != '\0'; ++p) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(*p));
        h *= 1099511628211ULL;
    }
    return h;
}

// Deterministic random stream. mt19937_64 output is fully specified by the
// standard, and all floating-point draws below avoid std::*_distribution
// (whose algorithms are implementation-defined), so sequences are portable.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

    // Uniform integer in [lo, hi], both ends inclusive. Rejection sampling,
    // no modulo bias.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t range = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
        if (range == 0) {  // full 64-bit range
            return static_cast<std::int64_t>(gen_());
        }
        const std::uint64_t rem = (0 - range) % range;  // 2^64 mod range
        std::uint64_t x = gen_();
        while (rem != 0 && x >= 0 - rem) {
            x = gen_();
        }
        return lo + static_cast<std::int64_t>(x % range);
    }

    // Standard normal via Box-Muller; the spare is cached per stream.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925286766559;
        spare_ = mag * std::sin(two_pi * u2);
        have_spare_ = true;
        return mag * std::cos(two_pi * u2);
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mfo
