#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace art {

// Deterministic random stream (xoshiro256++ seeded through splitmix64).
// Deliberately avoids std::* distributions so that sampled values are
// identical across standard libraries and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t x = seed;
        for (auto& w : s_) w = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; consumes two uniforms per draw.
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Independent stream derived from this stream's construction seed and a
    // tag. Forking does not consume state, so the same tag always yields the
    // same stream regardless of draws made in between.
    Rng fork(std::string_view tag) const { return Rng(seed_ ^ fnv1a(tag)); }
    Rng fork(std::uint64_t id) const {
        std::uint64_t x = seed_ ^ (0x9e3779b97f4a7c15ull * (id + 1));
        return Rng(splitmix64(x));
    }

    std::uint64_t seed() const { return seed_; }

    // Order-sensitive digest of the current state, for run metadata.
    std::uint64_t state_digest() const {
        std::uint64_t d = 0xcbf29ce484222325ull;
        for (auto w : s_) {
            d ^= w;
            d *= 0x100000001b3ull;
        }
        return d;
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        return h;
    }

    std::uint64_t seed_;
    std::uint64_t s_[4];
};

} // namespace art
