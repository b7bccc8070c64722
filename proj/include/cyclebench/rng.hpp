#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cyclebench {

// FNV-1a over bytes. Used for stable digests and seed derivation; every
// stochastic choice in the project must flow through Rng so traces replay
// byte-identically across platforms.
constexpr std::uint64_t fnv1a(std::string_view s,
                              std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ull ^ (root * 0x9e3779b97f4a7c15ull);
    return fnv1a(tag, h);
}

// mt19937_64 with hand-mapped draws. std::uniform_int_distribution is
// implementation-defined, so bounded draws use the multiply-high mapping
// and reals use the 53-bit mantissa trick.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(below(static_cast<std::uint64_t>(n)));
    }

    double unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return unit() < p;
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace cyclebench
