#include "prosim/rng.hpp"

#include <cmath>

namespace prosim {

namespace {

// splitmix64, used for seeding and key mixing.
std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace

void Rng::reseed(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

std::uint64_t Rng::next_below(std::uint64_t n) {
    // Rejection sampling on the top bits; bias-free and deterministic.
    const std::uint64_t threshold = (~n + 1) % n; // 2^64 mod n
    for (;;) {
        std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

std::uint64_t Rng::next_geometric(double q) {
    if (q >= 1.0) return 1;
    // Inverse CDF on {1,2,...}.
    double u = next_double();
    double k = std::floor(std::log1p(-u) / std::log1p(-q));
    return 1 + static_cast<std::uint64_t>(k);
}

std::uint64_t mix_u64(std::uint64_t x) {
    std::uint64_t s = x;
    return splitmix64(s);
}

std::uint64_t derive_seed(std::uint64_t seed, StreamPurpose purpose, std::uint64_t a,
                          std::uint64_t b) {
    std::uint64_t h = seed;
    h = mix_u64(h ^ (static_cast<std::uint64_t>(purpose) * 0x9e3779b97f4a7c15ull));
    h = mix_u64(h ^ (a + 0x165667b19e3779f9ull));
    h = mix_u64(h ^ (b + 0x27d4eb2f165667c5ull));
    return h;
}

Rng derive_rng(std::uint64_t seed, StreamPurpose purpose, std::uint64_t a, std::uint64_t b) {
    return Rng(derive_seed(seed, purpose, a, b));
}

} // namespace prosim
