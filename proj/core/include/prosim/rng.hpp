#pragma once

#include <array>
#include <cstdint>

namespace prosim {

// xoshiro256++ generator. The standard library distributions are not used
// anywhere in the model: every categorical/geometric draw is derived from
// next_double() by inverse CDF, so simulations are bit-reproducible across
// compilers and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) { reseed(seed); }

    void reseed(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n);

    // Geometric on {1, 2, ...} with P(k) = q (1-q)^{k-1}; mean 1/q.
    std::uint64_t next_geometric(double q);

    // UniformRandomBitGenerator interface, handy for std::shuffle in tests.
    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~0ull; }
    result_type operator()() { return next_u64(); }

private:
    std::array<std::uint64_t, 4> state_{};
};

// Stream purposes. Every stochastic decision in a simulation draws from a
// stream keyed by (seed, purpose, ids); streams for different keys are
// independent. Replay and resume re-derive the same streams from the same
// keys, which is what makes event-log replay and snapshot/resume exact.
enum class StreamPurpose : std::uint64_t {
    schedule = 1, // per step: speaker, referent, discourse length, slots
    topic = 2,    // per discourse: topic CRP draw
    decision = 3, // per event: sticky coin, then form draw
    seating = 4,  // per (event, member): table choices when seating
    replicate = 5 // per scenario replicate: derived base seed
};

std::uint64_t mix_u64(std::uint64_t x);

// Independent stream for (seed, purpose, a, b).
Rng derive_rng(std::uint64_t seed, StreamPurpose purpose, std::uint64_t a = 0,
               std::uint64_t b = 0);

std::uint64_t derive_seed(std::uint64_t seed, StreamPurpose purpose, std::uint64_t a = 0,
                          std::uint64_t b = 0);

} // namespace prosim
