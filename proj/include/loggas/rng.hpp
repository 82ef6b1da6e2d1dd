/**
 * @brief Counter-based random number generation (Philox4x32-10).
 *
 * Salmon et al., SC 2011: "Parallel random numbers: as easy as 1, 2, 3."
 * A pure function of (counter, key) — every draw is addressable, so
 * simulations replay bit-identically regardless of thread scheduling.
 *
 * Two usage patterns:
 *   - keyed one-shot draws: normal_pair(seed, step, particle) for the
 *     Brownian increments of the dynamics module;
 *   - sequential streams: PhiloxStream for samplers and MCMC chains.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace loggas::rng {

// Philox4x32 round and key-schedule constants.
inline constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;
inline constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

/// One block: 10 rounds of Philox4x32 on a 128-bit counter / 64-bit key.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kPhiloxW32A;
            key[1] += kPhiloxW32B;
        }
        const std::uint64_t p0 =
            static_cast<std::uint64_t>(kPhiloxM4x32A) * ctr[0];
        const std::uint64_t p1 =
            static_cast<std::uint64_t>(kPhiloxM4x32B) * ctr[2];
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

/// SplitMix64 finalizer: the documented 64-bit mixing hash behind seed
/// splitting (seed_k = hash64(base, k)) and key derivation.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Replica-seed splitting rule: independent, individually replayable.
inline std::uint64_t hash64(std::uint64_t base, std::uint64_t k) {
    return mix64(base ^ mix64(k + 0x632BE59BD9B4E019ull));
}

/// Map two 32-bit words to a uniform double in [0, 1) with 53-bit mantissa.
inline double uniform53(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits =
        (static_cast<std::uint64_t>(hi) << 32) | static_cast<std::uint64_t>(lo);
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Box–Muller transform; u1 is nudged into (0, 1] so log never sees 0.
inline std::array<double, 2> box_muller(double u1, double u2) {
    const double r = std::sqrt(-2.0 * std::log1p(-u1));  // 1-u1 in (0,1]
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

/**
 * @brief One pair of independent standard normals addressed by
 * (seed, step, particle). The whole Brownian driving field of a run is a
 * pure function of these indices — the determinism contract of em_step.
 */
inline std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t step,
                                         std::uint64_t particle) {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
        static_cast<std::uint32_t>(particle),
        static_cast<std::uint32_t>(particle >> 32)};
    const std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    const auto r = philox4x32(ctr, key);
    return box_muller(uniform53(r[0], r[1]), uniform53(r[2], r[3]));
}

/**
 * @brief Sequential stream over the Philox counter space.
 *
 * The key is derived from the seed; the 128-bit counter increments once
 * per block of four 32-bit outputs. Distinct seeds give statistically
 * independent streams.
 */
class PhiloxStream {
public:
    explicit PhiloxStream(std::uint64_t seed) {
        key_ = {static_cast<std::uint32_t>(seed),
                static_cast<std::uint32_t>(seed >> 32)};
        // Domain-separate sequential streams from the keyed one-shot
        // draws above by starting the counter in the upper half-space.
        ctr_ = {0, 0, 0, 0x80000000u};
    }

    std::uint32_t next_u32() {
        if (have_ == 0) refill();
        return buf_[--have_];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// Uniform double in [0, 1), 53 random mantissa bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in (a, b) — endpoints excluded by the nudge.
    double uniform_in(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal; Box–Muller pairs are cached.
    double normal() {
        if (have_normal_) {
            have_normal_ = false;
            return cached_normal_;
        }
        const auto z = box_muller(uniform(), uniform());
        cached_normal_ = z[1];
        have_normal_ = true;
        return z[0];
    }

    /// Uniform index in {0, ..., n-1} by rejection (exact, unbiased).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("PhiloxStream::below: n == 0");
        const std::uint64_t limit = ~0ull - ~0ull % n;
        for (;;) {
            const std::uint64_t v = next_u64();
            if (v < limit) return v % n;
        }
    }

    /**
     * @brief Poisson count by summing unit-rate exponential arrivals
     * until they exceed the mean. Exact for any mean and immune to the
     * e^{-mean} underflow of the textbook product method; O(mean) time.
     */
    std::uint64_t poisson(double mean) {
        if (!(mean >= 0.0))
            throw std::invalid_argument("PhiloxStream::poisson: mean < 0");
        std::uint64_t count = 0;
        double acc = 0.0;
        for (;;) {
            acc += -std::log1p(-uniform());  // Exp(1) arrival
            if (acc > mean) return count;
            ++count;
        }
    }

private:
    void refill() {
        buf_ = philox4x32(ctr_, key_);
        have_ = 4;
        // 128-bit counter increment.
        if (++ctr_[0] == 0 && ++ctr_[1] == 0 && ++ctr_[2] == 0) ++ctr_[3];
    }

    std::array<std::uint32_t, 4> ctr_{};
    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 4> buf_{};
    int have_ = 0;
    bool have_normal_ = false;
    double cached_normal_ = 0.0;
};

}  // namespace loggas::rng
