// Unit tests: counter-based RNG (Philox4x32-10), seed splitting,
// uniform/normal/Poisson draws, and the determinism contract.

#include <loggas/rng.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

using namespace loggas::rng;
using Catch::Approx;

TEST_CASE("Philox4x32-10 known-answer vectors", "[rng]") {
    // Reference vectors for the 10-round Philox4x32 block cipher
    // (Salmon et al., SC 2011 release test vectors).
    SECTION("zero counter, zero key") {
        const auto r = philox4x32({0u, 0u, 0u, 0u}, {0u, 0u});
        REQUIRE(r[0] == 0x6627e8d5u);
        REQUIRE(r[1] == 0xe169c58du);
        REQUIRE(r[2] == 0xbc57ac4cu);
        REQUIRE(r[3] == 0x9b00dbd8u);
    }
    SECTION("all-ones counter and key") {
        const auto r = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu,
                                   0xffffffffu},
                                  {0xffffffffu, 0xffffffffu});
        REQUIRE(r[0] == 0x408f276du);
        REQUIRE(r[1] == 0x41c83b0eu);
        REQUIRE(r[2] == 0xa20bc7c6u);
        REQUIRE(r[3] == 0x6d5451fdu);
    }
    SECTION("pi-digits counter and key") {
        const auto r = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu,
                                   0x03707344u},
                                  {0xa4093822u, 0x299f31d0u});
        REQUIRE(r[0] == 0xd16cfe09u);
        REQUIRE(r[1] == 0x94fdccebu);
        REQUIRE(r[2] == 0x5001e420u);
        REQUIRE(r[3] == 0x24126ea1u);
    }
}

TEST_CASE("hash64 seed splitting is collision-free at working scale", "[rng]") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t k = 0; k < 4096; ++k) seen.insert(hash64(42, k));
    REQUIRE(seen.size() == 4096);
    REQUIRE(hash64(1, 0) != hash64(2, 0));
    REQUIRE(hash64(5, 7) == hash64(5, 7));  // pure function
}

TEST_CASE("uniform53 stays in [0,1) and fills the mantissa", "[rng]") {
    REQUIRE(uniform53(0u, 0u) == 0.0);
    REQUIRE(uniform53(0xffffffffu, 0xffffffffu) < 1.0);
    REQUIRE(uniform53(0xffffffffu, 0xffffffffu) > 0.9999999999);
}

TEST_CASE("keyed normal pairs: determinism and moments", "[rng]") {
    SECTION("pure function of (seed, step, particle)") {
        const auto a = normal_pair(123, 45, 6);
        const auto b = normal_pair(123, 45, 6);
        REQUIRE(a[0] == b[0]);
        REQUIRE(a[1] == b[1]);
        const auto c = normal_pair(123, 45, 7);
        REQUIRE((a[0] != c[0] || a[1] != c[1]));
    }
    SECTION("mean 0, variance 1 over 10^5 draws") {
        const int n = 100000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto z = normal_pair(2024, static_cast<std::uint64_t>(i), 0);
            sum += z[0] + z[1];
            sum2 += z[0] * z[0] + z[1] * z[1];
        }
        const double mean = sum / (2.0 * n);
        const double var = sum2 / (2.0 * n) - mean * mean;
        REQUIRE(mean == Approx(0.0).margin(3.0 / std::sqrt(2.0 * n)));
        REQUIRE(var == Approx(1.0).margin(4.0 * std::sqrt(2.0 / (2.0 * n))));
    }
}

TEST_CASE("PhiloxStream sequential draws", "[rng]") {
    SECTION("same seed, same stream; different seed, different stream") {
        PhiloxStream a(99), b(99), c(100);
        bool all_equal = true, any_diff = false;
        for (int i = 0; i < 64; ++i) {
            const auto va = a.next_u32();
            all_equal = all_equal && (va == b.next_u32());
            any_diff = any_diff || (va != c.next_u32());
        }
        REQUIRE(all_equal);
        REQUIRE(any_diff);
    }
    SECTION("uniform moments") {
        PhiloxStream g(5);
        const int n = 200000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double u = g.uniform();
            REQUIRE(u >= 0.0);
            REQUIRE(u < 1.0);
            sum += u;
            sum2 += u * u;
        }
        REQUIRE(sum / n == Approx(0.5).margin(0.005));
        REQUIRE(sum2 / n == Approx(1.0 / 3.0).margin(0.005));
    }
    SECTION("normal moments including the cached second draw") {
        PhiloxStream g(6);
        const int n = 200000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double z = g.normal();
            sum += z;
            sum2 += z * z;
        }
        REQUIRE(sum / n == Approx(0.0).margin(0.01));
        REQUIRE(sum2 / n == Approx(1.0).margin(0.015));
    }
    SECTION("below(n) is in range and roughly uniform") {
        PhiloxStream g(8);
        std::vector<int> hits(10, 0);
        const int n = 100000;
        for (int i = 0; i < n; ++i) ++hits[g.below(10)];
        for (int h : hits) {
            REQUIRE(h > 9000);
            REQUIRE(h < 11000);
        }
        REQUIRE_THROWS_AS(g.below(0), std::invalid_argument);
    }
}

TEST_CASE("Poisson counts by exponential arrivals", "[rng]") {
    SECTION("moments at mean 100") {
        PhiloxStream g(31);
        const int n = 4000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = static_cast<double>(g.poisson(100.0));
            sum += x;
            sum2 += x * x;
        }
        const double mean = sum / n;
        const double var = sum2 / n - mean * mean;
        REQUIRE(mean == Approx(100.0).margin(3.0 * 10.0 / std::sqrt(n)));
        REQUIRE(var / mean == Approx(1.0).margin(0.1));
    }
    SECTION("mean zero gives zero") {
        PhiloxStream g(32);
        REQUIRE(g.poisson(0.0) == 0);
    }
    SECTION("small mean matches e^{-mean} for the empty event") {
        PhiloxStream g(33);
        const int n = 200000;
        int zeros = 0;
        for (int i = 0; i < n; ++i) zeros += g.poisson(0.5) == 0 ? 1 : 0;
        REQUIRE(static_cast<double>(zeros) / n ==
                Approx(std::exp(-0.5)).margin(0.005));
    }
    SECTION("negative mean rejected") {
        PhiloxStream g(34);
        REQUIRE_THROWS_AS(g.poisson(-1.0), std::invalid_argument);
    }
}
