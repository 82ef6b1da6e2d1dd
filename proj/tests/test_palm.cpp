// Unit tests: reduced Palm normalization constants, truncated density
// ratios, the continuity extension at nearly coincident tuples, and the
// pinned finite-N sampler — against closed-form and joint-density
// oracles.

#include <loggas/kernel.hpp>
#include <loggas/palm.hpp>
#include <loggas/rng.hpp>
#include <loggas/sampling.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

using namespace loggas;
using Catch::Approx;
using std::numbers::pi;

namespace {

std::vector<Point> random_tuple(rng::PhiloxStream& g, int m, double extent) {
    std::vector<Point> pts;
    for (int i = 0; i < m; ++i)
        pts.push_back({g.uniform_in(-extent, extent), g.uniform_in(-extent, extent)});
    return pts;
}

/// log of the finite-N joint eigenvalue density, up to the N-dependent
/// constant: sum log|z_i - z_j|^2 - sum |z_i|^2.
double log_joint_density(const std::vector<Point>& z) {
    double acc = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        acc -= z[i].norm2();
        for (std::size_t j = i + 1; j < z.size(); ++j)
            acc += std::log((z[i] - z[j]).norm2());
    }
    return acc;
}

}  // namespace

TEST_CASE("PalmCondition validation", "[palm]") {
    REQUIRE_THROWS_AS(PalmCondition({}, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(PalmCondition(std::vector<Point>(9, Point{0, 0}), 1.0),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(PalmCondition({{1, 0}, {1, 0}}, 1.0),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(PalmCondition({{1, 0}}, -2.0), std::invalid_argument);
    REQUIRE_NOTHROW(PalmCondition::all({{1, 0}, {0, 1}}));
}

TEST_CASE("palm_normalization closed forms", "[palm]") {
    SECTION("x = y gives exactly 1 for any m") {
        rng::PhiloxStream g(41);
        for (int m : {1, 2, 3, 5}) {
            const auto x = random_tuple(g, m, 2.0);
            REQUIRE(palm_normalization(x, x) == 1.0);
        }
    }
    SECTION("m = 1 is identically 1 (diagonal kernel is constant)") {
        REQUIRE(palm_normalization({{3, 0}}, {{0, 0}}) ==
                Approx(1.0).epsilon(1e-12));
        REQUIRE(palm_normalization({{-2, 5}}, {{0.5, 0.5}}) ==
                Approx(1.0).epsilon(1e-12));
    }
    SECTION("m = 2 example: x = {0,(1,0)}, y = {0,(2,0)}") {
        const double want =
            (1.0 - std::exp(-1.0)) / (1.0 - std::exp(-4.0)) * 4.0;
        REQUIRE(palm_normalization({{0, 0}, {1, 0}}, {{0, 0}, {2, 0}}) ==
                Approx(want).epsilon(1e-12));
        REQUIRE(want == Approx(2.5756).margin(1e-4));
    }
    SECTION("m = 2 brute force for generic tuples") {
        // Z = [ (1-e^{-|a1-a2|^2}) / (1-e^{-|b1-b2|^2}) ] · |b1-b2|^2/|a1-a2|^2
        rng::PhiloxStream g(42);
        for (int trial = 0; trial < 50; ++trial) {
            const auto x = random_tuple(g, 2, 3.0);
            const auto y = random_tuple(g, 2, 3.0);
            const double dx2 = (x[0] - x[1]).norm2();
            const double dy2 = (y[0] - y[1]).norm2();
            const double want = (-std::expm1(-dx2)) / (-std::expm1(-dy2)) *
                                (dy2 / dx2);
            REQUIRE(palm_normalization(x, y) == Approx(want).epsilon(1e-10));
        }
    }
    SECTION("m mismatch is an error") {
        REQUIRE_THROWS_AS(palm_normalization({{0, 0}}, {{0, 0}, {1, 0}}),
                          std::invalid_argument);
    }
}

TEST_CASE("palm continuity extension at nearly coincident pairs", "[palm]") {
    SECTION("regularized path matches the analytic (1-e^{-s^2})/s^2 limit") {
        // Pair {c, c+s} against a well-separated reference tuple.
        const std::vector<Point> y{{0.0, 0.0}, {2.0, 0.0}};
        const double zy = (-std::expm1(-4.0)) / 4.0;  // R(y)·pi^2
        for (double d : {1e-7, 1e-8, 1e-10}) {
            const std::vector<Point> x{{0.7, -0.3}, {0.7 + d * 0.6, -0.3 + d * 0.8}};
            const double want = (-std::expm1(-d * d)) / (d * d) / zy;
            REQUIRE(palm_normalization(x, y) == Approx(want).epsilon(1e-9));
        }
    }
    SECTION("continuous across the 1e-6 threshold") {
        const std::vector<Point> y{{0.0, 0.0}, {2.0, 0.0}};
        const std::vector<Point> xa{{1.0, 0.5}, {1.0 + 0.98e-6, 0.5}};
        const std::vector<Point> xb{{1.0, 0.5}, {1.0 + 1.02e-6, 0.5}};
        const double za = palm_normalization(xa, y);
        const double zb = palm_normalization(xb, y);
        // Direct-determinant error just above the threshold is ~1e-4
        // relative; the two sides must agree within that scale.
        REQUIRE(za == Approx(zb).epsilon(1e-3));
    }
    SECTION("m = 3 with one close pair against brute-force high-side") {
        // Compare the regularized evaluator just below the threshold to
        // the plain evaluator just above it (both describe the same
        // smooth function of the pair separation).
        const Point far{-1.0, 1.5};
        const std::vector<Point> y{{0, 0}, {2, 0}, {0, 2}};
        const auto make_x = [&](double d) {
            return std::vector<Point>{{0.6, 0.2}, {0.6 + d, 0.2}, far};
        };
        const double below = palm_normalization(make_x(0.9e-6), y);
        const double above = palm_normalization(make_x(2.0e-6), y);
        REQUIRE(below == Approx(above).epsilon(1e-3));
    }
    SECTION("higher-order confluence raises the documented error") {
        const std::vector<Point> x{
            {0, 0}, {1e-8, 0}, {0, 1e-8}};  // three mutually close
        const std::vector<Point> y{{0, 0}, {1, 0}, {0, 1}};
        REQUIRE_THROWS_AS(palm_normalization(x, y), NumericError);
    }
}

TEST_CASE("palm_normalization log-space survives |log Z| beyond double range",
          "[palm]") {
    // Eight points at mutual distances ~3e5: the kernel matrix is
    // essentially the identity (off-diagonals e^{-d²/2} flush to zero)
    // but log|Δ(x)|² ≈ Σ 2·log d ≈ 7e2, so Z = R(x)/R(y) underflows as
    // a plain double. The log form must stay finite and match the
    // difference-product arithmetic; the plain form must refuse.
    // Both tuples are octagons wide enough that every off-diagonal
    // kernel entry is exactly 0 in double arithmetic, so det K = pi^{-8}
    // on both sides and log Z reduces to the difference-product part.
    std::vector<Point> x, y;
    const double Lx = 3e7, Ly = 40.0;
    for (int i = 0; i < 8; ++i) {
        const double a = 2.0 * std::numbers::pi * i / 8.0;
        x.push_back({Lx * std::cos(a), Lx * std::sin(a)});
        y.push_back({Ly * std::cos(a), Ly * std::sin(a)});
    }
    const double lz = palm_normalization_log(x, y);
    REQUIRE(std::isfinite(lz));
    REQUIRE(lz < -700.0);
    double expect = 0.0;
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = i + 1; j < 8; ++j)
            expect += std::log((y[i] - y[j]).norm2()) -
                      std::log((x[i] - x[j]).norm2());
    REQUIRE(lz == Approx(expect).epsilon(1e-9));
    REQUIRE_THROWS_AS(palm_normalization(x, y), NumericError);
}

TEST_CASE("palm_density_ratio basics", "[palm]") {
    rng::PhiloxStream g(43);
    const auto config =
        Configuration(random_tuple(g, 12, 4.0), Window::disk(10.0));
    SECTION("x = y gives 1 for every truncation radius") {
        const auto x = random_tuple(g, 2, 3.0);
        for (double r : {0.5, 2.0, 1e9}) {
            REQUIRE(palm_density_ratio(x, x, config, r) == 1.0);
        }
    }
    SECTION("empty truncation ball gives 1/Z") {
        const auto x = random_tuple(g, 2, 3.0);
        const auto y = random_tuple(g, 2, 3.0);
        double rmin = 1e300;
        for (const Point& p : config.points()) rmin = std::min(rmin, p.norm());
        const double got = palm_density_ratio(x, y, config, rmin * 0.5);
        REQUIRE(got == Approx(1.0 / palm_normalization(x, y)).epsilon(1e-12));
    }
    SECTION("coincidence with a conditioned point is an error") {
        const Point s = config.points()[0];
        REQUIRE_THROWS_AS(
            palm_density_ratio({s}, {{9.0, 9.0}}, config, 1e9), NumericError);
    }
}

TEST_CASE("palm cocycle, inverse symmetry, permutation invariance", "[palm]") {
    rng::PhiloxStream g(44);
    const auto config =
        Configuration(random_tuple(g, 15, 4.0), Window::disk(10.0));
    const double r = 6.0;
    for (int trial = 0; trial < 30; ++trial) {
        const int m = 1 + static_cast<int>(g.below(4));
        const auto x = random_tuple(g, m, 3.0);
        const auto y = random_tuple(g, m, 3.0);
        const auto w = random_tuple(g, m, 3.0);
        const double rxy = palm_density_ratio(x, y, config, r);
        const double ryw = palm_density_ratio(y, w, config, r);
        const double rxw = palm_density_ratio(x, w, config, r);
        const double ryx = palm_density_ratio(y, x, config, r);
        REQUIRE(rxy * ryw == Approx(rxw).epsilon(1e-10));
        REQUIRE(rxy * ryx == Approx(1.0).epsilon(1e-10));
        if (m >= 2) {
            auto xp = x;
            std::swap(xp[0], xp[m - 1]);
            REQUIRE(palm_density_ratio(xp, y, config, r) ==
                    Approx(rxy).epsilon(1e-12));
        }
    }
}

TEST_CASE("palm_density_ratio matches the finite-N joint-density oracle",
          "[palm]") {
    // m = 1, N = 4: ratio at r = all equals
    //   p_N(x ∪ s)/p_N(y ∪ s) · e^{|x|² − |y|²}
    // to 1e-8 relative (the exponential factor is the finite-N Z).
    rng::PhiloxStream g(45);
    const double inf = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 100; ++trial) {
        const Point x{g.uniform_in(-2, 2), g.uniform_in(-2, 2)};
        const Point y{g.uniform_in(-2, 2), g.uniform_in(-2, 2)};
        const auto s = random_tuple(g, 3, 2.5);
        const auto config = Configuration(s, Window::disk(10.0));

        auto with_x = s;
        with_x.push_back(x);
        auto with_y = s;
        with_y.push_back(y);
        const double log_oracle = log_joint_density(with_x) -
                                  log_joint_density(with_y) + x.norm2() -
                                  y.norm2();
        const double got = palm_density_ratio({x}, {y}, config, inf);
        REQUIRE(got / std::exp(log_oracle) == Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("palm truncation stabilization on Ginibre samples", "[palm]") {
    // Successive log-ratio differences over r in {4,6,8,10} shrink in
    // distribution (median comparison over an ensemble).
    const std::vector<Point> x{{0.5, 0.0}};
    const std::vector<Point> y{{0.0, 0.0}};
    const int n_cfg = 24;
    std::vector<double> early, late;
    for (int i = 0; i < n_cfg; ++i) {
        const auto c = sample_ginibre(256, rng::hash64(4646, i));
        const double l4 = palm_density_ratio_log(x, y, c, 4.0);
        const double l6 = palm_density_ratio_log(x, y, c, 6.0);
        const double l8 = palm_density_ratio_log(x, y, c, 8.0);
        const double l10 = palm_density_ratio_log(x, y, c, 10.0);
        early.push_back(std::abs(l6 - l4));
        late.push_back(std::abs(l10 - l8));
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    REQUIRE(median(late) < median(early));
}

TEST_CASE("sample_palm_finite: density vanishes quadratically at a pinned "
          "origin",
          "[palm]") {
    // Exact oracle: conditioning the N-eigenvalue ensemble on a point at
    // 0 removes the constant mode; the free-point intensity is
    //   rho(r) = pi^{-1} e^{-r^2} Σ_{k=1}^{N-1} r^{2k}/k!  (~ r²/pi at 0).
    const int N = 16;
    const auto mean_in_disk = [&](double t) {
        const int n = 4000;
        double acc = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double r = t * i / n;
            double series = 0.0, term = 1.0;
            for (int k = 1; k < N; ++k) {
                term *= r * r / k;
                series += term;
            }
            const double f = std::exp(-r * r) * series * 2.0 * r;
            acc += (i == 0 || i == n) ? 0.5 * f : f;
        }
        return acc * t / n;
    };
    const int n_samples = 400;
    double in03 = 0.0, in10 = 0.0;
    double in10_sq = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const auto c = sample_palm_finite(N, std::vector<Point>{{0.0, 0.0}}, 500,
                                          rng::hash64(4747, i));
        REQUIRE(c.size() == static_cast<std::size_t>(N - 1));
        double c03 = 0.0, c10 = 0.0;
        for (const Point& p : c.points()) {
            const double r = p.norm();
            if (r < 0.3) c03 += 1.0;
            if (r < 1.0) c10 += 1.0;
        }
        in03 += c03;
        in10 += c10;
        in10_sq += c10 * c10;
    }
    // Quadratic vanishing: the tiny inner disk stays essentially empty.
    const double oracle03 = mean_in_disk(0.3);  // ≈ 0.004
    REQUIRE(oracle03 < 0.005);
    REQUIRE(in03 / n_samples < 0.05);  // Poisson would put ~0.09 here
    // Quantitative radial oracle at r = 1 within 3 MC sigma.
    const double mean10 = in10 / n_samples;
    const double var10 = in10_sq / n_samples - mean10 * mean10;
    const double se10 = std::sqrt(var10 / n_samples);
    REQUIRE(mean10 == Approx(mean_in_disk(1.0)).margin(3.0 * se10 + 1e-6));
}

TEST_CASE("sample_palm_finite: far pinned point leaves the bulk unchanged",
          "[palm]") {
    // Pinned at |x| = 3 sqrt(N): free points match the unpinned N-1
    // ensemble moment E sum |z|^2 = (N-1)N/2 within 3 empirical sigma.
    const int N = 16;
    const double far = 3.0 * std::sqrt(static_cast<double>(N));
    const int n_samples = 200;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const auto c = sample_palm_finite(N, std::vector<Point>{{far, 0.0}}, 500,
                                          rng::hash64(4848, i));
        double r2 = 0.0;
        for (const Point& p : c.points()) r2 += p.norm2();
        sum += r2;
        sum2 += r2 * r2;
    }
    const double mean = sum / n_samples;
    const double se = std::sqrt((sum2 / n_samples - mean * mean) / n_samples);
    REQUIRE(mean == Approx((N - 1.0) * N / 2.0).margin(3.0 * se + 1e-9));
}

TEST_CASE("sample_palm_finite: m = 0 degenerate call reproduces the "
          "unconditioned ensemble",
          "[palm]") {
    const int N = 16;
    const int n_samples = 300;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const auto c = sample_palm_finite(N, std::vector<Point>{}, 600,
                                          rng::hash64(4949, i));
        REQUIRE(c.size() == static_cast<std::size_t>(N));
        double r2 = 0.0;
        for (const Point& p : c.points()) r2 += p.norm2();
        sum += r2;
        sum2 += r2 * r2;
    }
    const double mean = sum / n_samples;
    const double se = std::sqrt((sum2 / n_samples - mean * mean) / n_samples);
    REQUIRE(mean == Approx(N * (N + 1.0) / 2.0).margin(3.0 * se + 1e-9));
}

TEST_CASE("sample_palm_finite validation and determinism", "[palm]") {
    REQUIRE_THROWS_AS(
        sample_palm_finite(2, std::vector<Point>{{0, 0}, {1, 0}}, 10, 1),
        std::invalid_argument);
    const std::vector<Point> pin{{0.0, 0.0}};
    REQUIRE(sample_palm_finite(8, pin, 200, 5) ==
            sample_palm_finite(8, pin, 200, 5));
}
