// Unit tests: Ginibre kernel evaluation (infinite and finite-N) and
// n-point correlation determinants, against closed-form and brute-force
// oracles.

#include <loggas/kernel.hpp>
#include <loggas/rng.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

using namespace loggas;
using Catch::Approx;
using std::numbers::pi;

namespace {

/// Brute-force finite-N kernel in plain double arithmetic — valid only
/// where w^k/k! cannot overflow (|w| modest). Oracle for the scaled
/// log-space implementation.
std::complex<double> naive_finite_kernel(int N, Point x, Point y) {
    const std::complex<double> w = x.cplx() * std::conj(y.cplx());
    std::complex<double> sum{0.0, 0.0};
    std::complex<double> term{1.0, 0.0};
    for (int k = 0; k < N; ++k) {
        sum += term;
        term *= w / static_cast<double>(k + 1);
    }
    return sum * std::exp(-0.5 * (x.norm2() + y.norm2())) / pi;
}

}  // namespace

TEST_CASE("kernel_eval closed-form anchors", "[kernel]") {
    const auto inf = KernelSpec::infinite();
    SECTION("K(0,0) = 1/pi") {
        REQUIRE(kernel_eval(inf, {0, 0}, {0, 0}).real() == Approx(1.0 / pi));
        REQUIRE(kernel_eval(inf, {0, 0}, {0, 0}).imag() == Approx(0.0).margin(1e-15));
    }
    SECTION("|K(x,x)| = 1/pi on the diagonal, far from the origin") {
        const Point x{5.0, -3.0};
        REQUIRE(std::abs(kernel_eval(inf, x, x)) == Approx(1.0 / pi).epsilon(1e-12));
    }
    SECTION("diagonal stays exact absurdly far out (overflow safety)") {
        const Point x{200.0, -150.0};
        REQUIRE(std::abs(kernel_eval(inf, x, x)) == Approx(1.0 / pi).epsilon(1e-10));
        const auto kn = kernel_eval(KernelSpec::finite(64), x, x);
        REQUIRE(std::isfinite(kn.real()));
        REQUIRE(std::isfinite(kn.imag()));
    }
    SECTION("Hermitian symmetry at a specific pair") {
        const auto a = kernel_eval(inf, {1, 0}, {0, 1});
        const auto b = kernel_eval(inf, {0, 1}, {1, 0});
        REQUIRE(a.real() == Approx(b.real()));
        REQUIRE(a.imag() == Approx(-b.imag()));
    }
}

TEST_CASE("Hermiticity over random pairs", "[kernel]") {
    rng::PhiloxStream g(71);
    const auto inf = KernelSpec::infinite();
    const auto fin = KernelSpec::finite(32);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const Point x{g.uniform_in(-6, 6), g.uniform_in(-6, 6)};
        const Point y{g.uniform_in(-6, 6), g.uniform_in(-6, 6)};
        for (const auto& spec : {inf, fin}) {
            const auto d = kernel_eval(spec, x, y) -
                           std::conj(kernel_eval(spec, y, x));
            worst = std::max(worst, std::abs(d));
        }
    }
    REQUIRE(worst < 1e-12);
}

TEST_CASE("finite-N kernel matches brute-force series where it is safe",
          "[kernel]") {
    rng::PhiloxStream g(72);
    for (int trial = 0; trial < 500; ++trial) {
        const Point x{g.uniform_in(-3, 3), g.uniform_in(-3, 3)};
        const Point y{g.uniform_in(-3, 3), g.uniform_in(-3, 3)};
        const int N = 1 + static_cast<int>(g.below(40));
        const auto got = kernel_eval(KernelSpec::finite(N), x, y);
        const auto want = naive_finite_kernel(N, x, y);
        REQUIRE(std::abs(got - want) < 1e-13);
    }
}

TEST_CASE("finite-N kernel converges to the infinite kernel", "[kernel]") {
    // |K_N - K| < 1e-10 for |x|,|y| <= 2 and N >= 40.
    rng::PhiloxStream g(73);
    const auto inf = KernelSpec::infinite();
    for (int trial = 0; trial < 200; ++trial) {
        Point x{g.uniform_in(-2, 2), g.uniform_in(-2, 2)};
        Point y{g.uniform_in(-2, 2), g.uniform_in(-2, 2)};
        if (x.norm() > 2) x = (2.0 / x.norm()) * x;
        if (y.norm() > 2) y = (2.0 / y.norm()) * y;
        for (int N : {40, 80, 160}) {
            const auto d =
                kernel_eval(KernelSpec::finite(N), x, y) - kernel_eval(inf, x, y);
            REQUIRE(std::abs(d) < 1e-10);
        }
    }
}

TEST_CASE("correlation closed forms", "[kernel]") {
    const auto inf = KernelSpec::infinite();
    SECTION("one point: rho^1 = 1/pi anywhere") {
        REQUIRE(correlation(inf, {{0, 0}}) == Approx(1.0 / pi).epsilon(1e-13));
        REQUIRE(correlation(inf, {{7.0, -2.0}}) == Approx(1.0 / pi).epsilon(1e-13));
    }
    SECTION("repeated point: rho^2 = 0") {
        REQUIRE(correlation(inf, {{1.0, 1.0}, {1.0, 1.0}}) ==
                Approx(0.0).margin(1e-10));
    }
    SECTION("pair correlation rho^2((0,0),(1,0)) = pi^-2 (1 - e^-1)") {
        const double want = (1.0 - std::exp(-1.0)) / (pi * pi);
        REQUIRE(correlation(inf, {{0, 0}, {1, 0}}) == Approx(want).epsilon(1e-12));
        // Numerically: about 0.06404
        REQUIRE(want == Approx(0.0640472).margin(5e-7));
    }
    SECTION("general pair formula pi^-2 (1 - e^{-|x-y|^2})") {
        rng::PhiloxStream g(74);
        for (int i = 0; i < 100; ++i) {
            const Point x{g.uniform_in(-3, 3), g.uniform_in(-3, 3)};
            const Point y{g.uniform_in(-3, 3), g.uniform_in(-3, 3)};
            const double want = (1.0 - std::exp(-(x - y).norm2())) / (pi * pi);
            REQUIRE(correlation(inf, {x, y}) == Approx(want).margin(1e-12));
        }
    }
}

TEST_CASE("correlation positivity for random tuples", "[kernel]") {
    rng::PhiloxStream g(75);
    CorrelationDiag diag;
    for (int trial = 0; trial < 400; ++trial) {
        const int n = 1 + static_cast<int>(g.below(6));
        std::vector<Point> pts;
        for (int i = 0; i < n; ++i)
            pts.push_back({g.uniform_in(-4, 4), g.uniform_in(-4, 4)});
        const double rho = correlation(KernelSpec::infinite(), pts, &diag);
        REQUIRE(rho >= 0.0);  // clamped; raw value tracked in diag
    }
    REQUIRE(diag.max_imag_residue < 1e-10);
}

TEST_CASE("correlation of a 3x3 determinant against explicit cofactors",
          "[kernel]") {
    const auto inf = KernelSpec::infinite();
    const std::vector<Point> pts{{0.3, -0.2}, {1.1, 0.4}, {-0.7, 0.9}};
    std::complex<double> k[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) k[i][j] = kernel_eval(inf, pts[i], pts[j]);
    const std::complex<double> det =
        k[0][0] * (k[1][1] * k[2][2] - k[1][2] * k[2][1]) -
        k[0][1] * (k[1][0] * k[2][2] - k[1][2] * k[2][0]) +
        k[0][2] * (k[1][0] * k[2][1] - k[1][1] * k[2][0]);
    REQUIRE(correlation(inf, pts) == Approx(det.real()).epsilon(1e-11));
}

TEST_CASE("KernelSpec validation", "[kernel]") {
    REQUIRE_THROWS_AS(KernelSpec::finite(0), std::invalid_argument);
    REQUIRE_THROWS_AS(correlation(KernelSpec::infinite(), {}),
                      std::invalid_argument);
}
