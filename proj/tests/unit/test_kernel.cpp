#include "declab/kernel.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace declab;

TEST_CASE("unit_phasor matches libm cos/sin") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> small(-1.0, 1.0);
    for (int i = 0; i < 20000; ++i) {
        const double t = small(rng);
        const Complex z = kernel::unit_phasor(t);
        const double th = 2.0 * std::numbers::pi * t;
        REQUIRE(std::abs(z.real() - std::cos(th)) < 2e-15);
        REQUIRE(std::abs(z.imag() - std::sin(th)) < 2e-15);
    }
}

TEST_CASE("unit_phasor is periodic and unimodular for large phases") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> frac(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double f = std::ldexp(std::floor(frac(rng) * 1024.0), -10);
        const double k = std::floor(frac(rng) * 1e6);
        const Complex a = kernel::unit_phasor(f);
        const Complex b = kernel::unit_phasor(f + k);
        REQUIRE(std::abs(a - b) < 1e-14);
        REQUIRE(std::abs(std::abs(b) - 1.0) < 1e-14);
    }
    CHECK(std::abs(kernel::unit_phasor(0.25) - Complex(0, 1)) < 1e-16);
    CHECK(std::abs(kernel::unit_phasor(0.5) - Complex(-1, 0)) < 1e-16);
    CHECK(std::abs(kernel::unit_phasor(-0.25) - Complex(0, -1)) < 1e-16);
}

TEST_CASE("PhaseSum group sums add to the total") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g;
    const std::size_t n = 257, groups = 9;
    std::vector<Vec4> pos(n);
    std::vector<Complex> c(n);
    std::vector<std::size_t> grp(n);
    for (std::size_t i = 0; i < n; ++i) {
        pos[i] = Vec4(g(rng), g(rng), g(rng), g(rng));
        c[i] = {g(rng), g(rng)};
        grp[i] = (i * 7) % groups;
    }
    kernel::PhaseSum sum(pos, c, grp, groups);
    kernel::Workspace ws;
    std::vector<Complex> parts(groups);
    for (int trial = 0; trial < 20; ++trial) {
        const Vec4 x(30 * g(rng), 30 * g(rng), 30 * g(rng), 30 * g(rng));
        const Complex total = sum.evaluate(x, parts, ws);
        Complex direct = 0, acc = 0;
        for (std::size_t i = 0; i < n; ++i)
            direct += c[i] * std::exp(Complex(0, 2.0 * std::numbers::pi * x.dot(pos[i])));
        for (auto p : parts) acc += p;
        REQUIRE(std::abs(total - direct) < 1e-11 * std::sqrt(double(n)) * 4);
        REQUIRE(std::abs(acc - total) < 1e-12);
        REQUIRE(std::abs(sum.evaluate(x, ws) - total) < 1e-12);
    }
}

TEST_CASE("PhaseSum rejects malformed input") {
    std::vector<Vec4> pos(2, Vec4::Zero());
    std::vector<Complex> c(2, 1.0);
    std::vector<std::size_t> grp{0, 3};
    REQUIRE_THROWS_AS(kernel::PhaseSum(pos, c, grp, 2), Error);
}
