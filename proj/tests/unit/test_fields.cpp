#include "declab/fields.hpp"

#include <catch_amalgamated.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace declab;
using namespace declab::fields;
using geometry::QuadCoeffs;

namespace {

Surface parab() { return geometry::quad_surface(QuadCoeffs{{1, 0, 0, 0, 0, 1}}); }

Complex fresnel(double a) {
    using boost::math::quadrature::gauss_kronrod;
    auto re = [a](double t) { return std::cos(2 * std::numbers::pi * a * t * t); };
    auto im = [a](double t) { return std::sin(2 * std::numbers::pi * a * t * t); };
    return {gauss_kronrod<double, 61>::integrate(re, 0.0, 1.0, 15, 1e-14),
            gauss_kronrod<double, 61>::integrate(im, 0.0, 1.0, 15, 1e-14)};
}

Vec4 random_point(std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> g;
    return scale * Vec4(g(rng), g(rng), g(rng), g(rng));
}

}  // namespace

TEST_CASE("gauss_legendre integrates polynomials exactly") {
    for (int n : {1, 2, 4, 8, 16}) {
        const GaussRule r = gauss_legendre(n);
        for (int k = 0; k < 2 * n; ++k) {
            double acc = 0;
            for (int i = 0; i < n; ++i) acc += r.weights[i] * std::pow(r.nodes[i], k);
            REQUIRE(acc == Catch::Approx(1.0 / (k + 1)).epsilon(1e-13));
        }
    }
}

TEST_CASE("extension_eval examples") {
    const auto one = const_field(unit_support(), {2, 4});
    CHECK(std::abs(extension_eval(parab(), one, Vec4::Zero()) - 1.0) < 1e-14);

    const auto single = AmplitudeField::atomic({Vec2(0.3, 0.7)}, {Complex(1, 0)});
    std::mt19937_64 rng(31);
    for (int k = 0; k < 50; ++k)
        REQUIRE(std::abs(std::abs(extension_eval(parab(), single, random_point(rng, 100))) - 1.0) < 1e-14);

    const auto fine = const_field(unit_support(), {5, 8});
    for (double a : {1.0, 7.5, 20.0}) {
        const Complex e = extension_eval(parab(), fine, Vec4(0, 0, a, 0));
        REQUIRE(std::abs(e - fresnel(a)) < 1e-6);
    }
    REQUIRE_THROWS_AS(extension_eval(parab(), one, Vec4(0, std::nan(""), 0, 0)), Error);
}

TEST_CASE("cap restrictions sum to the whole field") {
    std::mt19937_64 rng(32);
    const auto f = random_phase_field(5, 3, unit_support(), {3, 4});
    const auto atoms = [&] {
        std::uniform_real_distribution<double> u(0, 1);
        std::vector<Vec2> p;
        std::vector<Complex> a;
        for (int k = 0; k < 200; ++k) {
            p.emplace_back(std::floor(u(rng) * 16) / 16, u(rng));
            a.emplace_back(u(rng), u(rng));
        }
        p.emplace_back(1.0, 1.0);
        a.emplace_back(1.0, 0.0);
        return AmplitudeField::atomic(p, a);
    }();
    for (const AmplitudeField* field : {&f, &atoms}) {
        const CapPartition caps = cap_partition(field->support(), 2);
        REQUIRE(caps.caps.size() == 16);
        std::size_t total_nodes = 0;
        for (int k = 0; k < 5; ++k) {
            const Vec4 x = random_point(rng, 30);
            const Complex whole = extension_eval(parab(), *field, x);
            Complex parts = 0;
            for (const auto& cap : caps.caps) parts += extension_eval(parab(), cap_restrict(*field, cap), x);
            REQUIRE(std::abs(parts - whole) <= 1e-12 * std::max(1.0, std::abs(whole)) * 10);
        }
        for (const auto& cap : caps.caps) total_nodes += cap_restrict(*field, cap).size();
        REQUIRE(total_nodes == field->size());
    }
}

TEST_CASE("grouped extension matches per-cap restriction") {
    const auto f = random_phase_field(9, 3, unit_support(), {3, 4});
    const CapPartition caps = cap_partition(f.support(), 3);
    const Extension ext(parab(), f, caps);
    kernel::Workspace ws;
    std::vector<Complex> per(caps.caps.size());
    const Vec4 x(3, -2, 11, 5);
    const Complex total = ext.evaluate(x, per, ws);
    Complex acc = 0;
    for (std::size_t k = 0; k < caps.caps.size(); ++k) {
        const Complex direct = extension_eval(parab(), cap_restrict(f, caps.caps[k]), x);
        REQUIRE(std::abs(per[k] - direct) < 1e-14);
        acc += per[k];
    }
    REQUIRE(std::abs(acc - total) < 1e-13);
}

TEST_CASE("flat-line points sit in the leftmost caps") {
    for (std::int64_t N : {16, 64, 256}) {
        const auto f = flat_line_field(N);
        const int m = static_cast<int>(std::ceil(std::log2(std::sqrt(double(N)))));
        REQUIRE(f.size() == static_cast<std::size_t>(std::sqrt(double(N))));
        for (const auto& p : f.nodes()) REQUIRE(transversality::square_of(m, p[0], p[1]).i == 0);
        // Half-open caps: the point at s = 1 joins the point at s = 1 - 1/M in the top cap.
        const CapPartition caps = cap_partition(f.support(), m);
        std::vector<int> count(caps.caps.size(), 0);
        for (const auto& p : f.nodes()) ++count[caps.index_of(transversality::square_of(m, p[0], p[1]))];
        const std::int64_t K = std::int64_t{1} << m;
        CHECK(count[0] == 0);
        CHECK(count[K - 1] == 2);
    }
}

TEST_CASE("cap mass and refinement") {
    const auto f = const_field(unit_support(), {2, 4});
    const DyadicSquare cap{2, 1, 3};
    CHECK(cap_restrict(f, cap).mass() == Catch::Approx(1.0 / 16).epsilon(1e-15));
    CHECK(f.mass() == Catch::Approx(1.0).epsilon(1e-14));

    const auto r = quadrature_refine(f, 2);
    CHECK(r.size() == 4 * f.size());
    CHECK(std::abs(extension_eval(parab(), r, Vec4::Zero()) - extension_eval(parab(), f, Vec4::Zero())) < 1e-14);
    const CapPartition caps = cap_partition(f.support(), 2);
    for (const auto& c : caps.caps) REQUIRE(std::abs(cap_restrict(r, c).mass() - cap_restrict(f, c).mass()) < 1e-15);

    const auto coarse = const_field(unit_support(), {1, 4});
    const double a = 3.0;
    const double e0 = std::abs(extension_eval(parab(), coarse, Vec4(0, 0, a, 0)) - fresnel(a));
    const double e1 = std::abs(extension_eval(parab(), quadrature_refine(coarse, 2), Vec4(0, 0, a, 0)) - fresnel(a));
    CHECK(e1 <= 0.5 * e0);

    const auto atoms = AmplitudeField::atomic({Vec2(0.5, 0.5)}, {1.0});
    REQUIRE_THROWS_AS(quadrature_refine(atoms, 2), Error);
}

TEST_CASE("linearity, modulation covariance and conjugation") {
    std::mt19937_64 rng(33);
    const QuadratureSpec q{3, 4};
    const Amplitude g1 = random_phase(1, 3), g2 = [](double t, double s) { return Complex(t * s, 1 - t); };
    const Complex al(0.3, -1.2), be(2.0, 0.5);
    const auto f1 = AmplitudeField::continuous(g1, unit_support(), q);
    const auto f2 = AmplitudeField::continuous(g2, unit_support(), q);
    const auto f12 = AmplitudeField::continuous([&](double t, double s) { return al * g1(t, s) + be * g2(t, s); },
                                                unit_support(), q);
    for (int k = 0; k < 20; ++k) {
        const Vec4 x = random_point(rng, 20);
        const Complex lhs = extension_eval(parab(), f12, x);
        const Complex rhs = al * extension_eval(parab(), f1, x) + be * extension_eval(parab(), f2, x);
        REQUIRE(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)) * 10);

        const Vec4 y = random_point(rng, 5);
        const Complex mod = extension_eval(parab(), modulate(f1, parab(), y), x);
        REQUIRE(std::abs(mod - extension_eval(parab(), f1, x + y)) < 1e-10);
    }
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<Vec2> p;
    std::vector<Complex> a;
    for (int k = 0; k < 100; ++k) {
        p.emplace_back(u(rng), u(rng));
        a.emplace_back(u(rng) - 0.5, u(rng) - 0.5);
    }
    const auto atoms = AmplitudeField::atomic(p, a);
    for (int k = 0; k < 100; ++k) {
        const Vec4 x = random_point(rng, 50);
        REQUIRE(extension_eval(parab(), conjugate(atoms), -x) == std::conj(extension_eval(parab(), atoms, x)));
    }
}

TEST_CASE("atomic fields reject points outside the unit square") {
    REQUIRE_THROWS_AS(AmplitudeField::atomic({Vec2(1.5, 0.5)}, {1.0}), Error);
    REQUIRE_THROWS_AS(AmplitudeField::atomic({Vec2(0.5, 0.5)}, {}), Error);
}
