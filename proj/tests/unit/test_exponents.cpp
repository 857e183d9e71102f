#include "declab/common.hpp"
#include "declab/exponents.hpp"
#include "declab/harness.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace declab;
using namespace declab::exponents;

TEST_CASE("rational parsing") {
    REQUIRE(parse_rational("6") == Rational(6));
    REQUIRE(parse_rational("6.01") == Rational(601, 100));
    REQUIRE(parse_rational("-0.5") == Rational(-1, 2));
    REQUIRE(parse_rational("13/2") == Rational(13, 2));
    REQUIRE(parse_rational("1e-3") == Rational(1, 1000));
    REQUIRE(parse_rational("2.5E2") == Rational(250));
    REQUIRE_THROWS_AS(parse_rational("six"), Error);
    REQUIRE_THROWS_AS(parse_rational("1/0"), Error);
    REQUIRE_THROWS_AS(parse_rational("."), Error);
}

TEST_CASE("kappa and the candidate exponent at plug-in values") {
    REQUIRE(kappa(Rational(6)) == Rational(1, 2));
    REQUIRE(kappa(Rational(8)) == Rational(2, 3));
    REQUIRE(gamma_candidate(Rational(8)) == Rational(5, 8));
    REQUIRE(gamma_candidate(8.0) == 0.625);
    REQUIRE_THROWS_AS(gamma_candidate(Rational(6)), Error);
    REQUIRE_THROWS_AS(kappa(Rational(2)), Error);
    const Constants c6 = exponent_constants(Rational(6));
    REQUIRE(c6.kappa == Rational(1, 2));
    REQUIRE_FALSE(c6.gamma_candidate.has_value());
    REQUIRE(c6.kappa_regime);
    const Constants c3 = exponent_constants(Rational(3));
    REQUIRE_FALSE(c3.kappa_regime);
    REQUIRE_FALSE(c3.flag.empty());
    REQUIRE_FALSE(exponent_constants(Rational(4)).kappa_regime);
}

TEST_CASE("kappa interpolation identity holds exactly") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> num(201, 5000), den(1, 100);
    for (int k = 0; k < 500; ++k) {
        const Rational p(num(rng), den(rng));
        if (p <= 2) continue;
        REQUIRE(kappa_identity_holds(p));
    }
}

TEST_CASE("2(1 - kappa_p) < 1 exactly when p > 6") {
    for (int n = 1; n <= 400; ++n) {
        const Rational p = Rational(2) + Rational(n, 25);
        REQUIRE(contraction_holds(p) == (p > 6));
    }
    REQUIRE_FALSE(contraction_holds(Rational(6)));
    REQUIRE(contraction_holds(Rational(6) + Rational(1, 1000000)));
}

TEST_CASE("candidate exponent decreases to 1/3 as p decreases to 6") {
    double prev = 0;
    for (double p : {6.01, 6.1, 7.0, 8.0}) {
        const double g = gamma_candidate(p);
        REQUIRE(g > prev);
        prev = g;
    }
    REQUIRE(std::abs(gamma_candidate(6 + 1e-9) - 1.0 / 3) < 1e-9);
    const Rational q = gamma_candidate(Rational(6) + Rational(1, 1000000000)) - Rational(1, 3);
    REQUIRE(q > 0);
    REQUIRE(q < Rational(1, 1000000000));
}

TEST_CASE("gamma iteration tends to gamma + eps for large s") {
    const double g = gamma_iterate(8.0, 1e-3, 60, 0.7, 1.0);
    REQUIRE(std::abs(g - (0.7 + 1e-3)) < 1e-8);
    const double g0 = gamma_iterate(8.0, 0.0, 60, 0.4, 10.0);
    REQUIRE(std::abs(g0 - 0.4) < 1e-8);
}

TEST_CASE("gamma iteration is stable across evaluation orders and exact arithmetic") {
    const double direct = gamma_iterate(8.0, 1e-3, 10, 0.7, 1.0);
    const double reversed = gamma_iterate_reversed(8.0, 1e-3, 10, 0.7, 1.0);
    const double exact = to_double(gamma_iterate(Rational(8), Rational(1, 1000), 10, Rational(7, 10), Rational(1)));
    const double excess = 0.7 + gamma_excess(Big(8), Big("1e-3"), 10, Big("0.7"), Big(1)).convert_to<double>();
    REQUIRE(std::abs(direct - exact) < 1e-12);
    REQUIRE(std::abs(reversed - exact) < 1e-12);
    REQUIRE(std::abs(excess - exact) < 1e-12);
}

TEST_CASE("excess form agrees with the direct formula in exact arithmetic") {
    for (int s : {2, 3, 7, 20, 40})
        for (const Rational p : {Rational(61, 10), Rational(13, 2), Rational(8), Rational(12)}) {
            const Rational g(1, 2), e(1, 100), B(10);
            const Rational exact = gamma_iterate(p, e, s, g, B) - g;
            const Big ex = gamma_excess(Big(to_double(p)), Big(to_double(e)), s, Big(to_double(g)), Big(to_double(B)));
            const double scale = std::max(1e-30, std::abs(to_double(exact)));
            REQUIRE(std::abs(ex.convert_to<double>() - to_double(exact)) < 1e-12 * scale + 1e-15);
        }
}

TEST_CASE("gamma iteration is increasing in eps") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> P(6.05, 20), G(0, 1), E(0, 0.1);
    for (int k = 0; k < 200; ++k) {
        const double p = P(rng), g = G(rng), e = E(rng);
        const int s = 2 + k % 40;
        REQUIRE(gamma_iterate(p, e + 1e-3, s, g, 10) > gamma_iterate(p, e, s, g, 10));
    }
}

TEST_CASE("gamma iteration rejects p = 6 and small s") {
    try {
        gamma_iterate(6.0, 1e-3, 10, 0.5, 1);
        FAIL("expected an error");
    } catch (const Error& e) {
        REQUIRE(std::string(e.what()).find("limit") != std::string::npos);
    }
    REQUIRE_THROWS_AS(gamma_iterate(Rational(6), Rational(0), 10, Rational(1, 2), Rational(1)), Error);
    REQUIRE_THROWS_AS(gamma_iterate(8.0, 1e-3, 1, 0.5, 1), Error);
    REQUIRE_THROWS_AS(gamma_iterate(5.0, 1e-3, 5, 0.5, 1), Error);
}

TEST_CASE("contradiction closes at p = 6.5 with eps(nu) = nu for O-constants up to 10") {
    for (double B : {1.0, 5.0, 10.0}) {
        const auto r = contradiction_check(6.5, B, EpsModel::linear());
        REQUIRE(r.closes);
        REQUIRE(r.witness->slack > 0);
        REQUIRE(r.witness->log10_inv_nu >= 1);
        REQUIRE(r.witness->gamma_out + r.witness->eps_nu < r.witness->gamma_in);
        REQUIRE(Big(0.5) - 1 / Big(6.5) + r.witness->eps_nu < Big(1) - 4 / Big(6.5));
    }
}

TEST_CASE("contradiction closes at p = 8 with s <= 20") {
    const auto r = contradiction_check(8.0, 10.0, EpsModel::linear());
    REQUIRE(r.closes);
    REQUIRE(r.witness->s <= 20);
}

TEST_CASE("contradiction does not close for a constant eps model near p = 6") {
    const auto r = contradiction_check(6.5, 10.0, EpsModel::constant(0.2));
    REQUIRE_FALSE(r.closes);
    REQUIRE(r.binding.find("endpoint") == 0);
    REQUIRE(contradiction_check(12.0, 1.0, EpsModel::constant(0.2)).binding.find("endpoint") == std::string::npos);
}

TEST_CASE("contradiction closes across the p grid and O-constants with both eps models") {
    for (double p : {6.1, 6.5, 7.0, 8.0, 12.0})
        for (double B : {1.0, 10.0, 100.0}) {
            for (const auto& m : {EpsModel::linear(), EpsModel::logarithmic(10.0, p)}) {
                const auto r = contradiction_check(p, B, m);
                REQUIRE(r.closes);
                REQUIRE(r.witness->slack > 0);
            }
            REQUIRE(contradiction_check(p, B, EpsModel::linear(), 1e-6).closes);
        }
}

TEST_CASE("primary search bounds alone do not close near p = 6 with a large O-constant") {
    const auto r = contradiction_check(6.1, 100.0, EpsModel::linear(), 1e-3, SearchBounds{}, std::nullopt);
    REQUIRE_FALSE(r.closes);
    REQUIRE_FALSE(r.binding.empty());
    const auto e = contradiction_check(6.1, 100.0, EpsModel::linear());
    REQUIRE(e.closes);
    REQUIRE(e.extended);
}

TEST_CASE("custom eps model is solved by bisection") {
    const auto m = EpsModel::custom([](const Big& L) { return 1 / (L * L); }, "1/L^2");
    const auto L = m.solve(Big("1e-6"), Big("1e300"));
    REQUIRE(L.has_value());
    REQUIRE(m.at(*L) < Big("1e-6"));
    REQUIRE(m.at(*L) > Big("0.99e-6"));
    REQUIRE(contradiction_check(7.0, 10.0, m).closes);
}

TEST_CASE("contradiction check validates its inputs") {
    REQUIRE_THROWS_AS(contradiction_check(6.0, 1, EpsModel::linear()), Error);
    REQUIRE_THROWS_AS(contradiction_check(5.0, 1, EpsModel::linear()), Error);
    REQUIRE_THROWS_AS(contradiction_check(7.0, -1, EpsModel::linear()), Error);
    REQUIRE_THROWS_AS(contradiction_check(7.0, 1, EpsModel::linear(), 0.0), Error);
}

TEST_CASE("quadratic-reduction recursion") {
    const auto one = scale_recursion(Rational(1, 3), 1);
    REQUIRE(one.size() == 1);
    REQUIRE(one[0] == Rational(1, 9));
    const auto seq = scale_recursion(Rational(1, 3), 80);
    for (std::size_t k = 1; k < seq.size(); ++k) {
        REQUIRE(seq[k] > seq[k - 1]);
        REQUIRE(seq[k] < Rational(1, 3));
    }
    REQUIRE(std::abs(to_double(seq.back()) - 1.0 / 3) < 1e-10);
    const auto d = scale_recursion(0.7, 70);
    REQUIRE(d.front() == Catch::Approx(0.7 / 3));
    REQUIRE(std::abs(d.back() - 0.7) < 1e-10);
    for (std::size_t k = 0; k < d.size(); ++k) REQUIRE(d[k] == Catch::Approx(to_double(scale_recursion(Rational(7, 10), 70)[k])).epsilon(1e-14));
    REQUIRE_THROWS_AS(scale_recursion(Rational(1), 0), Error);
    REQUIRE_THROWS_AS(scale_recursion(-1.0, 3), Error);
}

TEST_CASE("linear-from-bilinear bound") {
    std::vector<TableEntry> cube;
    for (double M = 1; M <= 4096; M *= 2) cube.push_back({M, std::cbrt(M)});
    for (double N : {64.0, 1024.0, 4096.0})
        REQUIRE(bg_bound(cube, N, 6, 0, 1) == Catch::Approx(std::cbrt(N)).epsilon(1e-12));
    std::vector<TableEntry> flat;
    for (double M = 1; M <= 4096; M *= 4) flat.push_back({M, 1.0});
    REQUIRE(bg_bound(flat, 4096, 6, 0, 1) == Catch::Approx(std::pow(4096.0, 0.5 - 1.0 / 6)).epsilon(1e-12));
    REQUIRE(bg_bound(flat, 4096, 6, 0.1, 2) == Catch::Approx(2 * std::pow(4096.0, 0.1) * std::pow(4096.0, 1.0 / 3)).epsilon(1e-12));
    REQUIRE_THROWS_AS(bg_bound({}, 16, 6, 0, 1), Error);
    REQUIRE_THROWS_AS(bg_bound({{2, 1}, {64, 2}}, 16, 6, 0, 1), Error);
    REQUIRE_THROWS_AS(bg_bound({{1, 1}, {8, 2}}, 16, 6, 0, 1), Error);
}

TEST_CASE("one-step recursion simulator") {
    const std::vector<TableEntry> t{{1, 1.0}, {16, 1.2}, {64, 1.3}};
    const Simulation sim = bg_simulate(t, 64, 6, 1.0 / 16, 2.0);
    REQUIRE(sim.n == 2);
    REQUIRE(std::pow(sim.K, sim.n) == Catch::Approx(8.0));
    REQUIRE(sim.steps.size() == 2);
    REQUIRE(sim.steps[0].M == Catch::Approx(64));
    REQUIRE(sim.steps[0].d_multi == Catch::Approx(1.3));
    REQUIRE(sim.steps[1].M == Catch::Approx(64 / (sim.K * sim.K)));
    REQUIRE(sim.head == Catch::Approx(std::pow(2.0 * std::pow(sim.K, 4), 2)));
    double total = sim.head;
    for (const auto& s : sim.steps) total += s.term;
    REQUIRE(sim.bound == Catch::Approx(std::pow(total, 1.0 / 6)));
    REQUIRE(sim.bound >= std::pow(64.0, 1.0 / 3));
    REQUIRE_THROWS_AS(bg_simulate(t, 64, 6, 0.5, 2.0), Error);
}

TEST_CASE("simulator fed with measured bilinear ratios bounds the measured linear ratio") {
    harness::RunSpec run;
    run.sampler.budget = 20000;
    harness::ScenarioSpec pair;
    pair.kind = harness::Kind::bilinear_pair;
    pair.nu = 1.0 / 16;
    std::vector<TableEntry> table{{1, 1.0}};
    for (std::int64_t M : {16, 64}) table.push_back({static_cast<double>(M), harness::run_scenario(pair, M, 6, run).ratio_lp});
    const auto linear = harness::run_scenario(harness::ScenarioSpec{harness::Kind::indicator}, 64, 6, run);
    const Simulation sim = bg_simulate(table, 64, 6, 1.0 / 16, 1.0);
    REQUIRE(sim.bound >= linear.ratio_lp);
}
