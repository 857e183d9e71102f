#include "declab/fields.hpp"
#include "declab/norms.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <random>

using namespace declab;
using namespace declab::norms;

namespace {

Complex phase(double x) { return std::polar(1.0, 2.0 * std::numbers::pi * x); }

SamplerSpec mc(std::uint64_t budget, std::uint64_t seed = 42) {
    SamplerSpec s;
    s.budget = budget;
    s.seed = seed;
    return s;
}

double random_field_value(const Vec4& x, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Complex acc = 0;
    for (int k = 0; k < 6; ++k) {
        const Vec4 v(g(rng), g(rng), g(rng), g(rng));
        acc += Complex(g(rng), g(rng)) * phase(x.dot(v) * 10.0);
    }
    return std::abs(acc);
}

}  // namespace

TEST_CASE("weight_mass scales as R^4") {
    BallSpec b;
    const double z1 = weight_mass(b);
    for (double R : {0.5, 3.0, 17.0, 256.0}) {
        b.radius = R;
        REQUIRE(std::abs(weight_mass(b) / (std::pow(R, 4) * z1) - 1.0) < 1e-10);
    }
}

TEST_CASE("weight_mass decreases in E") {
    BallSpec b;
    double prev = std::numeric_limits<double>::infinity();
    for (double E : {5.0, 6.0, 10.0, 20.0, 50.0, 100.0, 200.0}) {
        b.E = E;
        const double z = weight_mass(b);
        REQUIRE(z < prev);
        prev = z;
    }
}

TEST_CASE("weight_mass agrees with the closed form") {
    for (int dim : {2, 4})
        for (double E : {5.0, 12.0, 100.0})
            for (double T : {0.5, 4.0}) {
                BallSpec b;
                b.dim = dim;
                b.E = E;
                b.T = T;
                b.radius = 2.5;
                REQUIRE(std::abs(weight_mass(b) / weight_mass_closed_form(b) - 1.0) < 1e-11);
            }
}

TEST_CASE("weight_mass matches an independent Gaussian-proposal Monte Carlo") {
    BallSpec b;
    const double z = weight_mass(b);
    const double sigma = 0.04;
    const double norm = std::pow(2.0 * std::numbers::pi * sigma * sigma, 2.0);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, sigma);
    const int n = 2000000;
    double s = 0, ss = 0;
    for (int i = 0; i < n; ++i) {
        const Vec4 x(g(rng), g(rng), g(rng), g(rng));
        const double r2 = x.squaredNorm();
        double v = 0;
        if (std::sqrt(r2) <= b.T * b.radius) v = weight(b, x) / (std::exp(-0.5 * r2 / (sigma * sigma)) / norm);
        s += v;
        ss += v * v;
    }
    const double mean = s / n;
    const double se = std::sqrt((ss / n - mean * mean) / (n - 1));
    REQUIRE(std::abs(mean - z) < 3.0 * se);
    REQUIRE(se / z < 0.01);
}

TEST_CASE("E <= dimension is rejected") {
    BallSpec b;
    b.E = 4.0;
    REQUIRE_THROWS_AS(weight_mass(b), Error);
    b.dim = 2;
    b.E = 1.5;
    REQUIRE_THROWS_AS(validate(b), Error);
}

TEST_CASE("tail fraction is negligible at E = 100, T = 4") {
    BallSpec b;
    REQUIRE(tail_fraction(b) < 1e-60);
    b.E = 8;
    b.T = 1;
    REQUIRE(tail_fraction(b) > 1e-3);
}

TEST_CASE("unimodular functions give Z^{1/p} with zero stderr") {
    BallSpec b;
    b.radius = 4.0;
    const double z = weight_mass(b);
    for (double p : {1.0, 2.0, 6.0}) {
        const NormEstimate e = lp_norm([](const Vec4&) { return Complex(1, 0); }, b, p, mc(5000));
        REQUIRE(std::abs(e.value / std::pow(z, 1.0 / p) - 1.0) < 1e-12);
        REQUIRE(e.stderr_ == 0.0);
        REQUIRE(e.samples == 5000);
    }
    const Vec4 v(0.3, -1.1, 2.0, 0.7);
    const NormEstimate w = lp_norm([&](const Vec4& x) { return phase(x.dot(v)); }, b, 6.0, mc(5000));
    REQUIRE(std::abs(w.value / std::pow(z, 1.0 / 6.0) - 1.0) < 1e-12);
}

TEST_CASE("zero function has zero norm") {
    BallSpec b;
    const NormEstimate e = lp_norm([](const Vec4&) { return Complex(0, 0); }, b, 6.0, mc(2000));
    REQUIRE(e.value == 0.0);
    REQUIRE(e.stderr_ == 0.0);
}

TEST_CASE("budget below 1000 and p below 1 are rejected") {
    BallSpec b;
    auto F = [](const Vec4&) { return Complex(1, 0); };
    REQUIRE_THROWS_AS(lp_norm(F, b, 6.0, mc(999)), Error);
    REQUIRE_THROWS_AS(lp_norm(F, b, 0.5, mc(2000)), Error);
}

TEST_CASE("samples follow the weight: radial moments") {
    BallSpec b;
    b.radius = 2.0;
    // E|x|^k under w_B/Z = R^k B(d+k, E-d-k)/B(d, E-d) up to truncation.
    const double k = 2.0;
    const double expected = std::pow(b.radius, k) * std::beta(4.0 + k, b.E - 4.0 - k) / std::beta(4.0, b.E - 4.0);
    SamplerSpec s = mc(200000);
    const SampleStats st = integrate(b, s, {Reduce::mean}, [&]() -> Integrand {
        return [&](const Vec4& x, std::span<double> out) { out[0] = (x - b.center).squaredNorm(); };
    });
    REQUIRE(std::abs(st.mean[0] - expected) < 4.0 * st.se[0]);
}

TEST_CASE("lattice strategy approximates smooth integrals") {
    BallSpec b;
    b.dim = 2;
    b.E = 20;
    b.radius = 3.0;
    SamplerSpec s;
    s.strategy = Strategy::lattice;
    s.budget = 400000;
    const NormEstimate e = lp_norm([](const Vec4&) { return Complex(1, 0); }, b, 1.0, s);
    REQUIRE(e.strategy == Strategy::lattice);
    REQUIRE(e.spacing > 0.0);
    REQUIRE(e.stderr_ == 0.0);
    REQUIRE(std::abs(e.value / weight_mass(b) - 1.0) < 5e-3);
    const NormEstimate m = lp_norm([](const Vec4& x) { return Complex(std::cos(x[0]), 0); }, b, 2.0, s);
    s.strategy = Strategy::mc;
    s.budget = 100000;
    const NormEstimate r = lp_norm([](const Vec4& x) { return Complex(std::cos(x[0]), 0); }, b, 2.0, s);
    REQUIRE(std::abs(m.value - r.value) < 4.0 * r.stderr_ + 5e-3 * r.value);
}

TEST_CASE("batch of one equals lp_norm bit for bit") {
    BallSpec b;
    b.center = Vec4(1, 2, -3, 0.5);
    b.radius = 5;
    auto F = [](const Vec4& x) { return Complex(random_field_value(x, 11), 0); };
    const NormEstimate a = lp_norm(F, b, 6.0, mc(10000, 99));
    const NormEstimate c = lp_norm_batch({F}, b, 6.0, mc(10000, 99)).front();
    REQUIRE(a.value == c.value);
    REQUIRE(a.stderr_ == c.stderr_);
}

TEST_CASE("estimates are deterministic across runs and thread counts") {
    BallSpec b;
    b.radius = 3;
    auto F = [](const Vec4& x) { return Complex(random_field_value(x, 5), 0); };
    SamplerSpec s = mc(30000, 1234);
    s.threads = 1;
    const NormEstimate a = lp_norm(F, b, 4.0, s);
    const NormEstimate a2 = lp_norm(F, b, 4.0, s);
    s.threads = 3;
    const NormEstimate c = lp_norm(F, b, 4.0, s);
    REQUIRE(a.value == a2.value);
    REQUIRE(a.value == c.value);
    REQUIRE(a.stderr_ == c.stderr_);
    s.seed = 1235;
    REQUIRE(lp_norm(F, b, 4.0, s).value != a.value);
}

TEST_CASE("doubling the budget moves the estimate within 3 stderr") {
    BallSpec b;
    b.radius = 2;
    int ok = 0;
    for (int trial = 0; trial < 100; ++trial) {
        auto F = [trial](const Vec4& x) { return Complex(random_field_value(x, 1000 + trial), 0); };
        const NormEstimate a = lp_norm(F, b, 6.0, mc(2048, 77 + trial));
        const NormEstimate c = lp_norm(F, b, 6.0, mc(4096, 5077 + trial));
        if (std::abs(a.value - c.value) <= 3.0 * std::hypot(a.stderr_, c.stderr_)) ++ok;
    }
    REQUIRE(ok >= 95);
}

TEST_CASE("normalized norms are nondecreasing in p") {
    BallSpec b;
    b.radius = 2;
    const double z = weight_mass(b);
    for (int trial = 0; trial < 10; ++trial) {
        auto F = [trial](const Vec4& x) { return Complex(random_field_value(x, 300 + trial), 0); };
        double prev = 0;
        for (double p : {1.0, 1.5, 2.0, 4.0, 6.0, 12.0}) {
            const double v = lp_norm(F, b, p, mc(8000, 5)).value / std::pow(z, 1.0 / p);
            REQUIRE(v >= prev * (1 - 1e-12));
            prev = v;
        }
        const NormEstimate inf = lp_norm(F, b, std::numeric_limits<double>::infinity(), mc(8000, 5));
        REQUIRE(inf.approximate);
        REQUIRE(inf.value >= prev * (1 - 1e-12));
    }
}

TEST_CASE("non-finite values poison the estimate and carry the point") {
    BallSpec b;
    auto F = [](const Vec4& x) {
        return x[0] > 0.05 ? Complex(std::numeric_limits<double>::quiet_NaN(), 0) : Complex(1, 0);
    };
    try {
        lp_norm(F, b, 6.0, mc(20000));
        FAIL("expected poison");
    } catch (const NumericPoisonError& e) {
        REQUIRE(e.code() == ErrorCode::numeric_poison);
        REQUIRE(e.point()[0] > 0.05);
    }
}

TEST_CASE("jackknife error of a ratio tracks its spread across seeds") {
    BallSpec b;
    b.radius = 2;
    auto factory = [&]() -> Integrand {
        return [](const Vec4& x, std::span<double> out) {
            const double a = random_field_value(x, 3), c = random_field_value(x, 4);
            out[0] = std::pow(a, 4);
            out[1] = std::pow(c, 4);
        };
    };
    std::vector<double> ratios;
    double jk = 0;
    for (int seed = 0; seed < 30; ++seed) {
        const SampleStats st = integrate(b, mc(8192, seed), {Reduce::mean, Reduce::mean}, factory);
        ratios.push_back(st.mean[0] / st.mean[1]);
        jk += st.jackknife_se([](std::span<const double> m) { return m[0] / m[1]; });
    }
    jk /= 30;
    double mean = 0, var = 0;
    for (double r : ratios) mean += r / 30;
    for (double r : ratios) var += (r - mean) * (r - mean) / 29;
    const double sd = std::sqrt(var);
    REQUIRE(jk > 0.5 * sd);
    REQUIRE(jk < 2.0 * sd);
}

TEST_CASE("shared samples: cap pieces sum to the whole and l2 almost-orthogonality holds") {
    using namespace declab::fields;
    const Surface S = geometry::quad_surface(geometry::QuadCoeffs{{1, 0, 0, 0, 0, 1}});
    for (int N : {16, 64}) {
        const int m = N == 16 ? 2 : 3;
        const AmplitudeField g = random_phase_field(2024 + N, m + 1, unit_support(), QuadratureSpec{4, 8});
        const CapPartition caps = cap_partition(g.support(), m);
        const Extension ext(S, g, caps);
        const std::size_t K = caps.caps.size();
        BallSpec b;
        b.radius = std::sqrt(static_cast<double>(N));
        std::vector<Reduce> red(K + 1, Reduce::mean);
        double worst_sum = 0;
        SamplerSpec s = mc(20000, 8);
        s.threads = 1;
        const SampleStats st = integrate(b, s, red, [&]() -> Integrand {
            auto ws = std::make_shared<kernel::Workspace>();
            auto per = std::make_shared<std::vector<Complex>>(K);
            return [&, ws, per](const Vec4& x, std::span<double> out) {
                const Complex total = ext.evaluate(x, *per, *ws);
                Complex sum = 0;
                for (std::size_t k = 0; k < K; ++k) {
                    sum += (*per)[k];
                    out[k + 1] = std::norm((*per)[k]);
                }
                worst_sum = std::max(worst_sum, std::abs(sum - total) / std::max(std::abs(total), 1e-300));
                out[0] = std::norm(total);
            };
        });
        REQUIRE(worst_sum < 1e-12);
        double rhs = 0;
        for (std::size_t k = 1; k <= K; ++k) rhs += st.mean[k];
        const double ratio = std::sqrt(st.mean[0] / rhs);
        REQUIRE(ratio > 0.5);
        REQUIRE(ratio < 2.0);
    }
}
