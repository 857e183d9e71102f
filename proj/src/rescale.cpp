#include "declab/rescale.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace declab::rescale {

Square Square::from_dyadic(const DyadicSquare& d) {
    const double h = d.side();
    return {static_cast<double>(d.i) * h, static_cast<double>(d.j) * h, h};
}

bool Square::contains(double t, double s, double tol) const {
    return t >= a - tol && t <= a + delta + tol && s >= b - tol && s <= b + delta + tol;
}

Square Square::compose(const Square& inner) const {
    return {a + delta * inner.a, b + delta * inner.b, delta * inner.delta};
}

Vec4 ShearMap::apply(const Vec4& x) const {
    const auto& c = A.a;
    const double a = R.a, b = R.b, d = R.delta;
    return {d * (x[0] + x[2] * (2 * a * c[0] + 2 * b * c[1]) + x[3] * (2 * a * c[3] + 2 * b * c[4])),
            d * (x[1] + x[2] * (2 * a * c[1] + 2 * b * c[2]) + x[3] * (2 * a * c[4] + 2 * b * c[5])),
            d * d * x[2], d * d * x[3]};
}

double ShearMap::phase_offset(const Vec4& x) const {
    const auto& c = A.a;
    const double a = R.a, b = R.b;
    return x[0] * a + x[1] * b + x[2] * (c[0] * a * a + 2 * c[1] * a * b + c[2] * b * b) +
           x[3] * (c[3] * a * a + 2 * c[4] * a * b + c[5] * b * b);
}

Vec4 shear_point(const ShearMap& map, const Vec4& x) { return map.apply(x); }

namespace {

std::vector<DyadicSquare> rescale_support(const std::vector<DyadicSquare>& support, const Square& R) {
    const double L = -std::log2(R.delta);
    const int level = static_cast<int>(std::lround(L));
    const bool dyadic = level >= 0 && std::ldexp(1.0, -level) == R.delta && std::fmod(R.a, R.delta) == 0.0 &&
                        std::fmod(R.b, R.delta) == 0.0;
    if (!dyadic) return fields::unit_support();
    const auto i0 = static_cast<std::int64_t>(R.a / R.delta), j0 = static_cast<std::int64_t>(R.b / R.delta);
    std::vector<DyadicSquare> out;
    for (const auto& d : support) {
        if (d.level < level) return fields::unit_support();
        const int shift = d.level - level;
        if ((d.i >> shift) != i0 || (d.j >> shift) != j0) return fields::unit_support();
        out.push_back({shift, d.i - (i0 << shift), d.j - (j0 << shift)});
    }
    return out;
}

}  // namespace

AmplitudeField rescale_field(const AmplitudeField& field, const Square& R) {
    require(R.delta > 0.0 && R.delta <= 1.0 && R.a >= 0.0 && R.b >= 0.0 && R.a + R.delta <= 1.0 &&
                R.b + R.delta <= 1.0,
            "rescale_field: square must lie in [0,1]^2");
    const double tol = 1e-12 * R.delta;
    std::vector<Vec2> nodes;
    nodes.reserve(field.size());
    for (const auto& p : field.nodes()) {
        if (!R.contains(p[0], p[1], tol))
            fail(ErrorCode::invalid_argument, "rescale_field: field is not supported in the rescaling square");
        nodes.emplace_back(std::clamp((p[0] - R.a) / R.delta, 0.0, 1.0), std::clamp((p[1] - R.b) / R.delta, 0.0, 1.0));
    }
    const double inv = 1.0 / (R.delta * R.delta);
    std::vector<double> weights = field.weights();
    fields::Amplitude g;
    if (field.mode() == fields::Mode::continuous) {
        for (double& w : weights) w *= inv;
        g = [f = field.amplitude(), R](double t, double s) { return f(R.a + R.delta * t, R.b + R.delta * s); };
    }
    return fields::scaled_copy(field, std::move(nodes), std::move(weights), Complex(inv, 0.0), std::move(g),
                               rescale_support(field.support(), R));
}

double rescaling_residual(const QuadCoeffs& A, const AmplitudeField& field, const Square& R, int trials,
                          std::uint64_t seed) {
    require(trials >= 1, "rescaling_residual: trials must be positive");
    const geometry::Surface S = geometry::quad_surface(A);
    const AmplitudeField h = rescale_field(field, R);
    const fields::Extension ER(S, field), E1(S, h);
    const ShearMap map{A, R};
    const double radius = 1.0 / (R.delta * R.delta);
    const double d2 = R.delta * R.delta;
    kernel::Workspace ws;
    double worst = 0.0;
    for (int k = 0; k < trials; ++k) {
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
        std::normal_distribution<double> g;
        std::uniform_real_distribution<double> u;
        Vec4 x(g(rng), g(rng), g(rng), g(rng));
        x *= radius * u(rng) / x.norm();
        const double lhs = std::abs(ER.evaluate(x, ws));
        const double rhs = d2 * std::abs(E1.evaluate(map.apply(x), ws));
        worst = std::max(worst, std::abs(lhs - rhs) / (rhs + 1e-30));
    }
    return worst;
}

std::vector<std::pair<DyadicSquare, DyadicSquare>> cap_correspondence(const DyadicSquare& R, int cap_level) {
    require(cap_level >= R.level, "cap_correspondence: caps must be no larger than the square");
    const int shift = cap_level - R.level;
    const Square sq = Square::from_dyadic(R);
    std::vector<std::pair<DyadicSquare, DyadicSquare>> out;
    for (const auto& img : transversality::all_squares(shift)) {
        const DyadicSquare cap{cap_level, (R.i << shift) + img.i, (R.j << shift) + img.j};
        // Image computed geometrically from the cap's center through eta^{-1}.
        const Square c = Square::from_dyadic(cap);
        const double tc = (c.a + 0.5 * c.delta - sq.a) / sq.delta, sc = (c.b + 0.5 * c.delta - sq.b) / sq.delta;
        out.emplace_back(cap, transversality::square_of(shift, tc, sc));
    }
    return out;
}

}  // namespace declab::rescale
