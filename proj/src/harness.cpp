#include "declab/harness.hpp"

#include <json.hpp>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>

namespace declab::harness {

using fields::CapPartition;
using fields::Extension;
using norms::Reduce;

double DecouplingReport::extra(const std::string& key) const {
    for (const auto& [k, v] : extras)
        if (k == key) return v;
    fail(ErrorCode::invalid_argument, "report has no extra '" + key + "'");
}

bool DecouplingReport::has_extra(const std::string& key) const {
    return std::any_of(extras.begin(), extras.end(), [&](const auto& e) { return e.first == key; });
}

double DecouplingReport::trivial_bound() const {
    return std::pow(static_cast<double>(N), 1.0 - 1.0 / p);
}

int cap_level_for(std::int64_t N) {
    require(N >= 1, "N must be positive");
    int m = 0;
    // Smallest m with 4^m >= N, i.e. 2^-m <= N^{-1/2}.
    while ((std::int64_t{1} << (2 * m)) < N) ++m;
    return m;
}

double phase_gradient_bound(const Surface& surface) {
    const auto dom = surface.domain();
    double g = 0;
    const int n = 16;
    for (int a = 0; a <= n; ++a)
        for (int b = 0; b <= n; ++b) {
            const double t = dom.t.lo + dom.t.length() * a / n, s = dom.s.lo + dom.s.length() * b / n;
            const auto J = surface.jet(t, s);
            g = std::max({g, J.dt.norm(), J.ds.norm()});
        }
    return 1.1 * g;
}

namespace {

using Clock = std::chrono::steady_clock;

/// Extension prepared at several quadrature levels; each evaluation picks the coarsest level
/// whose cells carry at most `cycles` phase cycles at |x|.
class Leveled {
public:
    void add(double limit, Extension e) {
        limits_.push_back(limit);
        ext_.push_back(std::move(e));
    }
    std::size_t groups() const { return ext_.front().cap_count(); }
    bool empty() const { return ext_.empty(); }

    Complex evaluate(const Vec4& x, std::span<Complex> per, kernel::Workspace& ws, bool& beyond) const {
        const double r = x.norm();
        std::size_t k = 0;
        while (k + 1 < ext_.size() && r > limits_[k]) ++k;
        beyond = beyond || r > limits_[k];
        return ext_[k].evaluate(x, per, ws);
    }

private:
    std::vector<double> limits_;
    std::vector<Extension> ext_;
};

constexpr std::size_t kMaxNodes = std::size_t{1} << 22;

double resolution_radius(const norms::BallSpec& ball, double q) {
    const double d = ball.dim;
    const double v = boost::math::ibetac_inv(d, ball.E - d, q);
    const double r = std::min(ball.T * ball.radius, ball.radius * v / (1.0 - v));
    return (ball.dim == 4 ? ball.center.norm() : ball.center.head<2>().norm()) + r;
}

/// Levels base, base+1, ... until `rmax` is covered or the node budget is reached.
/// `build(level)` returns the extension at that level and its node count.
template <class Build>
Leveled make_leveled(Build build, int base, double gradient, double rmax, double cycles, bool single) {
    Leveled out;
    for (int L = base;; ++L) {
        Extension e = build(L);
        const std::size_t n = e.size();
        if (single) {
            out.add(std::numeric_limits<double>::infinity(), std::move(e));
            break;
        }
        const double limit = cycles * std::ldexp(1.0, L) / gradient;
        out.add(limit, std::move(e));
        if (limit >= rmax || 4 * n > kMaxNodes || L >= 20) break;
    }
    return out;
}

norms::BallSpec ball_for(const RunSpec& run, double radius, int dim = 4) {
    norms::BallSpec b;
    b.center = run.center;
    b.radius = radius;
    b.E = run.E;
    b.T = run.T;
    b.dim = dim;
    if (dim == 2) b.center.tail<2>().setZero();
    return b;
}

/// Distinct caps (level m) holding nodes of the field, sorted by (i, j).
CapPartition occupied_caps(const AmplitudeField& f, int m) {
    std::set<std::pair<std::int64_t, std::int64_t>> seen;
    for (const auto& p : f.nodes()) {
        const auto d = transversality::square_of(m, p[0], p[1]);
        seen.insert({d.i, d.j});
    }
    CapPartition c;
    c.level = m;
    for (const auto& [i, j] : seen) c.caps.push_back({m, i, j});
    return c;
}

AmplitudeField at_level(const AmplitudeField& f, int level, int order) {
    if (f.mode() == fields::Mode::atomic) return f;
    return AmplitudeField::continuous(f.amplitude(), f.support(), fields::QuadratureSpec{level, order});
}

int base_level(const AmplitudeField& f, int m) {
    return f.mode() == fields::Mode::atomic ? 0 : std::max(m, f.quadrature().cell_level);
}

Leveled surface_leveled(const Surface& S, const AmplitudeField& f, const CapPartition& caps, double gradient,
                        double rmax, const RunSpec& run) {
    const bool single = f.mode() == fields::Mode::atomic;
    return make_leveled([&](int L) { return Extension(S, at_level(f, L, run.order), caps); },
                        base_level(f, caps.level), gradient, rmax, run.cycles_per_cell, single);
}

void check_p(double p, bool allow_inf = false) {
    require(p >= 1.0 && (std::isfinite(p) || allow_inf), "exponent p must be a finite number >= 1");
}

double powabs(const Complex& z, double p) { return std::pow(std::norm(z), 0.5 * p); }

void stamp(DecouplingReport& r, const RunSpec& run, Clock::time_point t0, const norms::SampleStats& st,
           std::size_t flag_channel) {
    r.seed = run.sampler.seed;
    r.budget = run.sampler.budget;
    r.under_resolved = static_cast<std::uint64_t>(std::llround(st.mean[flag_channel] * static_cast<double>(st.samples)));
    if (run.timing) r.runtime_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Buffers {
    kernel::Workspace ws;
    std::vector<Complex> a, b;
};

/// LHS channel 0, cap channels [first, first + K): the linear report.
void fill_linear(DecouplingReport& r, const norms::SampleStats& st, double p, double tail, std::size_t first,
                 std::size_t K) {
    const double Z = st.mass;
    r.lhs = norms::estimate_from(st, 0, p, tail);
    double sum = 0, sq = 0;
    r.cap_norms.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        r.cap_norms[k] = std::pow(Z * st.mean[first + k], 1.0 / p);
        sum += st.mean[first + k];
        sq += r.cap_norms[k] * r.cap_norms[k];
    }
    r.caps = K;
    r.rhs_lp = std::pow(Z * sum, 1.0 / p);
    r.rhs_l2 = std::sqrt(sq);
    r.ratio_lp = r.rhs_lp > 0 ? r.lhs.value / r.rhs_lp : 0.0;
    r.ratio_l2 = r.rhs_l2 > 0 ? r.lhs.value / r.rhs_l2 : 0.0;
    r.ratio_lp_se = st.jackknife_se([=](std::span<const double> m) {
        double s = 0;
        for (std::size_t k = 0; k < K; ++k) s += m[first + k];
        return s > 0 ? std::pow(m[0] / s, 1.0 / p) : 0.0;
    });
    r.ratio_l2_se = st.jackknife_se([=](std::span<const double> m) {
        double s = 0;
        for (std::size_t k = 0; k < K; ++k) s += std::pow(Z * m[first + k], 2.0 / p);
        return s > 0 ? std::pow(Z * m[0], 1.0 / p) / std::sqrt(s) : 0.0;
    });
}

}  // namespace

DecouplingReport measure_linear(const Surface& surface, const AmplitudeField& field, std::int64_t N, double p,
                                const RunSpec& run) {
    const auto t0 = Clock::now();
    check_p(p);
    require(!field.empty(), "measure_linear: the field has no nodes (all caps empty)");
    const int m = cap_level_for(N);
    const CapPartition caps = occupied_caps(field, m);
    const norms::BallSpec ball = ball_for(run, static_cast<double>(N));
    const double G = phase_gradient_bound(surface);
    const Leveled lev = surface_leveled(surface, field, caps, G, resolution_radius(ball, run.resolution_quantile), run);
    const std::size_t K = caps.caps.size();
    const std::vector<Reduce> reduce(K + 2, Reduce::mean);
    const auto st = norms::integrate(ball, run.sampler, reduce, [&]() -> norms::Integrand {
        auto buf = std::make_shared<Buffers>();
        buf->a.resize(K);
        return [&lev, buf, K, p](const Vec4& x, std::span<double> out) {
            bool beyond = false;
            const Complex tot = lev.evaluate(x, buf->a, buf->ws, beyond);
            out[0] = powabs(tot, p);
            for (std::size_t k = 0; k < K; ++k) out[1 + k] = powabs(buf->a[k], p);
            out[K + 1] = beyond ? 1.0 : 0.0;
        };
    });
    DecouplingReport r;
    r.kind = "linear";
    r.N = N;
    r.p = p;
    r.cap_level = m;
    fill_linear(r, st, p, norms::tail_fraction(ball), 1, K);
    stamp(r, run, t0, st, K + 1);
    return r;
}

namespace {

void check_pair(const QuadCoeffs& A, const AmplitudeField& g1, const DyadicSquare& R1, const AmplitudeField& g2,
                const DyadicSquare& R2, double nu, DecouplingReport& r) {
    require(nu > 0.0, "transversality parameter nu must be positive");
    const double mf = transversality::min_abs_form(A, R1, R2);
    if (mf < nu) throw NotTransverseError(mf, nu);
    auto inside = [](const AmplitudeField& g, const DyadicSquare& R) {
        const auto rc = R.rect();
        for (const auto& p : g.nodes())
            if (p[0] < rc.t0 || p[0] > rc.t1 || p[1] < rc.s0 || p[1] > rc.s1) return false;
        return !g.empty();
    };
    require(inside(g1, R1) && inside(g2, R2), "bilinear fields must be non-empty and supported in their squares");
    r.extras.emplace_back("min_form", mf);
    r.extras.emplace_back("nu", nu);
}

}  // namespace

DecouplingReport measure_bilinear(const QuadCoeffs& A, const AmplitudeField& g1, const DyadicSquare& R1,
                                  const AmplitudeField& g2, const DyadicSquare& R2, double nu, std::int64_t N,
                                  double p, const RunSpec& run) {
    const auto t0 = Clock::now();
    check_p(p);
    DecouplingReport r;
    check_pair(A, g1, R1, g2, R2, nu, r);
    const Surface S = geometry::quad_surface(A);
    const int m = cap_level_for(N);
    const CapPartition c1 = occupied_caps(g1, m), c2 = occupied_caps(g2, m);
    const norms::BallSpec ball = ball_for(run, static_cast<double>(N));
    const double G = phase_gradient_bound(S), rmax = resolution_radius(ball, run.resolution_quantile);
    const Leveled l1 = surface_leveled(S, g1, c1, G, rmax, run), l2 = surface_leveled(S, g2, c2, G, rmax, run);
    const std::size_t K1 = c1.caps.size(), K2 = c2.caps.size();
    // 0: |F1 F2|^{p/2}, 1: |F1|^p, 2: |F2|^p, caps of g1, caps of g2, resolution flag.
    const std::size_t C = 3 + K1 + K2 + 1;
    const auto st = norms::integrate(ball, run.sampler, std::vector<Reduce>(C, Reduce::mean), [&]() -> norms::Integrand {
        auto buf = std::make_shared<Buffers>();
        buf->a.resize(K1);
        buf->b.resize(K2);
        return [&l1, &l2, buf, K1, K2, p](const Vec4& x, std::span<double> out) {
            bool beyond = false;
            const Complex F1 = l1.evaluate(x, buf->a, buf->ws, beyond);
            const Complex F2 = l2.evaluate(x, buf->b, buf->ws, beyond);
            out[0] = std::pow(std::abs(F1) * std::abs(F2), 0.5 * p);
            out[1] = powabs(F1, p);
            out[2] = powabs(F2, p);
            for (std::size_t k = 0; k < K1; ++k) out[3 + k] = powabs(buf->a[k], p);
            for (std::size_t k = 0; k < K2; ++k) out[3 + K1 + k] = powabs(buf->b[k], p);
            out[3 + K1 + K2] = beyond ? 1.0 : 0.0;
        };
    });
    const double Z = st.mass;
    r.kind = "bilinear";
    r.N = N;
    r.p = p;
    r.cap_level = m;
    r.lhs = norms::estimate_from(st, 0, p, norms::tail_fraction(ball));
    double s1 = 0, s2 = 0, q1 = 0, q2 = 0;
    for (std::size_t k = 0; k < K1 + K2; ++k) {
        const double n = std::pow(Z * st.mean[3 + k], 1.0 / p);
        r.cap_norms.push_back(n);
        (k < K1 ? s1 : s2) += st.mean[3 + k];
        (k < K1 ? q1 : q2) += n * n;
    }
    r.caps = K1 + K2;
    r.rhs_lp = std::pow(Z * s1 * Z * s2, 1.0 / (2 * p));
    r.rhs_l2 = std::pow(q1 * q2, 0.25);
    r.ratio_lp = r.rhs_lp > 0 ? r.lhs.value / r.rhs_lp : 0.0;
    r.ratio_l2 = r.rhs_l2 > 0 ? r.lhs.value / r.rhs_l2 : 0.0;
    auto sums = [=](std::span<const double> m, std::size_t from, std::size_t n) {
        double s = 0;
        for (std::size_t k = 0; k < n; ++k) s += m[from + k];
        return s;
    };
    r.ratio_lp_se = st.jackknife_se([=](std::span<const double> m) {
        const double d = sums(m, 3, K1) * sums(m, 3 + K1, K2);
        return d > 0 ? std::pow(m[0] / std::sqrt(d), 1.0 / p) : 0.0;
    });
    r.ratio_l2_se = st.jackknife_se([=](std::span<const double> m) {
        double a = 0, b = 0;
        for (std::size_t k = 0; k < K1; ++k) a += std::pow(Z * m[3 + k], 2.0 / p);
        for (std::size_t k = 0; k < K2; ++k) b += std::pow(Z * m[3 + K1 + k], 2.0 / p);
        return a * b > 0 ? std::pow(Z * m[0], 1.0 / p) / std::pow(a * b, 0.25) : 0.0;
    });
    const double lin1 = s1 > 0 ? std::pow(st.mean[1] / s1, 1.0 / p) : 0.0;
    const double lin2 = s2 > 0 ? std::pow(st.mean[2] / s2, 1.0 / p) : 0.0;
    r.extras.emplace_back("linear_ratio_1", lin1);
    r.extras.emplace_back("linear_ratio_2", lin2);
    r.extras.emplace_back("linear_ratio", std::sqrt(lin1 * lin2));
    r.extras.emplace_back("linear_ratio_se", st.jackknife_se([=](std::span<const double> m) {
        const double d = sums(m, 3, K1) * sums(m, 3 + K1, K2);
        return d > 0 ? std::pow(m[1] * m[2] / d, 0.5 / p) : 0.0;
    }));
    stamp(r, run, t0, st, C - 1);
    return r;
}

DecouplingReport measure_square_function(const QuadCoeffs& A, const AmplitudeField& g1, const DyadicSquare& R1,
                                         const AmplitudeField& g2, const DyadicSquare& R2, double nu,
                                         std::int64_t N, double p, const RunSpec& run) {
    const auto t0 = Clock::now();
    check_p(p, true);
    require(p >= 4.0, "square-function estimate needs p >= 4");
    DecouplingReport r;
    check_pair(A, g1, R1, g2, R2, nu, r);
    const bool inf = std::isinf(p);
    const Surface S = geometry::quad_surface(A);
    const int m = cap_level_for(N);
    const CapPartition c1 = occupied_caps(g1, m), c2 = occupied_caps(g2, m);
    const norms::BallSpec ball = ball_for(run, static_cast<double>(N));
    const double G = phase_gradient_bound(S), rmax = resolution_radius(ball, run.resolution_quantile);
    const Leveled l1 = surface_leveled(S, g1, c1, G, rmax, run), l2 = surface_leveled(S, g2, c2, G, rmax, run);
    const std::size_t K1 = c1.caps.size(), K2 = c2.caps.size();
    const std::size_t C = 1 + K1 + K2 + 1;
    std::vector<Reduce> reduce(C, inf ? Reduce::max : Reduce::mean);
    reduce.back() = Reduce::mean;
    const auto st = norms::integrate(ball, run.sampler, reduce, [&]() -> norms::Integrand {
        auto buf = std::make_shared<Buffers>();
        buf->a.resize(K1);
        buf->b.resize(K2);
        return [&l1, &l2, buf, K1, K2, p, inf](const Vec4& x, std::span<double> out) {
            bool beyond = false;
            l1.evaluate(x, buf->a, buf->ws, beyond);
            l2.evaluate(x, buf->b, buf->ws, beyond);
            double q1 = 0, q2 = 0;
            for (std::size_t k = 0; k < K1; ++k) {
                const double n = std::norm(buf->a[k]);
                q1 += n;
                out[1 + k] = inf ? std::sqrt(n) : std::pow(n, 0.25 * p);
            }
            for (std::size_t k = 0; k < K2; ++k) {
                const double n = std::norm(buf->b[k]);
                q2 += n;
                out[1 + K1 + k] = inf ? std::sqrt(n) : std::pow(n, 0.25 * p);
            }
            out[0] = inf ? std::pow(q1 * q2, 0.25) : std::pow(q1 * q2, 0.25 * p);
            out[1 + K1 + K2] = beyond ? 1.0 : 0.0;
        };
    });
    const double Z = st.mass;
    r.kind = "square-function";
    r.N = N;
    r.p = p;
    r.cap_level = m;
    r.caps = K1 + K2;
    const double tail = norms::tail_fraction(ball);
    // Cap norms in L^{p/2}.
    double a = 0, b = 0;
    for (std::size_t k = 0; k < K1 + K2; ++k) {
        const double n = inf ? st.mean[1 + k] : std::pow(Z * st.mean[1 + k], 2.0 / p);
        r.cap_norms.push_back(n);
        (k < K1 ? a : b) += n * n;
    }
    r.lhs = inf ? norms::estimate_from(st, 0, p, tail) : norms::estimate_from(st, 0, p, tail);
    const double scale = inf ? 1.0 : std::pow(static_cast<double>(N), -4.0 / p);
    r.rhs_lp = scale * std::pow(a * b, 0.25);
    r.rhs_l2 = r.rhs_lp;
    r.ratio_lp = r.rhs_lp > 0 ? r.lhs.value / r.rhs_lp : 0.0;
    r.ratio_l2 = r.ratio_lp;
    if (!inf) {
        r.ratio_lp_se = st.jackknife_se([=](std::span<const double> m) {
            double x = 0, y = 0;
            for (std::size_t k = 0; k < K1; ++k) x += std::pow(Z * m[1 + k], 4.0 / p);
            for (std::size_t k = 0; k < K2; ++k) y += std::pow(Z * m[1 + K1 + k], 4.0 / p);
            return x * y > 0 ? std::pow(Z * m[0], 1.0 / p) / (scale * std::pow(x * y, 0.25)) : 0.0;
        });
        r.ratio_l2_se = r.ratio_lp_se;
    }
    stamp(r, run, t0, st, C - 1);
    return r;
}

DecouplingReport measure_trivial(const Surface& surface, const AmplitudeField& field,
                                 const std::vector<DyadicSquare>& squares, double p, const RunSpec& run) {
    const auto t0 = Clock::now();
    check_p(p);
    require(!squares.empty(), "measure_trivial: no squares");
    const std::int64_t K = static_cast<std::int64_t>(squares.size());
    require(transversality::is_power_of_two(K), "measure_trivial: the number of squares must be a power of two");
    const int L = transversality::log2_exact(K);
    std::set<std::pair<std::int64_t, std::int64_t>> seen;
    for (const auto& d : squares) {
        require(d.level == L, "measure_trivial: K squares must have side 1/K");
        require(d.i >= 0 && d.j >= 0 && d.i < K && d.j < K, "measure_trivial: square index out of range");
        if (!seen.insert({d.i, d.j}).second)
            fail(ErrorCode::invalid_argument, "measure_trivial: squares overlap");
    }
    CapPartition caps;
    caps.level = L;
    for (const auto& [i, j] : seen) caps.caps.push_back({L, i, j});
    AmplitudeField f;
    if (field.mode() == fields::Mode::continuous) {
        f = AmplitudeField::continuous(field.amplitude(), caps.caps,
                                       fields::QuadratureSpec{std::max(L, field.quadrature().cell_level), run.order});
    } else {
        std::vector<Vec2> pts;
        std::vector<Complex> amps;
        for (std::size_t k = 0; k < field.size(); ++k) {
            const auto d = transversality::square_of(L, field.nodes()[k][0], field.nodes()[k][1]);
            if (seen.count({d.i, d.j})) {
                pts.push_back(field.nodes()[k]);
                amps.push_back(field.coefficients()[k]);
            }
        }
        require(!pts.empty(), "measure_trivial: no field mass inside the squares");
        f = AmplitudeField::atomic(pts, amps);
    }
    const norms::BallSpec ball = ball_for(run, static_cast<double>(K));
    const double G = phase_gradient_bound(surface);
    const Leveled lev = surface_leveled(surface, f, caps, G, resolution_radius(ball, run.resolution_quantile), run);
    const std::size_t n = caps.caps.size();
    const auto st = norms::integrate(ball, run.sampler, std::vector<Reduce>(n + 2, Reduce::mean),
                                     [&]() -> norms::Integrand {
                                         auto buf = std::make_shared<Buffers>();
                                         buf->a.resize(n);
                                         return [&lev, buf, n, p](const Vec4& x, std::span<double> out) {
                                             bool beyond = false;
                                             const Complex tot = lev.evaluate(x, buf->a, buf->ws, beyond);
                                             out[0] = powabs(tot, p);
                                             for (std::size_t k = 0; k < n; ++k) out[1 + k] = powabs(buf->a[k], p);
                                             out[n + 1] = beyond ? 1.0 : 0.0;
                                         };
                                     });
    DecouplingReport r;
    r.kind = "trivial";
    r.N = K;
    r.p = p;
    r.cap_level = L;
    fill_linear(r, st, p, norms::tail_fraction(ball), 1, n);
    const double bound = std::pow(static_cast<double>(K), 1.0 - 2.0 / p);
    r.extras.emplace_back("normalized", r.ratio_lp / bound);
    r.extras.emplace_back("normalized_se", r.ratio_lp_se / bound);
    stamp(r, run, t0, st, n + 1);
    return r;
}

namespace {

/// Gauss-Legendre nodes of order `order` on the level-L dyadic cells of [0,1] clipped to I.
void interval_nodes(const Interval& I, int L, int order, std::vector<double>& t, std::vector<double>& w) {
    const auto rule = fields::gauss_legendre(order);
    const double h = std::ldexp(1.0, -L);
    const auto k0 = static_cast<std::int64_t>(std::floor(I.lo / h));
    const auto k1 = static_cast<std::int64_t>(std::ceil(I.hi / h));
    for (std::int64_t k = k0; k < k1; ++k) {
        const double lo = std::max(I.lo, static_cast<double>(k) * h), hi = std::min(I.hi, static_cast<double>(k + 1) * h);
        if (hi <= lo) continue;
        for (int u = 0; u < order; ++u) {
            t.push_back(lo + (hi - lo) * rule.nodes[u]);
            w.push_back((hi - lo) * rule.weights[u]);
        }
    }
}

std::int64_t interval_index(int m, double t) {
    const std::int64_t n = std::int64_t{1} << m;
    return std::min(static_cast<std::int64_t>(std::floor(std::ldexp(t, m))), n - 1);
}

/// 1-D extension of a curve piece, grouped by intervals of level m that meet I.
struct CurvePieces {
    Leveled lev;
    std::vector<std::int64_t> taus;
};

CurvePieces curve_pieces(const std::function<Vec4(double)>& pos, const Profile& h, const Interval& I, int m,
                         double gradient, double rmax, const RunSpec& run) {
    CurvePieces out;
    for (std::int64_t k = interval_index(m, I.lo); k <= interval_index(m, I.hi); ++k) {
        const double lo = std::ldexp(static_cast<double>(k), -m), hi = std::ldexp(static_cast<double>(k + 1), -m);
        if (std::min(hi, I.hi) > std::max(lo, I.lo)) out.taus.push_back(k);
    }
    auto build = [&](int L) {
        std::vector<double> t, w;
        interval_nodes(I, L, run.order, t, w);
        std::vector<Vec4> P(t.size());
        std::vector<Complex> c(t.size());
        std::vector<std::size_t> g(t.size());
        for (std::size_t k = 0; k < t.size(); ++k) {
            P[k] = pos(t[k]);
            c[k] = w[k] * h(t[k]);
            const auto tau = interval_index(m, t[k]);
            g[k] = static_cast<std::size_t>(std::lower_bound(out.taus.begin(), out.taus.end(), tau) - out.taus.begin());
        }
        return Extension(P, c, g, out.taus.size());
    };
    out.lev = make_leveled(build, m, gradient, rmax, run.cycles_per_cell, false);
    return out;
}

}  // namespace

DecouplingReport parabola_reference(std::int64_t N, double p, const RunSpec& run, const std::optional<Interval>& support) {
    const auto t0 = Clock::now();
    check_p(p);
    const Interval I = support.value_or(Interval{0.0, 1.0});
    require(I.lo >= 0.0 && I.hi <= 1.0 && I.hi > I.lo, "parabola_reference: support must be a subinterval of [0,1]");
    const int m = cap_level_for(N);
    const norms::BallSpec ball = ball_for(run, static_cast<double>(N), 2);
    const double G = 1.1 * std::sqrt(1.0 + 4.0 * I.hi * I.hi);
    const CurvePieces cp = curve_pieces([](double t) { return Vec4(t, t * t, 0, 0); },
                                        [](double) { return Complex(1, 0); }, I, m, G,
                                        resolution_radius(ball, run.resolution_quantile), run);
    const std::size_t K = cp.taus.size();
    const auto st = norms::integrate(ball, run.sampler, std::vector<Reduce>(K + 2, Reduce::mean),
                                     [&]() -> norms::Integrand {
                                         auto buf = std::make_shared<Buffers>();
                                         buf->a.resize(K);
                                         return [&cp, buf, K, p](const Vec4& x, std::span<double> out) {
                                             bool beyond = false;
                                             const Complex tot = cp.lev.evaluate(x, buf->a, buf->ws, beyond);
                                             out[0] = powabs(tot, p);
                                             for (std::size_t k = 0; k < K; ++k) out[1 + k] = powabs(buf->a[k], p);
                                             out[K + 1] = beyond ? 1.0 : 0.0;
                                         };
                                     });
    DecouplingReport r;
    r.kind = "parabola-2d";
    r.N = N;
    r.p = p;
    r.cap_level = m;
    fill_linear(r, st, p, norms::tail_fraction(ball), 1, K);
    stamp(r, run, t0, st, K + 1);
    return r;
}

DecouplingReport curve_bilinear(std::shared_ptr<const geometry::Curve> curve, Interval I1, Interval I2,
                                const Profile& h1, const Profile& h2, std::int64_t N, const RunSpec& run,
                                double min_separation) {
    const auto t0 = Clock::now();
    require(static_cast<bool>(curve) && h1 && h2, "curve_bilinear: curve and profiles required");
    for (const auto& I : {I1, I2})
        require(I.lo >= 0.0 && I.hi <= 1.0 && I.hi > I.lo, "curve_bilinear: intervals must lie in [0,1]");
    const double sep = geometry::distance(I1, I2);
    if (sep < min_separation)
        fail(ErrorCode::invalid_argument, "curve_bilinear: intervals too close (distance " + std::to_string(sep) + ")");
    double det_min = std::numeric_limits<double>::infinity();
    for (int a = 0; a <= 32; ++a)
        for (int b = 0; b <= 32; ++b)
            det_min = std::min(det_min, std::abs(geometry::lift_det(*curve, I1.lo + I1.length() * a / 32,
                                                                    I2.lo + I2.length() * b / 32)));
    require(det_min > 0.0, "curve_bilinear: lift determinant vanishes on I1 x I2");

    const double p = 12.0, q = 6.0;
    const int m = cap_level_for(N);
    const norms::BallSpec ball = ball_for(run, static_cast<double>(N));
    const double rmax = resolution_radius(ball, run.resolution_quantile);
    double G = 0;
    for (int a = 0; a <= 64; ++a) G = std::max(G, curve->derivative(1, a / 64.0).norm());
    G *= 1.1;
    auto pos = [&curve](double t) { return curve->value(t); };
    const CurvePieces P1 = curve_pieces(pos, h1, I1, m, G, rmax, run), P2 = curve_pieces(pos, h2, I2, m, G, rmax, run);
    const std::size_t K1 = P1.taus.size(), K2 = P2.taus.size();
    const std::size_t C = 1 + K1 + K2 + 1;
    const auto st = norms::integrate(ball, run.sampler, std::vector<Reduce>(C, Reduce::mean), [&]() -> norms::Integrand {
        auto buf = std::make_shared<Buffers>();
        buf->a.resize(K1);
        buf->b.resize(K2);
        return [&P1, &P2, buf, K1, K2, q](const Vec4& x, std::span<double> out) {
            bool beyond = false;
            const Complex F1 = P1.lev.evaluate(x, buf->a, buf->ws, beyond);
            const Complex F2 = P2.lev.evaluate(x, buf->b, buf->ws, beyond);
            out[0] = powabs(F1 * F2, q);
            for (std::size_t k = 0; k < K1; ++k) out[1 + k] = powabs(buf->a[k], q);
            for (std::size_t k = 0; k < K2; ++k) out[1 + K1 + k] = powabs(buf->b[k], q);
            out[1 + K1 + K2] = beyond ? 1.0 : 0.0;
        };
    });
    const double Z = st.mass;
    DecouplingReport r;
    r.kind = "curve-bilinear";
    r.N = N;
    r.p = p;
    r.cap_level = m;
    r.caps = K1 + K2;
    r.lhs = norms::estimate_from(st, 0, p, norms::tail_fraction(ball));
    double s1 = 0, s2 = 0, a = 0, b = 0;
    for (std::size_t k = 0; k < K1 + K2; ++k) {
        const double n = std::pow(Z * st.mean[1 + k], 1.0 / q);
        r.cap_norms.push_back(n);
        (k < K1 ? s1 : s2) += Z * st.mean[1 + k];
        (k < K1 ? a : b) += n * n;
    }
    r.rhs_lp = std::pow(s1 * s2, 1.0 / p);
    r.rhs_l2 = std::pow(a * b, 0.25);
    r.ratio_lp = r.rhs_lp > 0 ? r.lhs.value / r.rhs_lp : 0.0;
    r.ratio_l2 = r.rhs_l2 > 0 ? r.lhs.value / r.rhs_l2 : 0.0;
    r.ratio_lp_se = st.jackknife_se([=](std::span<const double> m) {
        double x = 0, y = 0;
        for (std::size_t k = 0; k < K1; ++k) x += m[1 + k];
        for (std::size_t k = 0; k < K2; ++k) y += m[1 + K1 + k];
        return x * y > 0 ? std::pow(m[0] / (Z * x * y), 1.0 / p) : 0.0;
    });
    r.ratio_l2_se = st.jackknife_se([=](std::span<const double> m) {
        double x = 0, y = 0;
        for (std::size_t k = 0; k < K1; ++k) x += std::pow(Z * m[1 + k], 2.0 / q);
        for (std::size_t k = 0; k < K2; ++k) y += std::pow(Z * m[1 + K1 + k], 2.0 / q);
        return x * y > 0 ? std::pow(Z * m[0], 1.0 / p) / std::pow(x * y, 0.25) : 0.0;
    });

    // Product identity: prod_i int_{I_i} h_i e(x . Phi) = E_{I1 x I2, Psi_Phi}(h1 (x) h2).
    const Surface lift = geometry::curve_lift(curve, I1, I2);
    std::mt19937_64 rng(derive_seed(run.sampler.seed, 0x1d));
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif;
    std::vector<Vec4> xs;
    double xmax = 0;
    for (int k = 0; k < 32; ++k) {
        Vec4 d(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
        xs.push_back(run.center + d * (0.1 * static_cast<double>(N) * unif(rng) / d.norm()));
        xmax = std::max(xmax, xs.back().norm());
    }
    int L = m;
    while (run.cycles_per_cell * std::ldexp(1.0, L) / G < xmax) ++L;
    std::vector<double> t1, w1, t2, w2;
    interval_nodes(I1, L, run.order, t1, w1);
    interval_nodes(I2, L, run.order, t2, w2);
    std::vector<Vec2> nodes;
    std::vector<double> weights;
    for (std::size_t i = 0; i < t1.size(); ++i)
        for (std::size_t j = 0; j < t2.size(); ++j) {
            nodes.emplace_back(t1[i], t2[j]);
            weights.push_back(w1[i] * w2[j]);
        }
    const AmplitudeField prod = AmplitudeField::from_nodes(
        nodes, weights, [h1, h2](double t, double s) { return h1(t) * h2(s); }, fields::unit_support(),
        fields::QuadratureSpec{L, run.order});
    const Extension E2(lift, prod);
    std::vector<Vec4> P1n, P2n;
    std::vector<Complex> c1, c2;
    for (std::size_t i = 0; i < t1.size(); ++i) {
        P1n.push_back(curve->value(t1[i]));
        c1.push_back(w1[i] * h1(t1[i]));
    }
    for (std::size_t j = 0; j < t2.size(); ++j) {
        P2n.push_back(curve->value(t2[j]));
        c2.push_back(w2[j] * h2(t2[j]));
    }
    const std::vector<std::size_t> g1(t1.size(), 0), g2(t2.size(), 0);
    const Extension e1(P1n, c1, g1, 1), e2(P2n, c2, g2, 1);
    kernel::Workspace ws;
    double resid = 0;
    for (const auto& x : xs) {
        const Complex lhs = e1.evaluate(x, ws) * e2.evaluate(x, ws);
        const Complex rhs = E2.evaluate(x, ws);
        resid = std::max(resid, std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-300));
    }
    r.extras.emplace_back("lift_det_min", det_min);
    r.extras.emplace_back("identity_residual", resid);
    r.extras.emplace_back("normalized", r.ratio_lp / std::pow(static_cast<double>(N), -1.0 / 6.0));
    stamp(r, run, t0, st, C - 1);
    return r;
}

DirichletOracle dirichlet_oracle(std::int64_t N, double p, double E, double T) {
    check_p(p);
    require(E > 4.0 && T > 0.0, "dirichlet_oracle: E must exceed 4 and T must be positive");
    const double R = static_cast<double>(N);
    const auto M = static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(N))));
    const int m = cap_level_for(N);
    // Frequencies n/M grouped by their cap along the line t = 0.
    std::map<std::int64_t, std::vector<double>> caps;
    for (std::int64_t n = 1; n <= M; ++n) {
        const double s = static_cast<double>(n) / static_cast<double>(M);
        caps[transversality::square_of(m, 0.0, s).j].push_back(s);
    }
    // x2-marginal of the truncated 4-D weight.
    const double TR = T * R;
    auto marginal = [&](double y) {
        const double lim2 = TR * TR - y * y;
        if (lim2 <= 0) return 0.0;
        auto f = [&](double r) { return 4.0 * std::numbers::pi * r * r * std::pow(1.0 + std::sqrt(y * y + r * r) / R, -E); };
        const double lim = std::sqrt(lim2);
        const double knee = std::min(lim, 8.0 * (std::abs(y) + R) / E);
        using boost::math::quadrature::gauss_kronrod;
        double v = gauss_kronrod<double, 31>::integrate(f, 0.0, knee, 10, 1e-12);
        if (knee < lim) v += gauss_kronrod<double, 31>::integrate(f, knee, lim, 10, 1e-12);
        return v;
    };
    using Rule = boost::math::quadrature::gauss<double, 16>;
    const double h = std::min(0.25, R / (2.0 * E));
    const auto pieces = static_cast<std::int64_t>(std::ceil(TR / h));
    std::vector<double> acc(caps.size() + 1, 0.0);
    const auto& abscissa = Rule::abscissa();
    const auto& weight = Rule::weights();
    for (std::int64_t k = 0; k < pieces; ++k) {
        const double lo = static_cast<double>(k) * h, hi = std::min(TR, lo + h);
        const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        for (std::size_t u = 0; u < abscissa.size(); ++u) {
            for (int sgn : {-1, 1}) {
                if (abscissa[u] == 0.0 && sgn < 0) continue;
                const double y = mid + sgn * half * abscissa[u];
                const double wy = 2.0 * half * weight[u] * marginal(y);
                if (wy == 0.0) continue;
                Complex tot = 0;
                std::size_t c = 1;
                for (const auto& [j, freqs] : caps) {
                    Complex s = 0;
                    for (double f : freqs) s += kernel::unit_phasor(y * f);
                    tot += s;
                    acc[c++] += wy * powabs(s, p);
                }
                acc[0] += wy * powabs(tot, p);
            }
        }
    }
    DirichletOracle o;
    o.lhs = std::pow(acc[0], 1.0 / p);
    double sum = 0, sq = 0;
    for (std::size_t c = 1; c < acc.size(); ++c) {
        sum += acc[c];
        sq += std::pow(acc[c], 2.0 / p);
    }
    o.rhs_lp = std::pow(sum, 1.0 / p);
    o.rhs_l2 = std::sqrt(sq);
    o.ratio_lp = o.lhs / o.rhs_lp;
    o.ratio_l2 = o.lhs / o.rhs_l2;
    return o;
}

// ---------------------------------------------------------------------------
// Scenarios

std::string to_string(Kind k) {
    switch (k) {
        case Kind::indicator: return "indicator";
        case Kind::flat_line: return "flat-line";
        case Kind::strip: return "strip";
        case Kind::random_phase: return "random-phase";
        case Kind::bilinear_pair: return "bilinear-pair";
        case Kind::curve_bilinear: return "curve-bilinear";
        case Kind::parabola_2d: return "parabola-2d";
    }
    return "unknown";
}

Kind kind_from_string(const std::string& s) {
    for (Kind k : {Kind::indicator, Kind::flat_line, Kind::strip, Kind::random_phase, Kind::bilinear_pair,
                   Kind::curve_bilinear, Kind::parabola_2d})
        if (to_string(k) == s) return k;
    fail(ErrorCode::schema, "unknown scenario kind '" + s + "'");
}

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::proven: return "proven";
        case Provenance::derived: return "derived";
        case Provenance::none: return "none";
    }
    return "none";
}

Prediction predicted_exponent(Kind kind, double p, Flavor flavor) {
    check_p(p, true);
    const double ip = std::isinf(p) ? 0.0 : 1.0 / p;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const bool lp = flavor == Flavor::lp;
    switch (kind) {
        case Kind::indicator: {
            const double e = p >= 6 ? 1.0 - 4.0 * ip : 0.5 - ip;
            if (lp) return {e, Provenance::proven};
            return {e + ip - 0.5, Provenance::derived};
        }
        case Kind::flat_line:
            if (p < 2) return {nan, Provenance::none};
            return lp ? Prediction{0.5 - ip, Provenance::derived} : Prediction{0.25 - 0.5 * ip, Provenance::derived};
        case Kind::strip:
            return lp ? Prediction{1.0 - 2.0 * ip, Provenance::proven} : Prediction{0.5 - ip, Provenance::derived};
        case Kind::random_phase:
            return lp ? Prediction{0.5 - ip, Provenance::derived} : Prediction{0.0, Provenance::derived};
        case Kind::parabola_2d:
            return lp ? Prediction{0.25 - 0.5 * ip, Provenance::derived} : Prediction{0.0, Provenance::proven};
        case Kind::curve_bilinear:
            return lp ? Prediction{-1.0 / 6.0, Provenance::proven} : Prediction{nan, Provenance::none};
        case Kind::bilinear_pair: return {nan, Provenance::none};
    }
    return {nan, Provenance::none};
}

namespace {

const QuadCoeffs kParaboloid{{1, 0, 0, 0, 0, 1}};
const QuadCoeffs kFlat{{1, 0, 0, 0, 0.5, 0}};

/// R1 = (l,0,0), R2 = (l,j,j) with the smallest min |Q| >= nu over levels 2.. and offsets j.
std::pair<DyadicSquare, DyadicSquare> transverse_pair(const QuadCoeffs& A, double nu) {
    for (int l = 2; l <= 8; ++l) {
        const std::int64_t n = std::int64_t{1} << l;
        std::optional<std::pair<DyadicSquare, DyadicSquare>> best;
        double best_v = std::numeric_limits<double>::infinity();
        for (std::int64_t j = 1; j < n; ++j) {
            const DyadicSquare a{l, 0, 0}, b{l, j, j};
            const double v = transversality::min_abs_form(A, a, b);
            if (v >= nu && v < best_v) {
                best_v = v;
                best = {{a, b}};
            }
        }
        if (best) return *best;
    }
    fail(ErrorCode::invalid_argument, "no diagonal square pair is nu-transverse for this surface");
}

}  // namespace

Scenario scenario(const ScenarioSpec& spec, std::int64_t N) {
    require(N >= 1, "N must be positive");
    Scenario sc;
    sc.kind = spec.kind;
    const int m = cap_level_for(N);
    const fields::QuadratureSpec q{m, 8};
    switch (spec.kind) {
        case Kind::indicator:
            sc.A = spec.A.value_or(kParaboloid);
            sc.fields.push_back(fields::const_field(fields::unit_support(), q));
            break;
        case Kind::random_phase:
            sc.A = spec.A.value_or(kParaboloid);
            sc.fields.push_back(fields::random_phase_field(spec.seed, m, fields::unit_support(), q));
            break;
        case Kind::flat_line:
            sc.A = spec.A.value_or(kFlat);
            sc.fields.push_back(fields::flat_line_field(N));
            break;
        case Kind::strip: {
            require(transversality::is_power_of_two(N), "strip scenario: K must be a power of two");
            sc.A = spec.A.value_or(kFlat);
            const int L = transversality::log2_exact(N);
            for (std::int64_t j = 0; j < N; ++j) sc.squares.push_back({L, 0, j});
            sc.fields.push_back(fields::const_field(sc.squares, fields::QuadratureSpec{L, 8}));
            break;
        }
        case Kind::bilinear_pair: {
            sc.A = spec.A.value_or(kParaboloid);
            const auto [R1, R2] = transverse_pair(sc.A, spec.nu);
            sc.squares = {R1, R2};
            sc.nu = spec.nu;
            sc.fields.push_back(fields::random_phase_field(derive_seed(spec.seed, 1), m, {R1}, q));
            sc.fields.push_back(fields::random_phase_field(derive_seed(spec.seed, 2), m, {R2}, q));
            break;
        }
        case Kind::curve_bilinear:
        case Kind::parabola_2d: return sc;
    }
    sc.surface = geometry::quad_surface(sc.A);
    return sc;
}

DecouplingReport run_scenario(const ScenarioSpec& spec, std::int64_t N, double p, const RunSpec& run) {
    DecouplingReport r;
    switch (spec.kind) {
        case Kind::curve_bilinear: {
            const auto one = [](double) { return Complex(1, 0); };
            r = curve_bilinear(std::make_shared<geometry::MomentCurve>(), spec.I1, spec.I2, one, one, N, run);
            break;
        }
        case Kind::parabola_2d: r = parabola_reference(N, p, run); break;
        default: {
            const Scenario sc = scenario(spec, N);
            if (spec.kind == Kind::strip) {
                r = measure_trivial(*sc.surface, sc.fields[0], sc.squares, p, run);
            } else if (spec.kind == Kind::bilinear_pair) {
                r = spec.square_function ? measure_square_function(sc.A, sc.fields[0], sc.squares[0], sc.fields[1],
                                                                   sc.squares[1], sc.nu, N, p, run)
                                         : measure_bilinear(sc.A, sc.fields[0], sc.squares[0], sc.fields[1],
                                                            sc.squares[1], sc.nu, N, p, run);
            } else {
                r = measure_linear(*sc.surface, sc.fields[0], N, p, run);
            }
        }
    }
    const std::string measured = r.kind;
    r.kind = to_string(spec.kind);
    if (measured != r.kind) r.extras.emplace_back("measurement_" + measured, 1.0);
    return r;
}

// ---------------------------------------------------------------------------
// Studies and output

SlopeFit fit_slope(const std::vector<double>& N, const std::vector<double>& ratio, const std::vector<double>& se) {
    SlopeFit f;
    std::vector<double> x, y, s;
    for (std::size_t k = 0; k < N.size(); ++k) {
        if (!(ratio[k] > 0) || !std::isfinite(ratio[k])) continue;
        x.push_back(std::log(N[k]));
        y.push_back(std::log(ratio[k]));
        s.push_back(k < se.size() ? se[k] / ratio[k] : 0.0);
    }
    if (x.size() < 3) {
        f.warning = "fewer than 3 usable N values; slope omitted";
        return f;
    }
    const double n = static_cast<double>(x.size());
    double xm = 0, ym = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        xm += x[k] / n;
        ym += y[k] / n;
    }
    double sxx = 0, sxy = 0, var = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - xm) * (x[k] - xm);
        sxy += (x[k] - xm) * (y[k] - ym);
    }
    for (std::size_t k = 0; k < x.size(); ++k) var += (x[k] - xm) * (x[k] - xm) * s[k] * s[k];
    f.valid = true;
    f.slope = sxy / sxx;
    f.se = std::sqrt(var) / sxx;
    f.ci_low = f.slope - 1.96 * f.se;
    f.ci_high = f.slope + 1.96 * f.se;
    return f;
}

Study scaling_study(const ScenarioSpec& spec, const std::vector<std::int64_t>& Ns, const std::vector<double>& ps,
                    const RunSpec& run) {
    Study st;
    for (double p : ps) {
        std::vector<double> n, rl, sl, r2, s2;
        for (auto N : Ns) {
            st.rows.push_back(run_scenario(spec, N, p, run));
            const auto& r = st.rows.back();
            n.push_back(static_cast<double>(N));
            rl.push_back(r.ratio_lp);
            sl.push_back(r.ratio_lp_se);
            r2.push_back(r.ratio_l2);
            s2.push_back(r.ratio_l2_se);
        }
        for (Flavor fl : {Flavor::lp, Flavor::l2}) {
            SlopeFit f = fl == Flavor::lp ? fit_slope(n, rl, sl) : fit_slope(n, r2, s2);
            f.kind = to_string(spec.kind);
            f.p = p;
            f.flavor = fl;
            st.slopes.push_back(f);
        }
    }
    return st;
}

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

nlohmann::json estimate_json(const norms::NormEstimate& e) {
    return {{"value", e.value},
            {"stderr", e.stderr_},
            {"samples", e.samples},
            {"strategy", norms::to_string(e.strategy)},
            {"seed", e.seed},
            {"spacing", e.spacing},
            {"approximate", e.approximate},
            {"tail", e.tail}};
}

nlohmann::json to_json(const DecouplingReport& r) {
    nlohmann::json j = {{"kind", r.kind},
                        {"N", r.N},
                        {"p", r.p},
                        {"cap_level", r.cap_level},
                        {"caps", r.caps},
                        {"lhs", estimate_json(r.lhs)},
                        {"rhs_lp", r.rhs_lp},
                        {"rhs_l2", r.rhs_l2},
                        {"ratio_lp", r.ratio_lp},
                        {"ratio_l2", r.ratio_l2},
                        {"ratio_lp_se", r.ratio_lp_se},
                        {"ratio_l2_se", r.ratio_l2_se},
                        {"cap_norms", r.cap_norms},
                        {"seed", r.seed},
                        {"budget", r.budget},
                        {"under_resolved", r.under_resolved}};
    if (r.runtime_ms >= 0) j["runtime_ms"] = r.runtime_ms;
    nlohmann::json ex = nlohmann::json::object();
    for (const auto& [k, v] : r.extras) ex[k] = v;
    j["extras"] = ex;
    return j;
}

}  // namespace

std::string csv_header() { return "kind,N,p,lhs,lhs_se,rhs_lp,rhs_l2,ratio_lp,ratio_l2,caps,budget,seed,runtime_ms"; }

std::string csv_row(const DecouplingReport& r) {
    std::string s = r.kind + "," + std::to_string(r.N) + "," + num(r.p) + "," + num(r.lhs.value) + "," +
                    num(r.lhs.stderr_) + "," + num(r.rhs_lp) + "," + num(r.rhs_l2) + "," + num(r.ratio_lp) + "," +
                    num(r.ratio_l2) + "," + std::to_string(r.caps) + "," + std::to_string(r.budget) + "," +
                    std::to_string(r.seed) + ",";
    if (r.runtime_ms >= 0) s += num(r.runtime_ms);
    return s;
}

std::string report_json(const DecouplingReport& r) { return to_json(r).dump(2); }

std::string plotdata_json(const std::vector<DecouplingReport>& reports) {
    std::map<std::pair<std::string, double>, std::vector<const DecouplingReport*>> groups;
    for (const auto& r : reports) groups[{r.kind, r.p}].push_back(&r);
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [key, rows] : groups) {
        nlohmann::json series = {{"kind", key.first}, {"p", key.second}};
        nlohmann::json pts = nlohmann::json::array(), notes = nlohmann::json::array();
        std::vector<double> n, rl, sl, r2, s2;
        for (const auto* r : rows) {
            if (!(r->rhs_lp > 0) || !(r->rhs_l2 > 0)) {
                notes.push_back("N=" + std::to_string(r->N) + ": right-hand side is zero, row skipped");
                continue;
            }
            const double logn = std::log(static_cast<double>(r->N));
            pts.push_back({{"log_N", logn},
                           {"log_ratio_lp", std::log(r->ratio_lp)},
                           {"err_lp", r->ratio_lp_se / r->ratio_lp},
                           {"log_ratio_l2", std::log(r->ratio_l2)},
                           {"err_l2", r->ratio_l2_se / r->ratio_l2}});
            n.push_back(static_cast<double>(r->N));
            rl.push_back(r->ratio_lp);
            sl.push_back(r->ratio_lp_se);
            r2.push_back(r->ratio_l2);
            s2.push_back(r->ratio_l2_se);
        }
        series["points"] = pts;
        series["notes"] = notes;
        for (Flavor fl : {Flavor::lp, Flavor::l2}) {
            const SlopeFit f = fl == Flavor::lp ? fit_slope(n, rl, sl) : fit_slope(n, r2, s2);
            nlohmann::json fj = {{"valid", f.valid}};
            if (f.valid) {
                fj["slope"] = f.slope;
                fj["se"] = f.se;
                fj["ci"] = {f.ci_low, f.ci_high};
            } else {
                fj["warning"] = f.warning;
            }
            series[fl == Flavor::lp ? "slope_lp" : "slope_l2"] = fj;
        }
        out.push_back(series);
    }
    return out.dump(2);
}

}  // namespace declab::harness
