#include "declab/transversality.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace declab::transversality {

namespace {

Eigen::Vector2d canonical_sign(Eigen::Vector2d v) {
    if (v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0)) v = -v;
    return v;
}

}  // namespace

TransCoeffs trans_coeffs(const QuadCoeffs& A) {
    require(A.finite(), "trans_coeffs: coefficients must be finite");
    const auto m = A.minors();
    TransCoeffs T;
    T.c1 = m[0];
    T.c2 = m[1];
    T.c3 = m[2];
    T.M << T.c1, 0.5 * T.c2, 0.5 * T.c2, T.c3;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(T.M);
    double l[2] = {es.eigenvalues()[0], es.eigenvalues()[1]};
    Eigen::Vector2d v[2] = {es.eigenvectors().col(0), es.eigenvectors().col(1)};
    const bool swap = std::abs(l[1]) > std::abs(l[0]) || (std::abs(l[1]) == std::abs(l[0]) && l[1] > l[0]);
    const int a = swap ? 1 : 0, b = 1 - a;
    T.lambda1 = l[a];
    T.lambda2 = l[b];
    T.v1 = canonical_sign(v[a].normalized());
    T.v2 = canonical_sign(v[b].normalized());
    return T;
}

Rect DyadicSquare::rect() const {
    const double h = side();
    return {static_cast<double>(i) * h, static_cast<double>(i + 1) * h, static_cast<double>(j) * h,
            static_cast<double>(j + 1) * h};
}

bool DyadicSquare::contains(double t, double s) const { return square_of(level, t, s) == *this; }

DyadicSquare square_of(int level, double t, double s) {
    require(level >= 0 && level < 62, "square_of: level out of range");
    require(t >= 0.0 && t <= 1.0 && s >= 0.0 && s <= 1.0, "square_of: point outside [0,1]^2");
    const std::int64_t n = std::int64_t{1} << level;
    auto index = [n, level](double x) {
        const auto k = static_cast<std::int64_t>(std::floor(std::ldexp(x, level)));
        return std::min(k, n - 1);
    };
    return {level, index(t), index(s)};
}

std::vector<DyadicSquare> all_squares(int level) {
    require(level >= 0 && level <= 15, "all_squares: level out of range");
    const std::int64_t n = std::int64_t{1} << level;
    std::vector<DyadicSquare> out;
    out.reserve(static_cast<std::size_t>(n * n));
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < n; ++j) out.push_back({level, i, j});
    return out;
}

namespace {

// Exact range of Q over [x0,x1] x [y0,y1]: returns min |Q|.
double min_abs_over_box(const TransCoeffs& T, double x0, double x1, double y0, double y1) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    auto take = [&](double x, double y) {
        const double q = T.form(x, y);
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    };
    for (double x : {x0, x1})
        for (double y : {y0, y1}) take(x, y);
    // Edge critical points.
    if (T.c3 != 0.0) {
        for (double x : {x0, x1}) {
            const double y = -T.c2 * x / (2.0 * T.c3);
            if (y > y0 && y < y1) take(x, y);
        }
    }
    if (T.c1 != 0.0) {
        for (double y : {y0, y1}) {
            const double x = -T.c2 * y / (2.0 * T.c1);
            if (x > x0 && x < x1) take(x, y);
        }
    }
    // Interior critical points lie in ker M, where Q = 0.
    const double det = T.c1 * T.c3 - 0.25 * T.c2 * T.c2;
    bool zero_critical = false;
    if (x0 <= 0.0 && 0.0 <= x1 && y0 <= 0.0 && 0.0 <= y1) {
        zero_critical = true;
    } else if (det == 0.0) {
        // Kernel direction of the singular M; the box meets the line iff the corners
        // are not all strictly on one side.
        Eigen::Vector2d k;
        if (T.c1 != 0.0 || T.c2 != 0.0)
            k = Eigen::Vector2d(-0.5 * T.c2, T.c1);
        else
            k = Eigen::Vector2d(T.c3, -0.5 * T.c2);
        if (k.squaredNorm() == 0.0) k = Eigen::Vector2d(1.0, 0.0);
        int pos = 0, neg = 0;
        for (double x : {x0, x1})
            for (double y : {y0, y1}) {
                const double cr = k[0] * y - k[1] * x;
                if (cr >= 0.0) ++pos;
                if (cr <= 0.0) ++neg;
            }
        zero_critical = pos > 0 && neg > 0;
    }
    if (zero_critical) take(0.0, 0.0);
    if (lo <= 0.0 && hi >= 0.0) return 0.0;
    return lo > 0.0 ? lo : -hi;
}

bool rect_less(const Rect& a, const Rect& b) {
    return std::tie(a.t0, a.t1, a.s0, a.s1) < std::tie(b.t0, b.t1, b.s0, b.s1);
}

}  // namespace

double min_abs_form(const TransCoeffs& T, const Rect& R1, const Rect& R2) {
    // Canonical order so the result is exactly symmetric.
    const Rect& a = rect_less(R2, R1) ? R2 : R1;
    const Rect& b = rect_less(R2, R1) ? R1 : R2;
    return min_abs_over_box(T, a.t0 - b.t1, a.t1 - b.t0, a.s0 - b.s1, a.s1 - b.s0);
}

double min_abs_form(const QuadCoeffs& A, const Rect& R1, const Rect& R2) {
    return min_abs_form(trans_coeffs(A), R1, R2);
}

double min_abs_form(const QuadCoeffs& A, const DyadicSquare& R1, const DyadicSquare& R2) {
    return min_abs_form(trans_coeffs(A), R1.rect(), R2.rect());
}

double min_abs_form_grid(const TransCoeffs& T, const Rect& R1, const Rect& R2, int n) {
    require(n >= 1, "min_abs_form_grid: n must be positive");
    // Difference set of two rectangles is the difference rectangle; sample it.
    const double x0 = R1.t0 - R2.t1, x1 = R1.t1 - R2.t0;
    const double y0 = R1.s0 - R2.s1, y1 = R1.s1 - R2.s0;
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a <= 2 * n; ++a) {
        const double x = x0 + (x1 - x0) * a / (2.0 * n);
        for (int b = 0; b <= 2 * n; ++b) {
            const double y = y0 + (y1 - y0) * b / (2.0 * n);
            best = std::min(best, std::abs(T.form(x, y)));
        }
    }
    return best;
}

StripPrediction strip_prediction(const TransCoeffs& T, double nu) {
    StripPrediction sp;
    sp.definite = T.lambda1 * T.lambda2 >= 0.0;
    const double l1 = std::abs(T.lambda1);
    sp.width = l1 > 0.0 ? std::sqrt(nu / l1) : std::numeric_limits<double>::infinity();
    if (sp.definite) {
        sp.direction1 = sp.direction2 = T.v2;
    } else {
        const double r = std::sqrt(-T.lambda2 / T.lambda1);
        sp.direction1 = (r * T.v1 + T.v2).normalized();
        sp.direction2 = (-r * T.v1 + T.v2).normalized();
    }
    return sp;
}

bool StripPrediction::predicts_nontransverse(const TransCoeffs& T, double nu, double dt, double ds,
                                             double h) const {
    // Exact minimum of |linear functional| over the box, then a product/sum lower bound for |Q|.
    auto min_abs_linear = [&](const Eigen::Vector2d& w) {
        const double centre = w[0] * dt + w[1] * ds;
        return std::max(0.0, std::abs(centre) - h * (std::abs(w[0]) + std::abs(w[1])));
    };
    if (definite) {
        const double b1 = min_abs_linear(T.v1), b2 = min_abs_linear(T.v2);
        return std::abs(T.lambda1) * b1 * b1 + std::abs(T.lambda2) * b2 * b2 < nu;
    }
    const double r = std::sqrt(-T.lambda2 / T.lambda1);
    const double lp = min_abs_linear(T.v1 + r * T.v2), lm = min_abs_linear(T.v1 - r * T.v2);
    return std::abs(T.lambda1) * lp * lm < nu;
}

bool is_power_of_two(std::int64_t K) { return K > 0 && (K & (K - 1)) == 0; }

int log2_exact(std::int64_t K) {
    require(is_power_of_two(K), "K must be a power of two");
    int m = 0;
    while ((std::int64_t{1} << m) < K) ++m;
    return m;
}

TransverseGraph transverse_graph(const QuadCoeffs& A, int K, double nu) {
    require(is_power_of_two(K) && K <= 1024, "transverse_graph: K must be a power of two (<= 1024)");
    const TransCoeffs T = trans_coeffs(A);
    TransverseGraph g;
    g.K = K;
    g.nu = nu > 0.0 ? nu : 1.0 / (static_cast<double>(K) * K);
    g.strips = strip_prediction(T, g.nu);
    const double h = 1.0 / K;
    const int W = 2 * K - 1;
    g.table_.resize(static_cast<std::size_t>(W) * W);
    std::vector<char> predicted(static_cast<std::size_t>(W) * W);
    const int m = log2_exact(K);
    for (int di = -(K - 1); di <= K - 1; ++di) {
        for (int dj = -(K - 1); dj <= K - 1; ++dj) {
            const DyadicSquare a{m, std::max(di, 0), std::max(dj, 0)};
            const DyadicSquare b{m, std::max(-di, 0), std::max(-dj, 0)};
            const std::size_t idx = static_cast<std::size_t>(di + K - 1) * W + (dj + K - 1);
            g.table_[idx] = min_abs_form(T, a.rect(), b.rect());
            predicted[idx] = g.strips.predicts_nontransverse(T, g.nu, di * h, dj * h, h);
        }
    }
    // Offsets adjacent (8-neighbourhood) to a change in the exact classification.
    std::vector<char> boundary(static_cast<std::size_t>(W) * W, 0);
    for (int a = 0; a < W; ++a)
        for (int b = 0; b < W; ++b) {
            const bool here = g.table_[static_cast<std::size_t>(a) * W + b] < g.nu;
            for (int da = -1; da <= 1; ++da)
                for (int db = -1; db <= 1; ++db) {
                    const int a2 = a + da, b2 = b + db;
                    if (a2 < 0 || b2 < 0 || a2 >= W || b2 >= W) continue;
                    if ((g.table_[static_cast<std::size_t>(a2) * W + b2] < g.nu) != here)
                        boundary[static_cast<std::size_t>(a) * W + b] = 1;
                }
        }
    g.counts.assign(static_cast<std::size_t>(K) * K, 0);
    std::int64_t agree = 0;
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
            std::int64_t c = 0;
            for (int i2 = 0; i2 < K; ++i2)
                for (int j2 = 0; j2 < K; ++j2) {
                    const std::size_t idx = static_cast<std::size_t>(i - i2 + K - 1) * W + (j - j2 + K - 1);
                    const bool non = g.table_[idx] < g.nu;
                    c += non;
                    const bool match = non == static_cast<bool>(predicted[idx]);
                    agree += match;
                    if (!match) {
                        ++g.strip_mismatches;
                        if (!boundary[idx]) ++g.strip_mismatches_interior;
                    }
                }
            g.counts[static_cast<std::size_t>(i) * K + j] = c;
            g.max_count = std::max(g.max_count, c);
        }
    g.pairs = static_cast<std::int64_t>(K) * K * K * K;
    g.strip_agreement = static_cast<double>(agree) / static_cast<double>(g.pairs);
    return g;
}

double jacobian_fd(const QuadCoeffs& A, double t1, double s1, double t2, double s2, double h) {
    const auto S = geometry::quad_surface(A);
    auto map = [&](const Eigen::Vector4d& z) -> Vec4 { return S.value(z[0], z[1]) + S.value(z[2], z[3]); };
    const Eigen::Vector4d z0(t1, s1, t2, s2);
    Eigen::Matrix4d J;
    for (int k = 0; k < 4; ++k) {
        Eigen::Vector4d zp = z0, zm = z0;
        zp[k] += h;
        zm[k] -= h;
        J.col(k) = (map(zp) - map(zm)) / (2.0 * h);
    }
    return J.determinant();
}

double jacobian_residual(const QuadCoeffs& A, int n, std::uint64_t seed) {
    require(n >= 1, "jacobian_residual: n must be >= 1");
    const TransCoeffs T = trans_coeffs(A);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
        const double t1 = u(rng), s1 = u(rng), t2 = u(rng), s2 = u(rng);
        const double dt = t1 - t2, ds = s1 - s2;
        const double scale = 4.0 * (std::abs(T.c1) * dt * dt + std::abs(T.c2 * dt * ds) + std::abs(T.c3) * ds * ds);
        if (scale == 0.0) continue;
        const double fd = jacobian_fd(A, t1, s1, t2, s2);
        worst = std::max(worst, std::abs(fd - 4.0 * T.form(dt, ds)) / scale);
    }
    return worst;
}

}  // namespace declab::transversality
