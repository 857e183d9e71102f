#pragma once

// The transversality form Q(dt,ds) = c1 dt^2 + c2 dt ds + c3 ds^2 of a quadratic
// model, its eigen-strip geometry, and pairwise transversality of dyadic squares.

#include "declab/geometry.hpp"

#include <cstdint>
#include <vector>

namespace declab::transversality {

using geometry::QuadCoeffs;

struct TransCoeffs {
    double c1 = 0, c2 = 0, c3 = 0;
    Eigen::Matrix2d M;       ///< [[c1, c2/2], [c2/2, c3]]
    double lambda1 = 0;      ///< |lambda1| >= |lambda2|
    double lambda2 = 0;
    Eigen::Vector2d v1, v2;  ///< orthonormal eigenvectors

    double form(double dt, double ds) const { return c1 * dt * dt + c2 * dt * ds + c3 * ds * ds; }
};

/// Eigenvalues ordered by magnitude (ties: larger first); each eigenvector has a
/// nonnegative first coordinate (ties: nonnegative second).
TransCoeffs trans_coeffs(const QuadCoeffs& A);

/// Axis-aligned rectangle [t0,t1] x [s0,s1] in parameter space.
struct Rect {
    double t0 = 0, t1 = 1, s0 = 0, s1 = 1;
    bool contains(double t, double s) const { return t >= t0 && t <= t1 && s >= s0 && s <= s1; }
    friend bool operator==(const Rect&, const Rect&) = default;
};

/// Level-m dyadic square [i 2^-m, (i+1) 2^-m) x [j 2^-m, (j+1) 2^-m).
struct DyadicSquare {
    int level = 0;
    std::int64_t i = 0, j = 0;

    double side() const { return std::ldexp(1.0, -level); }
    Rect rect() const;
    /// Half-open membership; the right/top edges of [0,1]^2 belong to the last square.
    bool contains(double t, double s) const;
    friend bool operator==(const DyadicSquare&, const DyadicSquare&) = default;
};

/// Index of the level-m square containing (t,s) under the half-open convention.
DyadicSquare square_of(int level, double t, double s);

/// All 4^m squares of level m, ordered by (i, j).
std::vector<DyadicSquare> all_squares(int level);

/// min over (t1,s1) in R1, (t2,s2) in R2 of |Q(t1-t2, s1-s2)|, computed exactly over
/// the difference rectangle (corners, edge critical points, interior zero set).
double min_abs_form(const TransCoeffs& T, const Rect& R1, const Rect& R2);
double min_abs_form(const QuadCoeffs& A, const Rect& R1, const Rect& R2);
double min_abs_form(const QuadCoeffs& A, const DyadicSquare& R1, const DyadicSquare& R2);

/// Brute-force oracle on a (n+1)^2 x (n+1)^2 grid of the two rectangles.
double min_abs_form_grid(const TransCoeffs& T, const Rect& R1, const Rect& R2, int n = 1024);

/// Eigen-strip description of the non-transverse region in difference space.
struct StripPrediction {
    bool definite = false;       ///< lambda1 lambda2 >= 0: one strip along v2
    Eigen::Vector2d direction1;  ///< strip directions (both equal for the definite case)
    Eigen::Vector2d direction2;
    double width = 0;            ///< strip half-width in difference space

    /// Conservative test on the difference rectangle centred at (dt, ds) with half-side h.
    bool predicts_nontransverse(const TransCoeffs& T, double nu, double dt, double ds, double h) const;
};

StripPrediction strip_prediction(const TransCoeffs& T, double nu);

struct TransverseGraph {
    int K = 0;
    double nu = 0;
    /// counts[i*K + j]: number of level squares (including itself) not nu-transverse to square (i,j).
    std::vector<std::int64_t> counts;
    std::int64_t max_count = 0;
    StripPrediction strips;
    /// Fraction of ordered pairs on which the strip prediction equals the exact classification.
    double strip_agreement = 0;
    std::int64_t pairs = 0;
    std::int64_t strip_mismatches = 0;
    /// Mismatches whose index offset is not within one square of an exact-classification boundary.
    std::int64_t strip_mismatches_interior = 0;

    /// min_abs_form for squares whose indices differ by (di, dj); |di|,|dj| < K.
    double table(std::int64_t di, std::int64_t dj) const { return table_[(di + K - 1) * (2 * K - 1) + (dj + K - 1)]; }
    bool transverse(const DyadicSquare& a, const DyadicSquare& b) const {
        return table(a.i - b.i, a.j - b.j) >= nu;
    }

    std::vector<double> table_;
};

/// Classifies all ordered pairs of level-log2(K) squares; nu <= 0 selects K^-2.
TransverseGraph transverse_graph(const QuadCoeffs& A, int K, double nu = 0.0);

bool is_power_of_two(std::int64_t K);
int log2_exact(std::int64_t K);

/// Finite-difference determinant of (t1,s1,t2,s2) -> Psi_A(t1,s1) + Psi_A(t2,s2).
double jacobian_fd(const QuadCoeffs& A, double t1, double s1, double t2, double s2, double h = 1e-4);

/// Max over n random points of |jacobian_fd - 4 Q(t1-t2, s1-s2)| divided by the
/// term scale 4(|c1| dt^2 + |c2| |dt ds| + |c3| ds^2).
double jacobian_residual(const QuadCoeffs& A, int n, std::uint64_t seed);

}  // namespace declab::transversality
