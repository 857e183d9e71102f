#pragma once

// Surfaces [0,1]^2 -> R^4 with second-order jets, curves [0,1] -> R^4 with
// derivatives up to order four, quadratic normal forms and the nondegeneracy
// determinants.

#include "declab/common.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>

namespace declab::geometry {

/// Relative singular-value threshold used for every rank decision.
inline constexpr double kRankTolerance = 1e-8;

/// Coefficients of the quadratic pair
///   (A1 t^2 + 2 A2 t s + A3 s^2,  A4 t^2 + 2 A5 t s + A6 s^2).
/// Stored zero-based: a[0] = A1 ... a[5] = A6.
struct QuadCoeffs {
    std::array<double, 6> a{};

    double operator[](std::size_t i) const { return a[i]; }
    bool finite() const;

    /// The 2x3 matrix [[A1,A2,A3],[A4,A5,A6]].
    Eigen::Matrix<double, 2, 3> matrix() const;

    /// Smallest over largest singular value of matrix(); 0 for the zero matrix.
    double rank2_margin() const;
    bool rank2() const { return rank2_margin() > kRankTolerance; }

    /// Signed 2x2 minors (A1A5 - A2A4, A1A6 - A3A4, A2A6 - A3A5).
    std::array<double, 3> minors() const;
};

/// Membership in the class of admissible quadratic models with constant C:
/// all |Ai| <= C and the largest minor magnitude is at least 1/C.
bool in_L(const QuadCoeffs& A, double C);

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double length() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Distance between two closed intervals (0 when they overlap).
double distance(const Interval& a, const Interval& b);

struct Domain {
    Interval t;
    Interval s;
};

struct SurfaceJet {
    Vec4 value, dt, ds, dtt, dts, dss;
};

// ---------------------------------------------------------------------------
// Curves

class Curve {
public:
    virtual ~Curve() = default;
    /// order-th derivative at t, order in [0, 4].
    virtual Vec4 derivative(int order, double t) const = 0;
    Vec4 value(double t) const { return derivative(0, t); }
};

/// (t, t^2, t^3, t^4) with analytic derivatives.
class MomentCurve final : public Curve {
public:
    Vec4 derivative(int order, double t) const override;
};

/// Each component is a polynomial given by ascending coefficients.
class PolynomialCurve final : public Curve {
public:
    explicit PolynomialCurve(std::array<std::vector<double>, 4> coeffs);
    Vec4 derivative(int order, double t) const override;

private:
    std::array<std::vector<double>, 4> coeffs_;
};

/// Value-only curve; derivatives by five-point central differences
/// (step 1e-4 for orders 1-2, wider steps for orders 3-4). The function must
/// be defined on a neighbourhood of [0,1].
class SampledCurve final : public Curve {
public:
    explicit SampledCurve(std::function<Vec4(double)> f);
    Vec4 derivative(int order, double t) const override;

private:
    std::function<Vec4(double)> f_;
};

// ---------------------------------------------------------------------------
// Surfaces

enum class SurfaceKind { quadratic, curve_lift, custom };

class SurfaceImpl;

/// Immutable, cheaply copyable handle to a parametrized surface.
class Surface {
public:
    explicit Surface(std::shared_ptr<const SurfaceImpl> impl);

    SurfaceKind kind() const;
    Domain domain() const;
    Vec4 value(double t, double s) const;
    SurfaceJet jet(double t, double s) const;

    /// Present for the quadratic kind.
    const QuadCoeffs* quad() const;
    /// Present for the curve-lift kind.
    const Curve* curve() const;
    /// Set for curve lifts whose parameter intervals touch or overlap.
    bool overlap_warning() const;

private:
    std::shared_ptr<const SurfaceImpl> impl_;
};

/// Psi_A(t,s) = (t, s, A1 t^2 + 2 A2 ts + A3 s^2, A4 t^2 + 2 A5 ts + A6 s^2) on [0,1]^2.
Surface quad_surface(const QuadCoeffs& A);

/// Psi(t,s) = Phi(t) + Phi(s) on I1 x I2.
Surface curve_lift(std::shared_ptr<const Curve> curve, Interval I1, Interval I2);

/// Arbitrary surface given by values; derivatives by central differences.
Surface custom_surface(std::function<Vec4(double, double)> f, Domain domain = {});

// ---------------------------------------------------------------------------
// Normal form and nondegeneracy

struct FrameOptions {
    double tangent_rotation = 0.0;  ///< radians, applied to the canonical tangent pair
    double normal_rotation = 0.0;   ///< radians, applied to the canonical normal pair
};

struct NormalForm {
    Eigen::Matrix<double, 4, 2> tangent;  ///< orthonormal columns spanning {Psi_t, Psi_s}
    Eigen::Matrix<double, 4, 2> normal;   ///< orthonormal columns completing the frame
    QuadCoeffs A;
    /// Largest |normal coordinate - quadratic model| over the 0.1-radius patch.
    double residual = 0.0;
};

/// Represents the surface near (t0,s0) as (u, v, q1(u,v), q2(u,v)) + O(|(u,v)|^3)
/// in an orthonormal frame. The normal pair is ambiguous up to an orthogonal
/// 2x2 mixing; the canonical choice orders {Psi_tt, Psi_ts} projections by norm.
/// Throws ErrorCode::degenerate when Psi_t and Psi_s are linearly dependent.
NormalForm normal_form(const Surface& surface, double t0, double s0, const FrameOptions& frame = {});

struct RankInfo {
    int rank = 0;
    /// sigma_4 / sigma_1 of the 4x5 derivative matrix.
    double margin = 0.0;
};

RankInfo rank5_info(const Surface& surface, double t, double s);

/// rank[Psi_t, Psi_s, Psi_tt, Psi_ss, Psi_ts] == 4.
bool rank5_check(const Surface& surface, double t, double s);

/// det of the matrix whose i-th row is the i-th derivative of the curve at t_i.
double curve_det(const Curve& curve, double t1, double t2, double t3, double t4);

/// det of the rows [Phi'(t); Phi'(s); Phi''(t); Phi''(s)].
double lift_det(const Curve& curve, double t, double s);

}  // namespace declab::geometry
