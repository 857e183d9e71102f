#include "declab/geometry.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>

namespace declab::geometry {

bool QuadCoeffs::finite() const {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

Eigen::Matrix<double, 2, 3> QuadCoeffs::matrix() const {
    Eigen::Matrix<double, 2, 3> m;
    m << a[0], a[1], a[2], a[3], a[4], a[5];
    return m;
}

double QuadCoeffs::rank2_margin() const {
    Eigen::JacobiSVD<Eigen::Matrix<double, 2, 3>> svd(matrix());
    const auto& sv = svd.singularValues();
    if (sv[0] == 0.0) return 0.0;
    return sv[1] / sv[0];
}

std::array<double, 3> QuadCoeffs::minors() const {
    return {a[0] * a[4] - a[1] * a[3], a[0] * a[5] - a[2] * a[3], a[1] * a[5] - a[2] * a[4]};
}

bool in_L(const QuadCoeffs& A, double C) {
    require(C > 0.0 && std::isfinite(C), "in_L: C must be positive");
    require(A.finite(), "in_L: coefficients must be finite");
    for (double v : A.a)
        if (std::abs(v) > C) return false;
    const auto m = A.minors();
    const double best = std::max({std::abs(m[0]), std::abs(m[1]), std::abs(m[2])});
    return best >= 1.0 / C;
}

double distance(const Interval& a, const Interval& b) {
    return std::max(0.0, std::max(a.lo - b.hi, b.lo - a.hi));
}

// ---------------------------------------------------------------------------
// Curves

Vec4 MomentCurve::derivative(int order, double t) const {
    require(order >= 0 && order <= 4, "curve derivative order must be in [0,4]");
    Vec4 out;
    for (int j = 1; j <= 4; ++j) {
        if (order > j) {
            out[j - 1] = 0.0;
            continue;
        }
        double f = 1.0;
        for (int k = 0; k < order; ++k) f *= j - k;
        out[j - 1] = f * std::pow(t, j - order);
    }
    return out;
}

PolynomialCurve::PolynomialCurve(std::array<std::vector<double>, 4> coeffs) : coeffs_(std::move(coeffs)) {
    for (const auto& c : coeffs_)
        for (double v : c) require(std::isfinite(v), "polynomial curve coefficients must be finite");
}

Vec4 PolynomialCurve::derivative(int order, double t) const {
    require(order >= 0 && order <= 4, "curve derivative order must be in [0,4]");
    Vec4 out;
    for (int j = 0; j < 4; ++j) {
        const auto& c = coeffs_[j];
        double acc = 0.0;
        for (int n = static_cast<int>(c.size()) - 1; n >= order; --n) {
            double f = 1.0;
            for (int k = 0; k < order; ++k) f *= n - k;
            acc = acc * t + f * c[n];
        }
        out[j] = acc;
    }
    return out;
}

SampledCurve::SampledCurve(std::function<Vec4(double)> f) : f_(std::move(f)) {
    require(static_cast<bool>(f_), "sampled curve needs a function");
}

Vec4 SampledCurve::derivative(int order, double t) const {
    require(order >= 0 && order <= 4, "curve derivative order must be in [0,4]");
    const auto& f = f_;
    switch (order) {
        case 0: return f(t);
        case 1: {
            const double h = 1e-4;
            return (f(t - 2 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2 * h)) / (12.0 * h);
        }
        case 2: {
            const double h = 1e-3;
            return (-f(t - 2 * h) + 16.0 * f(t - h) - 30.0 * f(t) + 16.0 * f(t + h) - f(t + 2 * h)) /
                   (12.0 * h * h);
        }
        case 3: {
            const double h = 1e-2;
            return (-f(t - 2 * h) + 2.0 * f(t - h) - 2.0 * f(t + h) + f(t + 2 * h)) / (2.0 * h * h * h);
        }
        default: {
            const double h = 2e-2;
            return (f(t - 2 * h) - 4.0 * f(t - h) + 6.0 * f(t) - 4.0 * f(t + h) + f(t + 2 * h)) /
                   (h * h * h * h);
        }
    }
}

// ---------------------------------------------------------------------------
// Surfaces

class SurfaceImpl {
public:
    virtual ~SurfaceImpl() = default;
    virtual SurfaceKind kind() const = 0;
    virtual Domain domain() const = 0;
    virtual Vec4 value(double t, double s) const = 0;
    virtual SurfaceJet jet(double t, double s) const = 0;
    virtual const QuadCoeffs* quad() const { return nullptr; }
    virtual const Curve* curve() const { return nullptr; }
    virtual bool overlap_warning() const { return false; }
};

namespace {

class QuadSurface final : public SurfaceImpl {
public:
    explicit QuadSurface(const QuadCoeffs& A) : A_(A) {}
    SurfaceKind kind() const override { return SurfaceKind::quadratic; }
    Domain domain() const override { return {}; }
    const QuadCoeffs* quad() const override { return &A_; }

    Vec4 value(double t, double s) const override {
        const auto& a = A_.a;
        return {t, s, a[0] * t * t + 2.0 * a[1] * t * s + a[2] * s * s,
                a[3] * t * t + 2.0 * a[4] * t * s + a[5] * s * s};
    }

    SurfaceJet jet(double t, double s) const override {
        const auto& a = A_.a;
        SurfaceJet j;
        j.value = value(t, s);
        j.dt = {1.0, 0.0, 2.0 * (a[0] * t + a[1] * s), 2.0 * (a[3] * t + a[4] * s)};
        j.ds = {0.0, 1.0, 2.0 * (a[1] * t + a[2] * s), 2.0 * (a[4] * t + a[5] * s)};
        j.dtt = {0.0, 0.0, 2.0 * a[0], 2.0 * a[3]};
        j.dts = {0.0, 0.0, 2.0 * a[1], 2.0 * a[4]};
        j.dss = {0.0, 0.0, 2.0 * a[2], 2.0 * a[5]};
        return j;
    }

private:
    QuadCoeffs A_;
};

class LiftSurface final : public SurfaceImpl {
public:
    LiftSurface(std::shared_ptr<const Curve> curve, Interval I1, Interval I2)
        : curve_(std::move(curve)), I1_(I1), I2_(I2) {}
    SurfaceKind kind() const override { return SurfaceKind::curve_lift; }
    Domain domain() const override { return {I1_, I2_}; }
    const Curve* curve() const override { return curve_.get(); }
    bool overlap_warning() const override { return !(distance(I1_, I2_) > 0.0); }

    Vec4 value(double t, double s) const override { return curve_->value(t) + curve_->value(s); }

    SurfaceJet jet(double t, double s) const override {
        SurfaceJet j;
        j.value = value(t, s);
        j.dt = curve_->derivative(1, t);
        j.ds = curve_->derivative(1, s);
        j.dtt = curve_->derivative(2, t);
        j.dss = curve_->derivative(2, s);
        j.dts = Vec4::Zero();
        return j;
    }

private:
    std::shared_ptr<const Curve> curve_;
    Interval I1_, I2_;
};

class CustomSurface final : public SurfaceImpl {
public:
    CustomSurface(std::function<Vec4(double, double)> f, Domain d) : f_(std::move(f)), domain_(d) {}
    SurfaceKind kind() const override { return SurfaceKind::custom; }
    Domain domain() const override { return domain_; }
    Vec4 value(double t, double s) const override { return f_(t, s); }

    SurfaceJet jet(double t, double s) const override {
        const auto& f = f_;
        SurfaceJet j;
        j.value = f(t, s);
        const double h1 = 1e-4;
        j.dt = (f(t - 2 * h1, s) - 8.0 * f(t - h1, s) + 8.0 * f(t + h1, s) - f(t + 2 * h1, s)) / (12.0 * h1);
        j.ds = (f(t, s - 2 * h1) - 8.0 * f(t, s - h1) + 8.0 * f(t, s + h1) - f(t, s + 2 * h1)) / (12.0 * h1);
        const double h2 = 1e-3;
        const double d2 = 12.0 * h2 * h2;
        j.dtt = (-f(t - 2 * h2, s) + 16.0 * f(t - h2, s) - 30.0 * j.value + 16.0 * f(t + h2, s) -
                 f(t + 2 * h2, s)) / d2;
        j.dss = (-f(t, s - 2 * h2) + 16.0 * f(t, s - h2) - 30.0 * j.value + 16.0 * f(t, s + h2) -
                 f(t, s + 2 * h2)) / d2;
        j.dts = (f(t + h2, s + h2) - f(t + h2, s - h2) - f(t - h2, s + h2) + f(t - h2, s - h2)) /
                (4.0 * h2 * h2);
        return j;
    }

private:
    std::function<Vec4(double, double)> f_;
    Domain domain_;
};

}  // namespace

Surface::Surface(std::shared_ptr<const SurfaceImpl> impl) : impl_(std::move(impl)) {
    require(impl_ != nullptr, "null surface");
}

SurfaceKind Surface::kind() const { return impl_->kind(); }
Domain Surface::domain() const { return impl_->domain(); }
Vec4 Surface::value(double t, double s) const { return impl_->value(t, s); }
SurfaceJet Surface::jet(double t, double s) const { return impl_->jet(t, s); }
const QuadCoeffs* Surface::quad() const { return impl_->quad(); }
const Curve* Surface::curve() const { return impl_->curve(); }
bool Surface::overlap_warning() const { return impl_->overlap_warning(); }

Surface quad_surface(const QuadCoeffs& A) {
    require(A.finite(), "quad_surface: coefficients must be finite");
    return Surface(std::make_shared<QuadSurface>(A));
}

Surface curve_lift(std::shared_ptr<const Curve> curve, Interval I1, Interval I2) {
    require(curve != nullptr, "curve_lift: null curve");
    for (const Interval& I : {I1, I2})
        require(I.lo >= 0.0 && I.hi <= 1.0 && I.lo < I.hi, "curve_lift: intervals must be nonempty subsets of [0,1]");
    return Surface(std::make_shared<LiftSurface>(std::move(curve), I1, I2));
}

Surface custom_surface(std::function<Vec4(double, double)> f, Domain domain) {
    require(static_cast<bool>(f), "custom_surface: null function");
    return Surface(std::make_shared<CustomSurface>(std::move(f), domain));
}

// ---------------------------------------------------------------------------
// Normal form

namespace {

using Mat42 = Eigen::Matrix<double, 4, 2>;

// Unit vector orthogonal to the given orthonormal columns (deterministic).
Vec4 complete(const Eigen::Matrix<double, 4, Eigen::Dynamic>& basis) {
    Vec4 best = Vec4::Zero();
    double best_norm = -1.0;
    for (int k = 0; k < 4; ++k) {
        Vec4 e = Vec4::Unit(k);
        e -= basis * (basis.transpose() * e);
        e -= basis * (basis.transpose() * e);
        const double n = e.norm();
        if (n > best_norm + 1e-12) {
            best_norm = n;
            best = e / n;
        }
    }
    return best;
}

Mat42 rotate(const Mat42& frame, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat42 out;
    out.col(0) = c * frame.col(0) + s * frame.col(1);
    out.col(1) = -s * frame.col(0) + c * frame.col(1);
    return out;
}

}  // namespace

NormalForm normal_form(const Surface& surface, double t0, double s0, const FrameOptions& frame) {
    const Domain dom = surface.domain();
    require(dom.t.contains(t0) && dom.s.contains(s0), "normal_form: point outside the surface domain");
    const SurfaceJet jet = surface.jet(t0, s0);

    Mat42 J;
    J << jet.dt, jet.ds;
    {
        Eigen::JacobiSVD<Mat42> svd(J);
        const auto& sv = svd.singularValues();
        if (!(sv[0] > 0.0) || sv[1] <= kRankTolerance * sv[0])
            fail(ErrorCode::degenerate, "normal_form: Psi_t and Psi_s are linearly dependent");
    }

    Mat42 E;
    E.col(0) = J.col(0).normalized();
    Vec4 e2 = J.col(1) - E.col(0) * E.col(0).dot(J.col(1));
    E.col(1) = e2.normalized();
    E = rotate(E, frame.tangent_rotation);

    auto project = [&](const Vec4& v) -> Vec4 { return v - E * (E.transpose() * v); };
    const double scale = std::max({jet.dtt.norm(), jet.dts.norm(), jet.dss.norm(), 1.0});

    Vec4 c1 = project(jet.dtt), c2 = project(jet.dts);
    if (c2.norm() > c1.norm()) std::swap(c1, c2);
    const Vec4 c3 = project(jet.dss);

    Eigen::Matrix<double, 4, Eigen::Dynamic> basis = E;
    Mat42 N;
    int filled = 0;
    const std::array<Vec4, 3> candidates{c1, c2, c3};
    for (const Vec4& cand : candidates) {
        if (filled == 2) break;
        Vec4 v = cand - basis * (basis.transpose() * cand);
        v -= basis * (basis.transpose() * v);
        if (v.norm() <= kRankTolerance * scale) continue;
        N.col(filled++) = v.normalized();
        basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
        basis.col(basis.cols() - 1) = N.col(filled - 1);
    }
    while (filled < 2) {
        N.col(filled++) = complete(basis);
        basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
        basis.col(basis.cols() - 1) = N.col(filled - 1);
    }
    N = rotate(N, frame.normal_rotation);

    const Eigen::Matrix2d G = (E.transpose() * J).inverse();
    NormalForm nf;
    nf.tangent = E;
    nf.normal = N;
    Eigen::Matrix2d Q[2];
    for (int k = 0; k < 2; ++k) {
        Eigen::Matrix2d H;
        const Vec4 n = N.col(k);
        H << n.dot(jet.dtt), n.dot(jet.dts), n.dot(jet.dts), n.dot(jet.dss);
        Q[k] = 0.5 * G.transpose() * H * G;
    }
    nf.A.a = {Q[0](0, 0), Q[0](0, 1), Q[0](1, 1), Q[1](0, 0), Q[1](0, 1), Q[1](1, 1)};

    // Residual over the 0.1-radius patch in (u,v), reached through the linearized inverse.
    const double radius = 0.1;
    double residual = 0.0;
    for (int ir = 1; ir <= 4; ++ir) {
        for (int ia = 0; ia < 16; ++ia) {
            const double r = radius * ir / 4.0;
            const double ang = 2.0 * std::numbers::pi * ia / 16.0;
            const Eigen::Vector2d uv_target(r * std::cos(ang), r * std::sin(ang));
            const Eigen::Vector2d d = G * uv_target;
            const double t = t0 + d[0], s = s0 + d[1];
            if (!dom.t.contains(t) || !dom.s.contains(s)) continue;
            const Vec4 P = surface.value(t, s) - jet.value;
            const Eigen::Vector2d uv = E.transpose() * P;
            if (uv.norm() > radius) continue;
            for (int k = 0; k < 2; ++k) {
                const double model = uv.dot(Q[k] * uv);
                residual = std::max(residual, std::abs(N.col(k).dot(P) - model));
            }
        }
    }
    nf.residual = residual;
    return nf;
}

RankInfo rank5_info(const Surface& surface, double t, double s) {
    const SurfaceJet j = surface.jet(t, s);
    Eigen::Matrix<double, 4, 5> M;
    M << j.dt, j.ds, j.dtt, j.dss, j.dts;
    Eigen::JacobiSVD<Eigen::Matrix<double, 4, 5>> svd(M);
    const auto& sv = svd.singularValues();
    RankInfo info;
    if (!(sv[0] > 0.0)) return info;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > kRankTolerance * sv[0]) ++info.rank;
    info.margin = sv[3] / sv[0];
    return info;
}

bool rank5_check(const Surface& surface, double t, double s) { return rank5_info(surface, t, s).rank == 4; }

double curve_det(const Curve& curve, double t1, double t2, double t3, double t4) {
    Eigen::Matrix4d M;
    M.row(0) = curve.derivative(1, t1).transpose();
    M.row(1) = curve.derivative(2, t2).transpose();
    M.row(2) = curve.derivative(3, t3).transpose();
    M.row(3) = curve.derivative(4, t4).transpose();
    return M.determinant();
}

double lift_det(const Curve& curve, double t, double s) {
    if (t == s) return 0.0;  // repeated rows
    Eigen::Matrix4d M;
    M.row(0) = curve.derivative(1, t).transpose();
    M.row(1) = curve.derivative(1, s).transpose();
    M.row(2) = curve.derivative(2, t).transpose();
    M.row(3) = curve.derivative(2, s).transpose();
    return M.determinant();
}

}  // namespace declab::geometry
