#include "declab/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace declab::kernel {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Taylor coefficients for sin and cos on [-pi/4, pi/4]; truncation below 1e-17.
inline void sincos_reduced(double theta, double& c, double& s) {
    const double t2 = theta * theta;
    double ps = -7.6471637318198164759e-13;  // -1/15!
    ps = ps * t2 + 1.6059043836821614599e-10;
    ps = ps * t2 - 2.5052108385441718775e-08;
    ps = ps * t2 + 2.7557319223985890653e-06;
    ps = ps * t2 - 1.9841269841269841270e-04;
    ps = ps * t2 + 8.3333333333333333333e-03;
    ps = ps * t2 - 1.6666666666666666667e-01;
    s = theta + theta * t2 * ps;

    double pc = 4.7794773323873852974e-14;  // 1/16!
    pc = pc * t2 - 1.1470745597729724714e-11;
    pc = pc * t2 + 2.0876756987868098979e-09;
    pc = pc * t2 - 2.7557319223985890653e-07;
    pc = pc * t2 + 2.4801587301587301587e-05;
    pc = pc * t2 - 1.3888888888888888889e-03;
    pc = pc * t2 + 4.1666666666666666667e-02;
    pc = pc * t2 - 0.5;
    c = 1.0 + t2 * pc;
}

inline void phasor(double turns, double& re, double& im) {
    const double r = turns - std::floor(turns + 0.5);       // [-1/2, 1/2], exact
    const double q = std::floor(4.0 * r + 0.5);             // quadrant in {-2..2}
    const double z = r - 0.25 * q;                          // [-1/8, 1/8], exact
    double c, s;
    sincos_reduced(kTwoPi * z, c, s);
    // Rotate by k quarter turns without branches so the loop vectorizes.
    const double k = q - 4.0 * std::floor(0.25 * q);        // {0,1,2,3}
    const double h = std::floor(0.5 * k);
    const double odd = k - 2.0 * h;
    const double f = std::floor(0.5 * (k + 1.0));
    const double sign_re = 1.0 - 2.0 * (f - 2.0 * std::floor(0.5 * f));
    const double sign_im = 1.0 - 2.0 * h;
    re = sign_re * (odd * s + (1.0 - odd) * c);
    im = sign_im * (odd * c + (1.0 - odd) * s);
}

}  // namespace

Complex unit_phasor(double turns) {
    double re, im;
    phasor(turns, re, im);
    return {re, im};
}

void unit_phasors(std::span<const double> turns, std::span<double> re, std::span<double> im) {
    const std::size_t n = turns.size();
    const double* t = turns.data();
    double* pr = re.data();
    double* pi = im.data();
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i) phasor(t[i], pr[i], pi[i]);
}

PhaseSum::PhaseSum(std::span<const Vec4> positions, std::span<const Complex> coeffs,
                   std::span<const std::size_t> group, std::size_t group_count) {
    require(positions.size() == coeffs.size() && coeffs.size() == group.size(),
            "PhaseSum: positions, coefficients and groups must have equal length");
    const std::size_t n = positions.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t g : group) require(g < group_count, "PhaseSum: group index out of range");
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return group[a] < group[b]; });

    p0_.resize(n); p1_.resize(n); p2_.resize(n); p3_.resize(n);
    re_.resize(n); im_.resize(n);
    offsets_.assign(group_count + 1, 0);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = order[k];
        p0_[k] = positions[i][0];
        p1_[k] = positions[i][1];
        p2_[k] = positions[i][2];
        p3_[k] = positions[i][3];
        re_[k] = coeffs[i].real();
        im_[k] = coeffs[i].imag();
        ++offsets_[group[i] + 1];
    }
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
}

void PhaseSum::fill_terms(const Vec4& x, Workspace& ws) const {
    const std::size_t n = size();
    ws.turns.resize(n);
    ws.re.resize(n);
    ws.im.resize(n);
    const double x0 = x[0], x1 = x[1], x2 = x[2], x3 = x[3];
    const double *a = p0_.data(), *b = p1_.data(), *c = p2_.data(), *d = p3_.data();
    const double *cr = re_.data(), *ci = im_.data();
    double *tr = ws.re.data(), *ti = ws.im.data();
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i) {
        const double turns = x0 * a[i] + x1 * b[i] + x2 * c[i] + x3 * d[i];
        double er, ei;
        phasor(turns, er, ei);
        tr[i] = cr[i] * er - ci[i] * ei;
        ti[i] = cr[i] * ei + ci[i] * er;
    }
}

Complex PhaseSum::evaluate(const Vec4& x, std::span<Complex> group_sums, Workspace& ws) const {
    require(group_sums.size() == group_count(), "PhaseSum: group_sums has wrong length");
    fill_terms(x, ws);
    double total_re = 0.0, total_im = 0.0;
    for (std::size_t g = 0; g + 1 < offsets_.size(); ++g) {
        double sr = 0.0, si = 0.0;
#pragma omp simd reduction(+ : sr, si)
        for (std::size_t i = offsets_[g]; i < offsets_[g + 1]; ++i) {
            sr += ws.re[i];
            si += ws.im[i];
        }
        group_sums[g] = {sr, si};
        total_re += sr;
        total_im += si;
    }
    return {total_re, total_im};
}

Complex PhaseSum::evaluate(const Vec4& x, Workspace& ws) const {
    fill_terms(x, ws);
    double sr = 0.0, si = 0.0;
#pragma omp simd reduction(+ : sr, si)
    for (std::size_t i = 0; i < size(); ++i) {
        sr += ws.re[i];
        si += ws.im[i];
    }
    return {sr, si};
}

}  // namespace declab::kernel
