#pragma once

// Parabolic rescaling of Psi_A: a square R = [a,a+delta] x [b,b+delta] is mapped onto [0,1]^2
// by eta(t',s') = (a + delta t', b + delta s'), and
//   E_R g(x) = delta^2 e(x . Psi(a,b)) E_{[0,1]^2} g^{a,b}(xbar).

#include "declab/fields.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace declab::rescale {

using fields::AmplitudeField;
using geometry::QuadCoeffs;
using transversality::DyadicSquare;

struct Square {
    double a = 0.0, b = 0.0, delta = 1.0;

    static Square from_dyadic(const DyadicSquare& d);
    bool contains(double t, double s, double tol = 0.0) const;
    /// The sub-square inner (in rescaled coordinates) mapped back through eta.
    Square compose(const Square& inner) const;
};

struct ShearMap {
    QuadCoeffs A;
    Square R;

    Vec4 apply(const Vec4& x) const;
    /// x . Psi(a, b), the phase dropped by the identity.
    double phase_offset(const Vec4& x) const;
};

Vec4 shear_point(const ShearMap& map, const Vec4& x);

/// g^{a,b}: nodes mapped by eta^{-1}; coefficients divided by delta^2 (weights too, for
/// continuous fields), so that delta^2 E g^{a,b}(xbar) carries the same mass as E_R g(x).
AmplitudeField rescale_field(const AmplitudeField& field, const Square& R);

/// max over random x with |x| <= delta^{-2} of | |E_R g(x)| - delta^2 |E g^{a,b}(xbar)| | / (delta^2 |E g^{a,b}| + 1e-30).
double rescaling_residual(const QuadCoeffs& A, const AmplitudeField& field, const Square& R, int trials,
                          std::uint64_t seed);

/// Level-m caps inside the dyadic square R paired with their images (level m - level(R)) in [0,1]^2.
std::vector<std::pair<DyadicSquare, DyadicSquare>> cap_correspondence(const DyadicSquare& R, int cap_level);

}  // namespace declab::rescale
