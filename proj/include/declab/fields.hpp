#pragma once

// Amplitude fields g on [0,1]^2, dyadic cap partitions, and the extension operator
//   E g(x) = int g(t,s) e(x . Psi(t,s)) dt ds        (continuous mode, tensor Gauss-Legendre)
//   E g(x) = sum_n a_n e(x . Psi(xi_n))              (atomic mode)

#include "declab/geometry.hpp"
#include "declab/kernel.hpp"
#include "declab/transversality.hpp"

#include <functional>
#include <span>
#include <vector>

namespace declab::fields {

using geometry::Surface;
using transversality::DyadicSquare;

enum class Mode { continuous, atomic };

using Amplitude = std::function<Complex(double t, double s)>;

/// Tensor Gauss-Legendre rule: `order` x `order` nodes on every dyadic cell of
/// level `cell_level` (or of the support square's level, if finer).
struct QuadratureSpec {
    int cell_level = 0;
    int order = 4;
};

/// Gauss-Legendre nodes and weights on [0,1] (Golub-Welsch).
struct GaussRule {
    std::vector<double> nodes, weights;
};
GaussRule gauss_legendre(int order);

class AmplitudeField {
public:
    AmplitudeField() = default;

    /// Tensor quadrature of g over the union of `support` squares.
    static AmplitudeField continuous(Amplitude g, std::vector<DyadicSquare> support, QuadratureSpec q = {});

    /// Point masses; points must lie in [0,1]^2.
    static AmplitudeField atomic(std::vector<Vec2> points, std::vector<Complex> amplitudes,
                                 std::vector<DyadicSquare> support = {DyadicSquare{}});

    /// Continuous field with explicit nodes (used by rescaling); `g` is kept for refinement.
    static AmplitudeField from_nodes(std::vector<Vec2> nodes, std::vector<double> weights, Amplitude g,
                                     std::vector<DyadicSquare> support, QuadratureSpec q);

    Mode mode() const { return mode_; }
    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }
    const std::vector<Vec2>& nodes() const { return nodes_; }
    /// Quadrature weight (continuous) or 1 (atomic).
    const std::vector<double>& weights() const { return weights_; }
    /// Sum terms: weight * g(node) (continuous) or a_n (atomic).
    const std::vector<Complex>& coefficients() const { return coeffs_; }
    const std::vector<DyadicSquare>& support() const { return support_; }
    const QuadratureSpec& quadrature() const { return quad_; }
    const Amplitude& amplitude() const { return g_; }

    /// Sum of weights (support area for continuous fields, point count for atomic).
    double mass() const;

private:
    friend AmplitudeField cap_restrict(const AmplitudeField&, const DyadicSquare&);
    friend AmplitudeField modulate(const AmplitudeField&, const Surface&, const Vec4&);
    friend AmplitudeField conjugate(const AmplitudeField&);
    friend AmplitudeField scaled_copy(const AmplitudeField&, std::vector<Vec2>, std::vector<double>, Complex, Amplitude,
                                      std::vector<DyadicSquare>);

    Mode mode_ = Mode::atomic;
    std::vector<Vec2> nodes_;
    std::vector<double> weights_;
    std::vector<Complex> coeffs_;
    std::vector<DyadicSquare> support_;
    QuadratureSpec quad_;
    Amplitude g_;
};

/// Internal helper for rescaling: same mode, remapped nodes, coefficients times `factor`.
AmplitudeField scaled_copy(const AmplitudeField& f, std::vector<Vec2> nodes, std::vector<double> weights,
                           Complex factor, Amplitude g, std::vector<DyadicSquare> support);

/// Keeps nodes inside the half-open cap (right/top closed on the boundary of [0,1]^2).
AmplitudeField cap_restrict(const AmplitudeField& f, const DyadicSquare& cap);

/// Refines the tensor rule by splitting every cell `factor` times per side (factor a power of two).
AmplitudeField quadrature_refine(const AmplitudeField& f, int factor);

/// g -> g . e(y . Psi).
AmplitudeField modulate(const AmplitudeField& f, const Surface& surface, const Vec4& y);

/// g -> conj(g).
AmplitudeField conjugate(const AmplitudeField& f);

// ---------------------------------------------------------------------------
// Field constructors used by scenarios and configs

/// The whole unit square as a single level-0 support square.
std::vector<DyadicSquare> unit_support();

/// g = 1.
AmplitudeField const_field(std::vector<DyadicSquare> support, QuadratureSpec q);

/// g = e(theta_D) with theta_D uniform per level-`phase_level` square, derived from seed.
Amplitude random_phase(std::uint64_t seed, int phase_level);
AmplitudeField random_phase_field(std::uint64_t seed, int phase_level, std::vector<DyadicSquare> support,
                                  QuadratureSpec q);

/// Unit masses at (0, n/M), n = 1..M, M = ceil(sqrt(N)).
AmplitudeField flat_line_field(std::int64_t N);

// ---------------------------------------------------------------------------
// Cap partitions and evaluation

struct CapPartition {
    int level = 0;
    std::vector<DyadicSquare> caps;  ///< sorted by (i, j)

    /// Index into caps, or -1.
    std::ptrdiff_t index_of(const DyadicSquare& d) const;
};

/// All level-m squares covering the support (finer support squares map to their ancestor).
CapPartition cap_partition(const std::vector<DyadicSquare>& support, int level);

/// Precomputed surface positions of a field's nodes, grouped by cap.
class Extension {
public:
    Extension() = default;
    Extension(const Surface& surface, const AmplitudeField& field, const CapPartition& caps);
    /// Single group covering the whole field.
    Extension(const Surface& surface, const AmplitudeField& field);
    /// Nodes given directly by their positions in R^4 (for non-surface uses such as the parabola).
    Extension(std::span<const Vec4> positions, std::span<const Complex> coeffs, std::span<const std::size_t> group,
              std::size_t group_count);

    std::size_t size() const { return sum_.size(); }
    std::size_t cap_count() const { return sum_.group_count(); }

    Complex evaluate(const Vec4& x, kernel::Workspace& ws) const;
    Complex evaluate(const Vec4& x, std::span<Complex> per_cap, kernel::Workspace& ws) const;

private:
    kernel::PhaseSum sum_;
};

/// One-off evaluation (builds an Extension internally).
Complex extension_eval(const Surface& surface, const AmplitudeField& field, const Vec4& x);

}  // namespace declab::fields
