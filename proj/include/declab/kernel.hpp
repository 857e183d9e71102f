#pragma once

// Direct-summation kernel for oscillatory sums  sum_n c_n e(x . P_n),  e(z) = exp(2 pi i z).
//
// Phases are carried in turns (cycles) and reduced modulo 1 exactly before the
// trigonometric evaluation, so accuracy does not degrade with |x . P_n|
// beyond the rounding already present in the dot product.

#include "declab/common.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace declab::kernel {

/// e(turns) = cos(2 pi turns) + i sin(2 pi turns), accurate to a few ulp.
Complex unit_phasor(double turns);

/// Batched form of unit_phasor; all spans must have equal length.
void unit_phasors(std::span<const double> turns, std::span<double> re, std::span<double> im);

/// Scratch buffers for PhaseSum::evaluate; one per thread.
struct Workspace {
    std::vector<double> turns, re, im;
};

/// Nodes P_n in R^4 (unused trailing coordinates are zero) with complex coefficients,
/// partitioned into contiguous groups. Immutable after construction.
class PhaseSum {
public:
    PhaseSum() = default;

    /// `group` assigns each node to a group in [0, group_count). Nodes are reordered
    /// (stably) so each group is contiguous; group_count may exceed the number of
    /// non-empty groups.
    PhaseSum(std::span<const Vec4> positions, std::span<const Complex> coeffs,
             std::span<const std::size_t> group, std::size_t group_count);

    std::size_t size() const noexcept { return re_.size(); }
    std::size_t group_count() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }

    /// Writes the per-group sums to `group_sums` (length group_count()) and returns the total.
    Complex evaluate(const Vec4& x, std::span<Complex> group_sums, Workspace& ws) const;

    /// Total only.
    Complex evaluate(const Vec4& x, Workspace& ws) const;

private:
    void fill_terms(const Vec4& x, Workspace& ws) const;

    std::vector<double> p0_, p1_, p2_, p3_;
    std::vector<double> re_, im_;
    std::vector<std::size_t> offsets_;
};

}  // namespace declab::kernel
