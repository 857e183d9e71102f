#include "declab/fields.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace declab::fields {

GaussRule gauss_legendre(int order) {
    require(order >= 1 && order <= 64, "gauss_legendre: order must be in [1, 64]");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        J(k, k - 1) = J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    for (int k = 0; k < order; ++k) {
        const double v = es.eigenvectors()(0, k);
        rule.nodes[k] = 0.5 * (es.eigenvalues()[k] + 1.0);
        rule.weights[k] = v * v;
    }
    // Symmetrize so the rule is exactly mirror-symmetric and weights sum to 1.
    for (int k = 0; k < order / 2; ++k) {
        const int m = order - 1 - k;
        const double x = 0.5 * (rule.nodes[k] + 1.0 - rule.nodes[m]);
        rule.nodes[k] = x;
        rule.nodes[m] = 1.0 - x;
        const double w = 0.5 * (rule.weights[k] + rule.weights[m]);
        rule.weights[k] = rule.weights[m] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0.5;
    double total = 0.0;
    for (double w : rule.weights) total += w;
    for (double& w : rule.weights) w /= total;
    return rule;
}

namespace {

void check_support(const std::vector<DyadicSquare>& support) {
    require(!support.empty(), "field support must not be empty");
    for (const auto& d : support) {
        require(d.level >= 0 && d.level <= 30, "support square level out of range");
        const std::int64_t n = std::int64_t{1} << d.level;
        require(d.i >= 0 && d.j >= 0 && d.i < n && d.j < n, "support square outside [0,1]^2");
    }
}

}  // namespace

AmplitudeField AmplitudeField::continuous(Amplitude g, std::vector<DyadicSquare> support, QuadratureSpec q) {
    require(static_cast<bool>(g), "continuous field needs an amplitude function");
    require(q.cell_level >= 0 && q.cell_level <= 14, "quadrature cell level out of range");
    check_support(support);
    const GaussRule rule = gauss_legendre(q.order);
    std::vector<Vec2> nodes;
    std::vector<double> weights;
    for (const auto& d : support) {
        const int level = std::max(q.cell_level, d.level);
        const int shift = level - d.level;
        const std::int64_t per_side = std::int64_t{1} << shift;
        const double h = std::ldexp(1.0, -level);
        for (std::int64_t a = 0; a < per_side; ++a)
            for (std::int64_t b = 0; b < per_side; ++b) {
                const double t0 = static_cast<double>((d.i << shift) + a) * h;
                const double s0 = static_cast<double>((d.j << shift) + b) * h;
                for (int u = 0; u < q.order; ++u)
                    for (int v = 0; v < q.order; ++v) {
                        nodes.emplace_back(t0 + h * rule.nodes[u], s0 + h * rule.nodes[v]);
                        weights.push_back(h * h * rule.weights[u] * rule.weights[v]);
                    }
            }
    }
    return from_nodes(std::move(nodes), std::move(weights), std::move(g), std::move(support), q);
}

AmplitudeField AmplitudeField::from_nodes(std::vector<Vec2> nodes, std::vector<double> weights, Amplitude g,
                                          std::vector<DyadicSquare> support, QuadratureSpec q) {
    require(nodes.size() == weights.size(), "from_nodes: nodes and weights differ in length");
    require(static_cast<bool>(g), "from_nodes: amplitude function required");
    AmplitudeField f;
    f.mode_ = Mode::continuous;
    f.coeffs_.resize(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const Complex v = g(nodes[k][0], nodes[k][1]);
        require(std::isfinite(v.real()) && std::isfinite(v.imag()), "amplitude is not finite");
        f.coeffs_[k] = weights[k] * v;
    }
    f.nodes_ = std::move(nodes);
    f.weights_ = std::move(weights);
    f.g_ = std::move(g);
    f.support_ = std::move(support);
    f.quad_ = q;
    return f;
}

AmplitudeField AmplitudeField::atomic(std::vector<Vec2> points, std::vector<Complex> amplitudes,
                                      std::vector<DyadicSquare> support) {
    require(points.size() == amplitudes.size(), "atomic field: points and amplitudes differ in length");
    check_support(support);
    for (const auto& p : points)
        require(p[0] >= 0.0 && p[0] <= 1.0 && p[1] >= 0.0 && p[1] <= 1.0, "atomic point outside [0,1]^2");
    for (const auto& a : amplitudes) require(std::isfinite(a.real()) && std::isfinite(a.imag()), "amplitude is not finite");
    AmplitudeField f;
    f.mode_ = Mode::atomic;
    f.weights_.assign(points.size(), 1.0);
    f.nodes_ = std::move(points);
    f.coeffs_ = std::move(amplitudes);
    f.support_ = std::move(support);
    return f;
}

double AmplitudeField::mass() const {
    double m = 0.0;
    for (double w : weights_) m += w;
    return m;
}

AmplitudeField scaled_copy(const AmplitudeField& f, std::vector<Vec2> nodes, std::vector<double> weights,
                           Complex factor, Amplitude g, std::vector<DyadicSquare> support) {
    require(nodes.size() == f.size() && weights.size() == f.size(), "scaled_copy: size mismatch");
    AmplitudeField out;
    out.mode_ = f.mode_;
    out.nodes_ = std::move(nodes);
    out.weights_ = std::move(weights);
    out.coeffs_.resize(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) out.coeffs_[k] = factor * f.coeffs_[k];
    out.support_ = std::move(support);
    out.quad_ = f.quad_;
    out.g_ = std::move(g);
    return out;
}

AmplitudeField cap_restrict(const AmplitudeField& f, const DyadicSquare& cap) {
    AmplitudeField out;
    out.mode_ = f.mode_;
    out.quad_ = f.quad_;
    out.g_ = f.g_;
    out.support_ = {cap};
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (!cap.contains(f.nodes_[k][0], f.nodes_[k][1])) continue;
        out.nodes_.push_back(f.nodes_[k]);
        out.weights_.push_back(f.weights_[k]);
        out.coeffs_.push_back(f.coeffs_[k]);
    }
    return out;
}

AmplitudeField quadrature_refine(const AmplitudeField& f, int factor) {
    if (f.mode() != Mode::continuous) fail(ErrorCode::invalid_argument, "quadrature_refine: atomic fields cannot be refined");
    require(transversality::is_power_of_two(factor), "quadrature_refine: factor must be a power of two");
    QuadratureSpec q = f.quadrature();
    q.cell_level += transversality::log2_exact(factor);
    return AmplitudeField::continuous(f.amplitude(), f.support(), q);
}

AmplitudeField modulate(const AmplitudeField& f, const Surface& surface, const Vec4& y) {
    AmplitudeField out = f;
    for (std::size_t k = 0; k < f.size(); ++k) {
        const Vec4 P = surface.value(f.nodes_[k][0], f.nodes_[k][1]);
        out.coeffs_[k] *= kernel::unit_phasor(y.dot(P));
    }
    if (f.g_) {
        out.g_ = [g = f.g_, surface, y](double t, double s) { return g(t, s) * kernel::unit_phasor(y.dot(surface.value(t, s))); };
    }
    return out;
}

AmplitudeField conjugate(const AmplitudeField& f) {
    AmplitudeField out = f;
    for (auto& c : out.coeffs_) c = std::conj(c);
    if (f.g_) out.g_ = [g = f.g_](double t, double s) { return std::conj(g(t, s)); };
    return out;
}

std::vector<DyadicSquare> unit_support() { return {DyadicSquare{}}; }

AmplitudeField const_field(std::vector<DyadicSquare> support, QuadratureSpec q) {
    return AmplitudeField::continuous([](double, double) { return Complex(1.0, 0.0); }, std::move(support), q);
}

Amplitude random_phase(std::uint64_t seed, int phase_level) {
    require(phase_level >= 0 && phase_level <= 20, "random_phase: level out of range");
    return [seed, phase_level](double t, double s) {
        const DyadicSquare d = transversality::square_of(phase_level, std::clamp(t, 0.0, 1.0), std::clamp(s, 0.0, 1.0));
        const std::uint64_t key = static_cast<std::uint64_t>(d.i) * (std::uint64_t{1} << phase_level) +
                                  static_cast<std::uint64_t>(d.j);
        const double theta = static_cast<double>(derive_seed(seed, key) >> 11) * 0x1.0p-53;
        return kernel::unit_phasor(theta);
    };
}

AmplitudeField random_phase_field(std::uint64_t seed, int phase_level, std::vector<DyadicSquare> support,
                                  QuadratureSpec q) {
    return AmplitudeField::continuous(random_phase(seed, phase_level), std::move(support), q);
}

AmplitudeField flat_line_field(std::int64_t N) {
    require(N >= 1, "flat_line_field: N must be positive");
    const auto M = static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(N)) - 1e-12));
    std::vector<Vec2> pts;
    std::vector<Complex> amps;
    for (std::int64_t n = 1; n <= M; ++n) {
        pts.emplace_back(0.0, static_cast<double>(n) / static_cast<double>(M));
        amps.emplace_back(1.0, 0.0);
    }
    return AmplitudeField::atomic(std::move(pts), std::move(amps));
}

std::ptrdiff_t CapPartition::index_of(const DyadicSquare& d) const {
    auto it = std::lower_bound(caps.begin(), caps.end(), d, [](const DyadicSquare& a, const DyadicSquare& b) {
        return std::tie(a.i, a.j) < std::tie(b.i, b.j);
    });
    if (it == caps.end() || !(*it == d)) return -1;
    return it - caps.begin();
}

CapPartition cap_partition(const std::vector<DyadicSquare>& support, int level) {
    require(level >= 0 && level <= 15, "cap_partition: level out of range");
    check_support(support);
    std::vector<DyadicSquare> caps;
    for (const auto& d : support) {
        if (d.level <= level) {
            const int shift = level - d.level;
            const std::int64_t per = std::int64_t{1} << shift;
            for (std::int64_t a = 0; a < per; ++a)
                for (std::int64_t b = 0; b < per; ++b) caps.push_back({level, (d.i << shift) + a, (d.j << shift) + b});
        } else {
            const int shift = d.level - level;
            caps.push_back({level, d.i >> shift, d.j >> shift});
        }
    }
    std::sort(caps.begin(), caps.end(), [](const DyadicSquare& a, const DyadicSquare& b) {
        return std::tie(a.i, a.j) < std::tie(b.i, b.j);
    });
    caps.erase(std::unique(caps.begin(), caps.end()), caps.end());
    return {level, std::move(caps)};
}

namespace {

std::vector<Vec4> positions_of(const Surface& surface, const AmplitudeField& field) {
    std::vector<Vec4> pos(field.size());
    for (std::size_t k = 0; k < field.size(); ++k) pos[k] = surface.value(field.nodes()[k][0], field.nodes()[k][1]);
    return pos;
}

}  // namespace

Extension::Extension(const Surface& surface, const AmplitudeField& field, const CapPartition& caps) {
    const auto pos = positions_of(surface, field);
    std::vector<std::size_t> group(field.size());
    for (std::size_t k = 0; k < field.size(); ++k) {
        const auto d = transversality::square_of(caps.level, field.nodes()[k][0], field.nodes()[k][1]);
        const auto idx = caps.index_of(d);
        require(idx >= 0, "field node lies outside the cap partition");
        group[k] = static_cast<std::size_t>(idx);
    }
    sum_ = kernel::PhaseSum(pos, field.coefficients(), group, caps.caps.size());
}

Extension::Extension(const Surface& surface, const AmplitudeField& field) {
    const auto pos = positions_of(surface, field);
    std::vector<std::size_t> group(field.size(), 0);
    sum_ = kernel::PhaseSum(pos, field.coefficients(), group, 1);
}

Extension::Extension(std::span<const Vec4> positions, std::span<const Complex> coeffs,
                     std::span<const std::size_t> group, std::size_t group_count)
    : sum_(positions, coeffs, group, group_count) {}

namespace {

void check_point(const Vec4& x) {
    if (!x.allFinite()) fail(ErrorCode::invalid_argument, "extension evaluation point is not finite");
}

}  // namespace

Complex Extension::evaluate(const Vec4& x, kernel::Workspace& ws) const {
    check_point(x);
    return sum_.evaluate(x, ws);
}

Complex Extension::evaluate(const Vec4& x, std::span<Complex> per_cap, kernel::Workspace& ws) const {
    check_point(x);
    return sum_.evaluate(x, per_cap, ws);
}

Complex extension_eval(const Surface& surface, const AmplitudeField& field, const Vec4& x) {
    check_point(x);
    kernel::Workspace ws;
    return Extension(surface, field).evaluate(x, ws);
}

}  // namespace declab::fields
