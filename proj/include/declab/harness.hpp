#pragma once

// Decoupling measurements on shared Monte Carlo samples: linear l^p / l^2 ratios,
// bilinear and square-function forms, trivial decoupling, canonical scenarios,
// the planar parabola calibration, the curve bilinear estimate, and scaling studies.

#include "declab/fields.hpp"
#include "declab/norms.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace declab::harness {

using fields::AmplitudeField;
using geometry::Interval;
using geometry::QuadCoeffs;
using geometry::Surface;
using transversality::DyadicSquare;

/// Sampler, weight parameters and quadrature resolution shared by all measurements.
struct RunSpec {
    norms::SamplerSpec sampler;
    Vec4 center = Vec4::Zero();
    double E = 100.0;
    double T = 4.0;
    /// Gauss-Legendre order per cell and the largest phase variation (in cycles) allowed per cell.
    int order = 10;
    double cycles_per_cell = 2.0;
    /// Samples beyond this radial quantile are evaluated at the finest prepared level and counted.
    double resolution_quantile = 1e-9;
    bool timing = false;
};

struct DecouplingReport {
    std::string kind;
    std::int64_t N = 0;
    double p = 0;
    int cap_level = 0;
    std::size_t caps = 0;  ///< non-empty caps (or squares / intervals)
    norms::NormEstimate lhs;
    double rhs_lp = 0, rhs_l2 = 0;
    double ratio_lp = 0, ratio_l2 = 0;
    double ratio_lp_se = 0, ratio_l2_se = 0;
    std::vector<double> cap_norms;
    std::uint64_t seed = 0, budget = 0;
    double runtime_ms = -1;  ///< negative when timing is disabled
    std::uint64_t under_resolved = 0;
    std::vector<std::pair<std::string, double>> extras;

    double extra(const std::string& key) const;
    bool has_extra(const std::string& key) const;
    /// N^{1-1/p}, the Cauchy-Schwarz bound on ratio_lp.
    double trivial_bound() const;
};

/// Cap level ceil(log2 sqrt(N)).
int cap_level_for(std::int64_t N);

/// max over [0,1]^2 of max(|Psi_t|, |Psi_s|), sampled on a grid with a safety factor.
double phase_gradient_bound(const Surface& surface);

/// ||E g||_p against the cap pieces at scale N^{-1/2}, ball radius N.
DecouplingReport measure_linear(const Surface& surface, const AmplitudeField& field, std::int64_t N, double p,
                                const RunSpec& run);

/// ||(|E_{R1} g1 E_{R2} g2|)^{1/2}||_p against (prod_i sum_D ||E_D g_i||_p^p)^{1/(2p)}.
/// Throws NotTransverseError when min |Q| over R1 x R2 is below nu.
DecouplingReport measure_bilinear(const QuadCoeffs& A, const AmplitudeField& g1, const DyadicSquare& R1,
                                  const AmplitudeField& g2, const DyadicSquare& R2, double nu, std::int64_t N,
                                  double p, const RunSpec& run);

/// ||(prod_i sum_D |E_D g_i|^2)^{1/4}||_p against N^{-4/p} (prod_i sum_D ||E_D g_i||_{p/2}^2)^{1/4};
/// p = infinity uses sample maxima and N^0.
DecouplingReport measure_square_function(const QuadCoeffs& A, const AmplitudeField& g1, const DyadicSquare& R1,
                                         const AmplitudeField& g2, const DyadicSquare& R2, double nu,
                                         std::int64_t N, double p, const RunSpec& run);

/// ||sum_i E_{R_i} g||_p over w_{B_K} against the l^p sum; the extra "normalized" is ratio_lp / K^{1-2/p}.
DecouplingReport measure_trivial(const Surface& surface, const AmplitudeField& field,
                                 const std::vector<DyadicSquare>& squares, double p, const RunSpec& run);

/// Extension over gamma(t) = t^2 in R^2, intervals of length N^{-1/2}, ball radius N.
DecouplingReport parabola_reference(std::int64_t N, double p, const RunSpec& run,
                                    const std::optional<Interval>& support = std::nullopt);

using Profile = std::function<Complex(double)>;

/// Bilinear L^12 / l^6 estimate for the curve extensions int_{I_i} h_i(t) e(x . Phi(t)) dt, ball radius N.
/// Extras: lift_det_min over I1 x I2, identity_residual of the product-field identity, normalized = ratio / N^{-1/6}.
DecouplingReport curve_bilinear(std::shared_ptr<const geometry::Curve> curve, Interval I1, Interval I2,
                                const Profile& h1, const Profile& h2, std::int64_t N, const RunSpec& run,
                                double min_separation = 0.1);

/// 1-D quadrature of the Dirichlet kernel against the x2-marginal of the weight, reproducing the
/// flat-line linear measurement (caps grouped exactly as in the 4-D pipeline).
struct DirichletOracle {
    double lhs = 0, rhs_lp = 0, rhs_l2 = 0, ratio_lp = 0, ratio_l2 = 0;
};
DirichletOracle dirichlet_oracle(std::int64_t N, double p, double E = 100.0, double T = 4.0);

// ---------------------------------------------------------------------------
// Scenarios

enum class Kind { indicator, flat_line, strip, random_phase, bilinear_pair, curve_bilinear, parabola_2d };

std::string to_string(Kind k);
Kind kind_from_string(const std::string& s);

enum class Flavor { lp, l2 };
enum class Provenance { proven, derived, none };
std::string to_string(Provenance p);

struct Prediction {
    double exponent = 0;  ///< NaN when no prediction is made
    Provenance provenance = Provenance::none;
};

/// Predicted log-log slope of the ratio in N (or K for the strip).
Prediction predicted_exponent(Kind kind, double p, Flavor flavor);

struct ScenarioSpec {
    Kind kind = Kind::indicator;
    std::optional<QuadCoeffs> A;  ///< overrides the kind's default surface
    std::uint64_t seed = 42;      ///< random phases
    double nu = 0.25;             ///< bilinear-pair transversality
    bool square_function = false; ///< bilinear-pair: measure the square-function form
    Interval I1{0.0, 0.25}, I2{0.75, 1.0};
};

struct Scenario {
    Kind kind = Kind::indicator;
    std::optional<Surface> surface;
    QuadCoeffs A;
    std::vector<AmplitudeField> fields;
    std::vector<DyadicSquare> squares;  ///< strip squares or the bilinear pair
    double nu = 0;
};

/// Surface and fields for the given N (K for the strip).
Scenario scenario(const ScenarioSpec& spec, std::int64_t N);

/// Builds the scenario and runs the matching measurement.
DecouplingReport run_scenario(const ScenarioSpec& spec, std::int64_t N, double p, const RunSpec& run);

// ---------------------------------------------------------------------------
// Scaling studies and outputs

struct SlopeFit {
    std::string kind;
    double p = 0;
    Flavor flavor = Flavor::lp;
    bool valid = false;
    double slope = 0, se = 0, ci_low = 0, ci_high = 0;
    std::string warning;
};

/// Least-squares slope of log(ratio) against log(N) with the standard error propagated from the
/// per-point Monte Carlo errors; 95% interval. Fewer than 3 points gives an invalid fit with a warning.
SlopeFit fit_slope(const std::vector<double>& N, const std::vector<double>& ratio, const std::vector<double>& se);

struct Study {
    std::vector<DecouplingReport> rows;
    std::vector<SlopeFit> slopes;
};

Study scaling_study(const ScenarioSpec& spec, const std::vector<std::int64_t>& Ns, const std::vector<double>& ps,
                    const RunSpec& run);

std::string csv_header();
std::string csv_row(const DecouplingReport& r);

/// Reports and plot-ready series serialized as JSON text.
std::string report_json(const DecouplingReport& r);
std::string plotdata_json(const std::vector<DecouplingReport>& reports);

}  // namespace declab::harness
