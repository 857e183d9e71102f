#pragma once

// Versioned run configurations, experiment cells and the JSON documents behind each CLI subcommand.

#include "declab/harness.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace declab::runner {

inline constexpr int kConfigVersion = 1;
const char* version();

struct SurfaceConfig {
    std::string type;  ///< "quad" or "lift"
    geometry::QuadCoeffs A;
    geometry::Interval I1{0.0, 0.25}, I2{0.75, 1.0};
};

struct FieldConfig {
    std::string mode;  ///< "const", "random-phase" or "atomic"
    std::uint64_t seed = 0;
    std::string atomic_kind;           ///< "flat-line" or "points"
    std::optional<std::int64_t> N;     ///< flat-line size; the cell's N when absent
    std::vector<Vec2> points;
    std::vector<Complex> amplitudes;
};

struct CellSpec {
    std::string label;  ///< scenario name, or "custom"
    std::optional<harness::ScenarioSpec> scenario;
    std::optional<FieldConfig> field;
    std::optional<SurfaceConfig> surface;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::vector<CellSpec> cells;
    std::vector<std::int64_t> Ns;
    std::vector<double> ps;
    harness::RunSpec run;
    std::map<std::string, std::string> outputs;  ///< report, csv, slopes, plotdata
};

/// Parses and validates a "v": 1 configuration; every violation throws ErrorCode::schema.
RunConfig parse_config(const std::string& json_text);

struct RunOutput {
    std::vector<harness::DecouplingReport> reports;
    std::vector<harness::SlopeFit> slopes;
    std::vector<std::string> warnings;
    std::map<std::string, std::string> documents;  ///< report, csv, slopes, plotdata
};

/// Runs every (cell, N, p) in key order. A poisoned sample throws ErrorCode::numeric_poison naming the cell.
RunOutput run(const RunConfig& config);

/// One scenario cell with the given sampler settings.
RunOutput example(const std::string& kind, std::int64_t N, double p, std::uint64_t seed, std::uint64_t budget,
                  const Vec4& center);

struct IdentityCheck {
    std::string name;
    double value = 0;      ///< worst residual, or the disagreement fraction for ranks
    double threshold = 0;
    bool passed = false;
    std::int64_t trials = 0;
    std::int64_t excluded = 0;  ///< rank comparisons inside the tolerance band
};

/// A random in L(4), a random square R (dyadic or arbitrary), a random atomic field in R and
/// `points` random x per configuration.
IdentityCheck rescaling_check(int configurations, int points, std::uint64_t seed);
/// Finite-difference Jacobian against 4 Q over `points` random points for each of `surfaces` random A in L(10).
IdentityCheck jacobian_check(int surfaces, int points, std::uint64_t seed);
/// rank5 of the derivative matrix against rank2 of the normal form on quadratic and lifted surfaces.
IdentityCheck rank_check(int trials, std::uint64_t seed);

struct Document {
    std::string json;
    bool passed = true;
    std::vector<std::string> warnings;
};

Document transversality_document(const geometry::QuadCoeffs& A, int K, double nu);
Document rescale_document(const geometry::QuadCoeffs& A, double a, double b, double delta, int trials,
                          std::uint64_t seed);
Document exponents_document(const std::string& p, int s, const std::string& eps, double big_o);
/// Rescaling, Jacobian and rank identities on random inputs.
Document smoke_document(std::uint64_t seed = 42);

}  // namespace declab::runner
