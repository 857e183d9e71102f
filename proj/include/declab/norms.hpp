#pragma once

// Weighted L^p norms over balls: (int |F|^p w_B)^{1/p} with w_B(x) = (1 + |x - c|/R)^{-E},
// truncated to |x - c| <= T R. Monte Carlo draws x exactly from w_B / Z.

#include "declab/common.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace declab::norms {

struct BallSpec {
    Vec4 center = Vec4::Zero();
    double radius = 1.0;
    double E = 100.0;
    double T = 4.0;
    int dim = 4;  ///< 4, or 2 for planar problems (uses the first two coordinates)
};

void validate(const BallSpec& ball);

double weight(const BallSpec& ball, const Vec4& x);

/// Z = int_{|x-c| <= TR} w_B, by adaptive radial quadrature.
double weight_mass(const BallSpec& ball);

/// Z via S_{d-1} R^d B(d, E-d) I_{T/(1+T)}(d, E-d).
double weight_mass_closed_form(const BallSpec& ball);

/// Fraction of the untruncated weight mass lying beyond T R.
double tail_fraction(const BallSpec& ball);

enum class Strategy { mc, lattice };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct SamplerSpec {
    Strategy strategy = Strategy::mc;
    std::uint64_t budget = 100000;
    std::uint64_t seed = 42;
    double spacing = 0.0;  ///< lattice spacing; 0 chooses one from the budget
    int threads = 0;       ///< 0: DECLAB_THREADS or hardware concurrency
};

/// Worker count honouring DECLAB_THREADS.
int worker_count(int requested = 0);

inline constexpr std::size_t kChunk = 4096;
inline constexpr std::size_t kBlock = 512;

enum class Reduce { mean, max };

/// Per-thread integrand: writes one value per channel for the point x.
using Integrand = std::function<void(const Vec4& x, std::span<double> out)>;
using IntegrandFactory = std::function<Integrand()>;

/// Channel statistics under the normalized measure w_B / Z.
struct SampleStats {
    Strategy strategy = Strategy::mc;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    double mass = 0.0;  ///< Z (mc) or the lattice mass sum
    double spacing = 0.0;
    std::vector<Reduce> reduce;
    std::vector<double> mean;  ///< mean (or max) per channel
    std::vector<double> se;    ///< iid standard error of the mean (0 for lattice / max)
    /// Block sums and counts for resampling error estimates (mc only).
    std::vector<std::vector<double>> block_sums;
    std::vector<double> block_counts;
    double max_radius = 0.0;   ///< largest |x - c| drawn

    /// Delete-one-block jackknife standard error of f(channel means).
    double jackknife_se(const std::function<double(std::span<const double>)>& f) const;
};

/// Draws/visits points and reduces every channel deterministically (independent of thread count).
SampleStats integrate(const BallSpec& ball, const SamplerSpec& sampler, std::vector<Reduce> reduce,
                      const IntegrandFactory& factory);

struct NormEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::uint64_t samples = 0;
    Strategy strategy = Strategy::mc;
    std::uint64_t seed = 0;
    double spacing = 0.0;
    bool approximate = false;  ///< p = infinity (max over samples)
    double tail = 0.0;         ///< truncated tail mass fraction
};

/// Norm from channel statistics: (Z mean)^{1/p}; p = infinity takes the max channel as is.
NormEstimate estimate_from(const SampleStats& stats, std::size_t channel, double p, double tail);

using Function = std::function<Complex(const Vec4& x)>;

/// (int |F|^p w_B)^{1/p}; p may be +infinity.
NormEstimate lp_norm(const Function& F, const BallSpec& ball, double p, const SamplerSpec& sampler);

/// All functions on one shared sample set.
std::vector<NormEstimate> lp_norm_batch(const std::vector<Function>& Fs, const BallSpec& ball, double p,
                                        const SamplerSpec& sampler);

}  // namespace declab::norms
