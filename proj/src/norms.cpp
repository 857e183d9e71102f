#include "declab/norms.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <thread>

namespace declab::norms {

void validate(const BallSpec& ball) {
    require(ball.dim == 4 || ball.dim == 2, "ball dimension must be 2 or 4");
    require(ball.radius > 0.0 && std::isfinite(ball.radius), "ball radius must be positive");
    require(ball.T > 0.0 && std::isfinite(ball.T), "truncation factor must be positive");
    require(ball.center.allFinite(), "ball center must be finite");
    require(ball.E > ball.dim && std::isfinite(ball.E),
            "weight exponent E must exceed the dimension for integrability");
}

namespace {

double sphere_area(int d) { return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d); }

double distance(const BallSpec& ball, const Vec4& x) {
    return ball.dim == 4 ? (x - ball.center).norm() : (x - ball.center).head<2>().norm();
}

}  // namespace

double weight(const BallSpec& ball, const Vec4& x) {
    return std::pow(1.0 + distance(ball, x) / ball.radius, -ball.E);
}

double weight_mass(const BallSpec& ball) {
    validate(ball);
    const int d = ball.dim;
    const double E = ball.E;
    auto f = [d, E](double u) { return std::pow(u, d - 1) * std::pow(1.0 + u, -E); };
    // Split at the bulk of the radial density (u ~ d/E) for the adaptive rule.
    const double knee = std::min(ball.T, 4.0 * d / (E - d));
    using boost::math::quadrature::gauss_kronrod;
    double I = gauss_kronrod<double, 61>::integrate(f, 0.0, knee, 15, 1e-13);
    if (knee < ball.T) I += gauss_kronrod<double, 61>::integrate(f, knee, ball.T, 15, 1e-13);
    return sphere_area(d) * std::pow(ball.radius, d) * I;
}

double weight_mass_closed_form(const BallSpec& ball) {
    validate(ball);
    const double d = ball.dim, E = ball.E;
    const double x = ball.T / (1.0 + ball.T);
    return sphere_area(ball.dim) * std::pow(ball.radius, d) * boost::math::beta(d, E - d) *
           boost::math::ibeta(d, E - d, x);
}

double tail_fraction(const BallSpec& ball) {
    validate(ball);
    return boost::math::ibetac(static_cast<double>(ball.dim), ball.E - ball.dim, ball.T / (1.0 + ball.T));
}

std::string to_string(Strategy s) { return s == Strategy::mc ? "mc" : "lattice"; }

Strategy strategy_from_string(const std::string& s) {
    if (s == "mc") return Strategy::mc;
    if (s == "lattice") return Strategy::lattice;
    fail(ErrorCode::schema, "unknown sampler strategy '" + s + "'");
}

int worker_count(int requested) {
    int n = requested;
    if (n <= 0) {
        n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
        if (const char* env = std::getenv("DECLAB_THREADS")) {
            const int cap = std::atoi(env);
            if (cap >= 1) n = std::min(n, cap);
        }
    }
    return std::max(1, n);
}

double SampleStats::jackknife_se(const std::function<double(std::span<const double>)>& f) const {
    const std::size_t B = block_sums.size();
    if (B < 2) return 0.0;
    const std::size_t C = mean.size();
    std::vector<double> total(C, 0.0);
    double n = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t k = 0; k < C; ++k) total[k] += block_sums[b][k];
        n += block_counts[b];
    }
    std::vector<double> theta(B), m(C);
    double avg = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        const double nb = n - block_counts[b];
        for (std::size_t k = 0; k < C; ++k)
            m[k] = reduce[k] == Reduce::mean ? (total[k] - block_sums[b][k]) / nb : mean[k];
        theta[b] = f(m);
        avg += theta[b];
    }
    avg /= static_cast<double>(B);
    double ss = 0.0;
    for (double t : theta) ss += (t - avg) * (t - avg);
    return std::sqrt(ss * static_cast<double>(B - 1) / static_cast<double>(B));
}

namespace {

struct ChunkResult {
    std::vector<std::vector<double>> blocks;  // per block, per channel
    std::vector<double> counts;
    std::vector<double> sumsq;
    std::vector<double> maxv;
    double mass = 0.0;       // lattice only
    double max_radius = 0.0;
    std::uint64_t points = 0;
    std::exception_ptr error;
};

class PointSource {
public:
    virtual ~PointSource() = default;
    virtual std::size_t chunks() const = 0;
    // Fills pts with the points of the chunk and their weights (1 for mc).
    virtual void chunk(std::size_t c, std::vector<Vec4>& pts, std::vector<double>& w) const = 0;
};

class McSource final : public PointSource {
public:
    McSource(const BallSpec& b, const SamplerSpec& s) : ball_(b), spec_(s) {}
    std::size_t chunks() const override { return (spec_.budget + kChunk - 1) / kChunk; }
    void chunk(std::size_t c, std::vector<Vec4>& pts, std::vector<double>& w) const override {
        const std::size_t n = std::min<std::uint64_t>(kChunk, spec_.budget - c * kChunk);
        std::mt19937_64 rng(derive_seed(spec_.seed, c));
        std::normal_distribution<double> normal;
        std::gamma_distribution<double> g1(ball_.dim, 1.0), g2(ball_.E - ball_.dim, 1.0);
        const double vmax = ball_.T / (1.0 + ball_.T);
        pts.resize(n);
        w.assign(n, 1.0);
        for (std::size_t k = 0; k < n; ++k) {
            Vec4 dir = Vec4::Zero();
            double nn = 0.0;
            while (nn == 0.0) {
                for (int i = 0; i < ball_.dim; ++i) dir[i] = normal(rng);
                nn = dir.norm();
            }
            dir /= nn;
            double v;
            do {
                const double a = g1(rng), b = g2(rng);
                v = a / (a + b);
            } while (!(v <= vmax));
            const double r = ball_.radius * v / (1.0 - v);
            pts[k] = ball_.center + r * dir;
        }
    }

private:
    BallSpec ball_;
    SamplerSpec spec_;
};

class LatticeSource final : public PointSource {
public:
    LatticeSource(const BallSpec& b, double h) : ball_(b), h_(h) {
        n_ = static_cast<std::int64_t>(std::floor(ball_.T * ball_.radius / h_));
        side_ = 2 * n_ + 1;
        total_ = 1;
        for (int i = 0; i < ball_.dim; ++i) total_ *= side_;
    }
    std::size_t chunks() const override { return static_cast<std::size_t>((total_ + kChunk - 1) / kChunk); }
    void chunk(std::size_t c, std::vector<Vec4>& pts, std::vector<double>& w) const override {
        pts.clear();
        w.clear();
        const std::int64_t lo = static_cast<std::int64_t>(c * kChunk);
        const std::int64_t hi = std::min<std::int64_t>(total_, lo + kChunk);
        const double cell = std::pow(h_, ball_.dim);
        for (std::int64_t idx = lo; idx < hi; ++idx) {
            std::int64_t rem = idx;
            Vec4 x = ball_.center;
            for (int i = 0; i < ball_.dim; ++i) {
                x[i] += h_ * static_cast<double>(rem % side_ - n_);
                rem /= side_;
            }
            const double dist = distance(ball_, x);
            if (dist > ball_.T * ball_.radius) continue;
            pts.push_back(x);
            w.push_back(weight(ball_, x) * cell);
        }
    }
    double spacing() const { return h_; }

private:
    BallSpec ball_;
    double h_;
    std::int64_t n_ = 0, side_ = 0, total_ = 0;
};

double auto_spacing(const BallSpec& ball, std::uint64_t budget) {
    const double rad = ball.T * ball.radius;
    const double vol = ball.dim == 4 ? 0.5 * std::numbers::pi * std::numbers::pi * std::pow(rad, 4)
                                     : std::numbers::pi * rad * rad;
    return std::pow(vol / static_cast<double>(budget), 1.0 / ball.dim);
}

}  // namespace

SampleStats integrate(const BallSpec& ball, const SamplerSpec& sampler, std::vector<Reduce> reduce,
                      const IntegrandFactory& factory) {
    validate(ball);
    require(sampler.budget >= 1, "sampler budget must be positive");
    require(!reduce.empty(), "integrate: at least one channel required");
    const std::size_t C = reduce.size();

    std::unique_ptr<PointSource> source;
    double spacing = 0.0;
    if (sampler.strategy == Strategy::mc) {
        source = std::make_unique<McSource>(ball, sampler);
    } else {
        spacing = sampler.spacing > 0.0 ? sampler.spacing : auto_spacing(ball, sampler.budget);
        source = std::make_unique<LatticeSource>(ball, spacing);
    }
    const std::size_t nchunks = source->chunks();
    std::vector<ChunkResult> results(nchunks);
    std::atomic<std::size_t> next{0};
    const bool mc = sampler.strategy == Strategy::mc;

    auto worker = [&]() {
        Integrand f;
        try {
            f = factory();
        } catch (...) {
            // Reported through the first chunk this worker would have processed.
            const std::size_t c = next.fetch_add(1);
            if (c < nchunks) results[c].error = std::current_exception();
            return;
        }
        std::vector<Vec4> pts;
        std::vector<double> w;
        std::vector<double> out(C);
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= nchunks) break;
            ChunkResult& r = results[c];
            try {
                source->chunk(c, pts, w);
                const std::size_t nb = (std::max<std::size_t>(pts.size(), 1) + kBlock - 1) / kBlock;
                r.blocks.assign(nb, std::vector<double>(C, 0.0));
                r.counts.assign(nb, 0.0);
                r.sumsq.assign(C, 0.0);
                r.maxv.assign(C, 0.0);
                r.points = pts.size();
                for (std::size_t k = 0; k < pts.size(); ++k) {
                    f(pts[k], out);
                    for (std::size_t ch = 0; ch < C; ++ch)
                        if (!std::isfinite(out[ch]))
                            throw NumericPoisonError(pts[k], "non-finite integrand value in channel " + std::to_string(ch));
                    const std::size_t b = k / kBlock;
                    const double wk = w[k];
                    r.counts[b] += wk;
                    r.mass += wk;
                    r.max_radius = std::max(r.max_radius, distance(ball, pts[k]));
                    for (std::size_t ch = 0; ch < C; ++ch) {
                        const double y = out[ch];
                        r.blocks[b][ch] += wk * y;
                        r.sumsq[ch] += wk * y * y;
                        r.maxv[ch] = std::max(r.maxv[ch], y);
                    }
                }
            } catch (...) {
                r.error = std::current_exception();
            }
        }
    };

    const int nthreads = std::min<int>(worker_count(sampler.threads), static_cast<int>(std::max<std::size_t>(nchunks, 1)));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& r : results)
        if (r.error) std::rethrow_exception(r.error);

    SampleStats st;
    st.strategy = sampler.strategy;
    st.seed = sampler.seed;
    st.spacing = spacing;
    st.reduce = std::move(reduce);
    st.mean.assign(C, 0.0);
    st.se.assign(C, 0.0);
    std::vector<double> sum(C, 0.0), sumsq(C, 0.0), maxv(C, 0.0);
    double wsum = 0.0;
    for (const auto& r : results) {
        for (std::size_t b = 0; b < r.blocks.size(); ++b) {
            if (r.counts[b] == 0.0) continue;
            st.block_sums.push_back(r.blocks[b]);
            st.block_counts.push_back(r.counts[b]);
            for (std::size_t ch = 0; ch < C; ++ch) sum[ch] += r.blocks[b][ch];
        }
        for (std::size_t ch = 0; ch < C; ++ch) {
            sumsq[ch] += r.sumsq[ch];
            maxv[ch] = std::max(maxv[ch], r.maxv[ch]);
        }
        wsum += r.mass;
        st.max_radius = std::max(st.max_radius, r.max_radius);
    }
    require(wsum > 0.0, "integrate: no sample points in the ball");
    if (mc) {
        st.samples = sampler.budget;
        st.mass = weight_mass(ball);
    } else {
        st.samples = 0;
        for (const auto& r : results) st.samples += r.points;
        st.mass = wsum;
    }
    const double n = mc ? static_cast<double>(sampler.budget) : wsum;
    for (std::size_t ch = 0; ch < C; ++ch) {
        if (st.reduce[ch] == Reduce::max) {
            st.mean[ch] = maxv[ch];
            continue;
        }
        st.mean[ch] = sum[ch] / n;
        if (mc && sampler.budget > 1) {
            const double var = std::max(0.0, sumsq[ch] / n - st.mean[ch] * st.mean[ch]);
            st.se[ch] = std::sqrt(var / (n - 1.0));
        }
    }
    if (!mc) st.block_sums.clear(), st.block_counts.clear();
    return st;
}

NormEstimate estimate_from(const SampleStats& stats, std::size_t channel, double p, double tail) {
    require(channel < stats.mean.size(), "estimate_from: channel out of range");
    NormEstimate e;
    e.samples = stats.samples;
    e.strategy = stats.strategy;
    e.seed = stats.seed;
    e.spacing = stats.spacing;
    e.tail = tail;
    const double m = stats.mean[channel];
    if (std::isinf(p)) {
        e.value = m;
        e.approximate = true;
        return e;
    }
    if (m <= 0.0) return e;
    e.value = std::pow(stats.mass * m, 1.0 / p);
    e.stderr_ = e.value / p * stats.se[channel] / m;
    return e;
}

NormEstimate lp_norm(const Function& F, const BallSpec& ball, double p, const SamplerSpec& sampler) {
    return lp_norm_batch({F}, ball, p, sampler).front();
}

std::vector<NormEstimate> lp_norm_batch(const std::vector<Function>& Fs, const BallSpec& ball, double p,
                                        const SamplerSpec& sampler) {
    require(p >= 1.0, "lp_norm: p must be >= 1");
    require(!Fs.empty(), "lp_norm_batch: empty function list");
    require(sampler.budget >= 1000, "lp_norm: budget must be at least 1000");
    const bool inf = std::isinf(p);
    std::vector<Reduce> reduce(Fs.size(), inf ? Reduce::max : Reduce::mean);
    const SampleStats st = integrate(ball, sampler, reduce, [&]() -> Integrand {
        return [&Fs, p, inf](const Vec4& x, std::span<double> out) {
            for (std::size_t k = 0; k < Fs.size(); ++k) {
                const double a = std::abs(Fs[k](x));
                out[k] = inf ? a : std::pow(a, p);
            }
        };
    });
    const double tail = tail_fraction(ball);
    std::vector<NormEstimate> res;
    for (std::size_t k = 0; k < Fs.size(); ++k) res.push_back(estimate_from(st, k, p, tail));
    return res;
}

}  // namespace declab::norms
