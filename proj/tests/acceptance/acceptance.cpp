#include "declab/exponents.hpp"
#include "declab/harness.hpp"
#include "declab/runner.hpp"
#include "declab/transversality.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

using namespace declab;
using namespace declab::harness;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::vector<DecouplingReport> all_reports;
std::map<int, std::string> lines;
int failures = 0;

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

void criterion(int id, const char* title, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (limit_s > 0 && secs > limit_s) {
        o.passed = false;
        o.detail += "; runtime over the " + fmt("%.0f", limit_s) + " s limit";
    }
    if (!o.passed) ++failures;
    char head[160];
    std::snprintf(head, sizeof head, "criterion %2d %s  %s: ", id, o.passed ? "PASS" : "FAIL", title);
    lines[id] = head + o.detail + fmt(" [%.1f s]", secs);
    std::fprintf(stderr, "%s\n", lines[id].c_str());
}

RunSpec run_with(std::uint64_t budget, std::uint64_t seed = 42) {
    RunSpec r;
    r.sampler.budget = budget;
    r.sampler.seed = seed;
    return r;
}

Study study(Kind kind, const std::vector<std::int64_t>& Ns, double p, std::uint64_t budget) {
    ScenarioSpec spec;
    spec.kind = kind;
    Study st = scaling_study(spec, Ns, {p}, run_with(budget));
    for (const auto& r : st.rows) all_reports.push_back(r);
    return st;
}

const SlopeFit& fit(const Study& st, Flavor f) {
    for (const auto& s : st.slopes)
        if (s.flavor == f) return s;
    throw std::runtime_error("missing slope");
}

std::string slope_text(const SlopeFit& f) {
    return f.valid ? fmt("%.3f", f.slope) + " +- " + fmt("%.3f", f.se) : "unavailable (" + f.warning + ")";
}

geometry::QuadCoeffs random_in_L(std::mt19937_64& rng, double C) {
    std::uniform_real_distribution<double> u(-C, C);
    for (;;) {
        geometry::QuadCoeffs A{{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)}};
        if (geometry::in_L(A, C)) return A;
    }
}

double two_point_slope(const DecouplingReport& a, const DecouplingReport& b) {
    return std::log(b.ratio_lp / a.ratio_lp) / std::log(static_cast<double>(b.N) / static_cast<double>(a.N));
}

}  // namespace

int main() {
    criterion(1, "rescaling identity", 10, [] {
        const auto c = runner::rescaling_check(100, 10, 1);
        return Outcome{c.passed, "max relative residual " + fmt("%.2e", c.value) + " over " +
                                     std::to_string(c.trials) + " trials (limit 1e-9)"};
    });

    criterion(2, "jacobian identity", 10, [] {
        const auto c = runner::jacobian_check(100, 1000, 2);
        return Outcome{c.passed, "max relative error " + fmt("%.2e", c.value) + " over 100 A x 1000 points (limit 1e-5)"};
    });

    criterion(3, "rank equivalence", 0, [] {
        const auto c = runner::rank_check(1000, 3);
        return Outcome{c.passed, fmt("%.4f", 1.0 - c.value) + " agreement on " + std::to_string(c.trials) +
                                     " compared, " + std::to_string(c.excluded) + " excluded in the tolerance band"};
    });

    criterion(4, "transversality counting", 120, [] {
        std::mt19937_64 rng(4);
        std::vector<geometry::QuadCoeffs> As;
        for (int k = 0; k < 20; ++k) As.push_back(random_in_L(rng, 10));
        std::int64_t pairs = 0, mismatches = 0;
        const std::vector<int> Ks = {8, 16, 32};
        std::vector<double> lk, lc;
        std::string counts;
        for (int K : Ks) {
            std::int64_t worst = 0;
            for (const auto& A : As) {
                const auto g = transversality::transverse_graph(A, K);
                worst = std::max(worst, g.max_count);
                pairs += g.pairs;
                mismatches += g.strip_mismatches;
            }
            lk.push_back(std::log(K));
            lc.push_back(std::log(static_cast<double>(worst)));
            counts += (counts.empty() ? "" : ", ") + std::to_string(worst);
        }
        const double mk = (lk[0] + lk[1] + lk[2]) / 3, mc = (lc[0] + lc[1] + lc[2]) / 3;
        double sxy = 0, sxx = 0;
        for (int i = 0; i < 3; ++i) {
            sxy += (lk[i] - mk) * (lc[i] - mc);
            sxx += (lk[i] - mk) * (lk[i] - mk);
        }
        const double alpha = sxy / sxx;
        const double agree = 1.0 - static_cast<double>(mismatches) / static_cast<double>(pairs);
        return Outcome{alpha >= 0.8 && alpha <= 1.2 && agree >= 0.99,
                       "max count " + counts + " at K = 8, 16, 32; alpha " + fmt("%.3f", alpha) +
                           " (window [0.8, 1.2]); strip agreement " + fmt("%.4f", agree)};
    });

    criterion(5, "indicator sharpness", 1800, [] {
        const Study st = study(Kind::indicator, {16, 64, 256}, 6, 50000);
        const auto& f = fit(st, Flavor::lp);
        double worst = 0;
        for (const auto& r : st.rows) worst = std::max(worst, r.ratio_lp_se / r.ratio_lp);
        const bool ok = f.valid && f.slope >= 0.28 && f.slope <= 0.40 && worst < 0.05;
        return Outcome{ok, "slope " + slope_text(f) + " (window [0.28, 0.40]); ratios " +
                               fmt("%.3f", st.rows[0].ratio_lp) + ", " + fmt("%.3f", st.rows[1].ratio_lp) + ", " +
                               fmt("%.3f", st.rows[2].ratio_lp) + "; max relative se " + fmt("%.4f", worst)};
    });

    criterion(6, "l2(L6) failure on the flat line", 600, [] {
        const Study st = study(Kind::flat_line, {64, 256, 1024}, 6, 200000);
        const auto& f = fit(st, Flavor::l2);
        int agree = 0;
        double worst = 0;
        for (const auto& r : st.rows) {
            const auto o = dirichlet_oracle(r.N, 6);
            const double z = std::abs(r.ratio_l2 - o.ratio_l2) / r.ratio_l2_se;
            worst = std::max(worst, z);
            if (z <= 3) ++agree;
        }
        const bool ok = f.valid && f.slope >= 0.12 && agree == 3;
        return Outcome{ok, "l2 slope " + slope_text(f) + " (>= 0.12); oracle agreement " + std::to_string(agree) +
                               "/3 within 3 sigma (max " + fmt("%.2f", worst) + " sigma)"};
    });

    criterion(7, "trivial decoupling sharpness", 600, [] {
        const Study st = study(Kind::strip, {8, 16, 32}, 6, 50000);
        double lo = 1e9, hi = 0;
        for (const auto& r : st.rows) {
            const double v = r.extra("normalized");
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return Outcome{lo >= 1.0 / 3 && hi <= 3,
                       "ratio / K^(1-2/p) in [" + fmt("%.3f", lo) + ", " + fmt("%.3f", hi) + "] (window [1/3, 3])"};
    });

    criterion(8, "parabola calibration", 300, [] {
        const Study st = study(Kind::parabola_2d, {16, 64, 256}, 6, 100000);
        const auto& f = fit(st, Flavor::l2);
        return Outcome{f.valid && f.slope <= 0.1, "l2 slope " + slope_text(f) + " (<= 0.1)"};
    });

    criterion(10, "bilinear constant behavior", 0, [] {
        ScenarioSpec spec;
        spec.kind = Kind::bilinear_pair;
        double worst_growth = 0;
        for (std::int64_t N : {16, 64}) {
            spec.nu = 0.25;
            const auto a = run_scenario(spec, N, 4, run_with(50000));
            spec.nu = 0.0625;
            const auto b = run_scenario(spec, N, 4, run_with(50000));
            all_reports.push_back(a);
            all_reports.push_back(b);
            worst_growth = std::max(worst_growth, b.ratio_lp / a.ratio_lp);
        }
        spec.nu = 0.25;
        spec.square_function = true;
        const auto s16 = run_scenario(spec, 16, 4, run_with(50000));
        const auto s64 = run_scenario(spec, 64, 4, run_with(50000));
        all_reports.push_back(s16);
        all_reports.push_back(s64);
        const double sf_slope = two_point_slope(s16, s64);
        return Outcome{worst_growth <= 2.5 && sf_slope <= 0.1,
                       "bilinear growth for nu / 4: " + fmt("%.3f", worst_growth) + " (<= 2.5); square-function slope " +
                           fmt("%.3f", sf_slope) + " (<= 0.1)"};
    });

    criterion(11, "curve bilinear", 1200, [] {
        ScenarioSpec spec;
        spec.kind = Kind::curve_bilinear;
        const auto a = run_scenario(spec, 16, 12, run_with(100000));
        const auto b = run_scenario(spec, 64, 12, run_with(100000));
        all_reports.push_back(a);
        all_reports.push_back(b);
        const double det = std::min(a.extra("lift_det_min"), b.extra("lift_det_min"));
        const double ident = std::max(a.extra("identity_residual"), b.extra("identity_residual"));
        const double slope = two_point_slope(a, b);
        return Outcome{det > 0 && ident < 1e-12 && slope <= -0.05,
                       "lift_det min " + fmt("%.3e", det) + " (> 0); identity residual " + fmt("%.1e", ident) +
                           " (< 1e-12); ratio slope " + fmt("%.3f", slope) + " (<= -0.05)"};
    });

    criterion(12, "exponent engine", 5, [] {
        using namespace declab::exponents;
        bool identities = true;
        for (int num = 41; num <= 400; num += 7) {
            const Rational p = Rational(num) / 10;
            identities = identities && kappa_identity_holds(p);
            identities = identities && (contraction_holds(p) == (p > 6));
        }
        const Rational near6 = Rational(6) + Rational(1) / Rational(1000000000);
        const double limit_err = std::abs(to_double(gamma_candidate(near6)) - 1.0 / 3.0);
        int closes = 0, total = 0;
        std::string open;
        for (double p : {6.1, 6.5, 7.0, 8.0, 12.0})
            for (double B : {1.0, 10.0, 100.0}) {
                ++total;
                const auto r = contradiction_check(p, B, EpsModel::linear());
                if (r.closes)
                    ++closes;
                else
                    open += " p=" + fmt("%g", p) + ",B=" + fmt("%g", B);
            }
        const auto rec = scale_recursion(1.0 / 3.0, 200);
        const double rec_err = std::abs(rec.back() - 1.0 / 3.0);
        const bool ok = identities && limit_err < 1e-9 && closes == total && rec_err < 1e-10;
        return Outcome{ok, std::string("rational identities ") + (identities ? "exact" : "violated") +
                               "; |gamma_candidate(6+1e-9) - 1/3| = " + fmt("%.1e", limit_err) + "; closes " +
                               std::to_string(closes) + "/" + std::to_string(total) + open +
                               "; recursion limit error " + fmt("%.1e", rec_err)};
    });

    criterion(9, "trivial upper bound", 0, [] {
        int bad = 0, checked = 0;
        double worst = 0;
        std::string where, skipped;
        for (const auto& r : all_reports) {
            if (r.has_extra("measurement_square-function")) {
                skipped += (skipped.empty() ? "" : ", ") + fmt("%.2f", r.ratio_lp);
                continue;
            }
            ++checked;
            const double allowed = r.trivial_bound() * (1 + 5 * r.ratio_lp_se / r.ratio_lp);
            if (r.ratio_lp / allowed > worst) {
                worst = r.ratio_lp / allowed;
                where = r.kind + " N=" + std::to_string(r.N) + " p=" + fmt("%g", r.p);
            }
            if (!(r.ratio_lp <= allowed)) ++bad;
        }
        return Outcome{bad == 0 && checked > 0,
                       std::to_string(checked) + " decoupling ratios, " + std::to_string(bad) +
                           " above N^(1-1/p)(1+5 sigma); largest ratio / bound " + fmt("%.3f", worst) + " (" + where +
                           "); square-function ratios not in scope: " + skipped};
    });

    for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
    std::printf("%d of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
