#include "declab/runner.hpp"

#include "declab/exponents.hpp"
#include "declab/rescale.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace declab::runner {

using nlohmann::json;
using harness::DecouplingReport;
using harness::Kind;

const char* version() { return "1.0.0"; }

namespace {

[[noreturn]] void schema(const std::string& what) { fail(ErrorCode::schema, "config: " + what); }

void allow_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) schema(where + " must be an object");
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) schema("unknown key \"" + k + "\" in " + where);
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) schema(where + " must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) schema(where + " must be finite");
    return v;
}

std::int64_t integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) schema(where + " must be an integer");
    return j.get<std::int64_t>();
}

std::uint64_t unsigned_integer(const json& j, const std::string& where) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
        schema(where + " must be a non-negative integer");
    return j.get<std::uint64_t>();
}

std::string text(const json& j, const std::string& where) {
    if (!j.is_string()) schema(where + " must be a string");
    return j.get<std::string>();
}

bool boolean(const json& j, const std::string& where) {
    if (!j.is_boolean()) schema(where + " must be true or false");
    return j.get<bool>();
}

geometry::Interval interval(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) schema(where + " must be [lo, hi]");
    const geometry::Interval I{number(j[0], where), number(j[1], where)};
    if (!(I.lo >= 0 && I.hi <= 1 && I.lo < I.hi)) schema(where + " must satisfy 0 <= lo < hi <= 1");
    return I;
}

geometry::QuadCoeffs coefficients(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 6) schema(where + " must list six coefficients");
    geometry::QuadCoeffs A;
    for (std::size_t k = 0; k < 6; ++k) A.a[k] = number(j[k], where);
    return A;
}

template <class T, class F>
std::vector<T> one_or_many(const json& j, const std::string& where, F convert) {
    std::vector<T> out;
    if (j.is_array()) {
        if (j.empty()) schema(where + " must not be empty");
        for (const auto& e : j) out.push_back(convert(e));
    } else {
        out.push_back(convert(j));
    }
    return out;
}

double exponent_value(const json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
        schema("p must be a number or \"inf\"");
    }
    const double p = number(j, "p");
    if (p < 1) schema("p must be >= 1");
    return p;
}

harness::ScenarioSpec scenario_spec(const json& j, std::uint64_t seed) {
    harness::ScenarioSpec spec;
    spec.seed = seed;
    auto kind_of = [](const std::string& s) {
        try {
            return harness::kind_from_string(s);
        } catch (const Error&) {
            schema("unknown scenario kind \"" + s + "\"");
        }
    };
    if (j.is_string()) {
        spec.kind = kind_of(j.get<std::string>());
        return spec;
    }
    allow_keys(j, {"kind", "seed", "nu", "square_function", "I1", "I2"}, "scenario");
    if (!j.contains("kind")) schema("scenario needs a kind");
    spec.kind = kind_of(text(j["kind"], "scenario.kind"));
    if (j.contains("seed")) spec.seed = unsigned_integer(j["seed"], "scenario.seed");
    if (j.contains("nu")) {
        spec.nu = number(j["nu"], "scenario.nu");
        if (!(spec.nu > 0)) schema("scenario.nu must be positive");
    }
    if (j.contains("square_function")) spec.square_function = boolean(j["square_function"], "scenario.square_function");
    if (j.contains("I1")) spec.I1 = interval(j["I1"], "scenario.I1");
    if (j.contains("I2")) spec.I2 = interval(j["I2"], "scenario.I2");
    return spec;
}

SurfaceConfig surface_config(const json& j) {
    allow_keys(j, {"type", "A", "curve", "I1", "I2"}, "surface");
    SurfaceConfig s;
    if (!j.contains("type")) schema("surface needs a type");
    s.type = text(j["type"], "surface.type");
    if (s.type == "quad") {
        allow_keys(j, {"type", "A"}, "surface (quad)");
        if (!j.contains("A")) schema("quad surface needs A");
        s.A = coefficients(j["A"], "surface.A");
    } else if (s.type == "lift") {
        allow_keys(j, {"type", "curve", "I1", "I2"}, "surface (lift)");
        if (j.contains("curve") && text(j["curve"], "surface.curve") != "moment")
            schema("only the moment curve is available for lifts");
        if (j.contains("I1")) s.I1 = interval(j["I1"], "surface.I1");
        if (j.contains("I2")) s.I2 = interval(j["I2"], "surface.I2");
    } else {
        schema("surface.type must be \"quad\" or \"lift\"");
    }
    return s;
}

FieldConfig field_config(const json& j, std::uint64_t seed) {
    allow_keys(j, {"mode", "seed", "kind", "N", "points", "amplitudes"}, "field");
    FieldConfig f;
    f.seed = seed;
    if (!j.contains("mode")) schema("field needs a mode");
    f.mode = text(j["mode"], "field.mode");
    if (f.mode == "const") {
        allow_keys(j, {"mode"}, "field (const)");
    } else if (f.mode == "random-phase") {
        allow_keys(j, {"mode", "seed"}, "field (random-phase)");
        if (j.contains("seed")) f.seed = unsigned_integer(j["seed"], "field.seed");
    } else if (f.mode == "atomic") {
        if (j.contains("points")) {
            allow_keys(j, {"mode", "points", "amplitudes"}, "field (atomic points)");
            f.atomic_kind = "points";
            const json& pts = j["points"];
            if (!pts.is_array() || pts.empty()) schema("field.points must be a non-empty list of [t, s]");
            for (const auto& p : pts) {
                if (!p.is_array() || p.size() != 2) schema("field.points entries must be [t, s]");
                const Vec2 v(number(p[0], "field.points"), number(p[1], "field.points"));
                if (!(v.x() >= 0 && v.x() <= 1 && v.y() >= 0 && v.y() <= 1))
                    schema("field.points must lie in [0,1]^2");
                f.points.push_back(v);
            }
            if (j.contains("amplitudes")) {
                const json& a = j["amplitudes"];
                if (!a.is_array() || a.size() != pts.size()) schema("field.amplitudes must match field.points");
                for (const auto& z : a) {
                    if (z.is_array()) {
                        if (z.size() != 2) schema("complex amplitudes are [re, im]");
                        f.amplitudes.emplace_back(number(z[0], "field.amplitudes"), number(z[1], "field.amplitudes"));
                    } else {
                        f.amplitudes.emplace_back(number(z, "field.amplitudes"), 0.0);
                    }
                }
            } else {
                f.amplitudes.assign(f.points.size(), Complex(1, 0));
            }
        } else {
            allow_keys(j, {"mode", "kind", "N"}, "field (atomic)");
            if (!j.contains("kind") || text(j["kind"], "field.kind") != "flat-line")
                schema("atomic fields are \"kind\": \"flat-line\" or explicit \"points\"");
            f.atomic_kind = "flat-line";
            if (j.contains("N")) {
                f.N = integer(j["N"], "field.N");
                if (*f.N < 1) schema("field.N must be positive");
            }
        }
    } else {
        schema("field.mode must be \"const\", \"random-phase\" or \"atomic\"");
    }
    return f;
}

bool quadratic_kind(Kind k) { return k != Kind::curve_bilinear && k != Kind::parabola_2d; }

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        schema(std::string("not valid JSON: ") + e.what());
    }
    allow_keys(j, {"v", "seed", "scenario", "scenarios", "surface", "field", "N", "p", "sampler", "ball", "quadrature",
                   "timing", "outputs"},
               "the top level");
    if (!j.contains("v")) schema("missing format version \"v\"");
    if (integer(j["v"], "v") != kConfigVersion) schema("unsupported format version (expected 1)");

    RunConfig cfg;
    std::optional<std::uint64_t> seed, sampler_seed;
    if (j.contains("seed")) seed = unsigned_integer(j["seed"], "seed");
    if (j.contains("sampler")) {
        const json& s = j["sampler"];
        allow_keys(s, {"strategy", "budget", "seed", "spacing"}, "sampler");
        if (s.contains("strategy")) cfg.run.sampler.strategy = norms::strategy_from_string(text(s["strategy"], "sampler.strategy"));
        if (s.contains("budget")) {
            cfg.run.sampler.budget = unsigned_integer(s["budget"], "sampler.budget");
            if (cfg.run.sampler.budget < 1000) schema("sampler.budget must be at least 1000");
        }
        if (s.contains("seed")) sampler_seed = unsigned_integer(s["seed"], "sampler.seed");
        if (s.contains("spacing")) {
            cfg.run.sampler.spacing = number(s["spacing"], "sampler.spacing");
            if (cfg.run.sampler.spacing < 0) schema("sampler.spacing must be non-negative");
        }
    }
    if (!seed && !sampler_seed) schema("a seed is mandatory (\"seed\" or \"sampler.seed\")");
    if (seed && sampler_seed && *seed != *sampler_seed) schema("\"seed\" and \"sampler.seed\" disagree");
    cfg.seed = seed ? *seed : *sampler_seed;
    cfg.run.sampler.seed = cfg.seed;

    if (!j.contains("N")) schema("missing \"N\"");
    cfg.Ns = one_or_many<std::int64_t>(j["N"], "N", [](const json& e) {
        const std::int64_t n = integer(e, "N");
        if (n < 1) schema("N values must be positive");
        return n;
    });
    if (!j.contains("p")) schema("missing \"p\"");
    cfg.ps = one_or_many<double>(j["p"], "p", exponent_value);

    if (j.contains("ball")) {
        const json& b = j["ball"];
        allow_keys(b, {"radius", "center", "E", "T"}, "ball");
        if (b.contains("radius") && !(b["radius"].is_string() && b["radius"] == "N"))
            schema("ball.radius must be \"N\" (the radius is fixed by each measurement)");
        if (b.contains("center")) {
            const json& c = b["center"];
            if (!c.is_array() || c.size() != 4) schema("ball.center must have four coordinates");
            for (int k = 0; k < 4; ++k) cfg.run.center[k] = number(c[k], "ball.center");
        }
        if (b.contains("E")) {
            cfg.run.E = number(b["E"], "ball.E");
            if (!(cfg.run.E > 4)) schema("ball.E must exceed 4");
        }
        if (b.contains("T")) {
            cfg.run.T = number(b["T"], "ball.T");
            if (!(cfg.run.T > 0)) schema("ball.T must be positive");
        }
    }
    if (j.contains("quadrature")) {
        const json& q = j["quadrature"];
        allow_keys(q, {"order", "cycles_per_cell"}, "quadrature");
        if (q.contains("order")) {
            const auto o = integer(q["order"], "quadrature.order");
            if (o < 1 || o > 64) schema("quadrature.order must be in [1, 64]");
            cfg.run.order = static_cast<int>(o);
        }
        if (q.contains("cycles_per_cell")) {
            cfg.run.cycles_per_cell = number(q["cycles_per_cell"], "quadrature.cycles_per_cell");
            if (!(cfg.run.cycles_per_cell > 0)) schema("quadrature.cycles_per_cell must be positive");
        }
    }
    if (j.contains("timing")) cfg.run.timing = boolean(j["timing"], "timing");
    if (j.contains("outputs")) {
        const json& o = j["outputs"];
        allow_keys(o, {"report", "csv", "slopes", "plotdata"}, "outputs");
        for (const auto& [k, v] : o.items()) cfg.outputs[k] = text(v, "outputs." + k);
    }

    std::optional<SurfaceConfig> surface;
    if (j.contains("surface")) surface = surface_config(j["surface"]);
    std::optional<FieldConfig> field;
    if (j.contains("field")) field = field_config(j["field"], cfg.seed);

    if (j.contains("scenario") && j.contains("scenarios")) schema("give either \"scenario\" or \"scenarios\"");
    std::vector<harness::ScenarioSpec> specs;
    if (j.contains("scenario")) specs.push_back(scenario_spec(j["scenario"], cfg.seed));
    if (j.contains("scenarios")) {
        if (!j["scenarios"].is_array() || j["scenarios"].empty()) schema("\"scenarios\" must be a non-empty list");
        for (const auto& e : j["scenarios"]) specs.push_back(scenario_spec(e, cfg.seed));
    }
    if (specs.empty()) {
        if (!field) schema("give a \"scenario\", \"scenarios\" or a \"field\"");
        if (surface && surface->type != "quad") schema("a custom field needs a quad surface");
        cfg.cells.push_back({"custom", std::nullopt, field, surface});
    } else {
        if (field) schema("\"field\" cannot be combined with scenarios (each scenario fixes its fields)");
        for (auto& spec : specs) {
            if (surface) {
                if (surface->type == "quad") {
                    if (!quadratic_kind(spec.kind))
                        schema("a quad surface does not apply to scenario " + harness::to_string(spec.kind));
                    spec.A = surface->A;
                } else {
                    if (spec.kind != Kind::curve_bilinear) schema("a lift surface needs the curve-bilinear scenario");
                    spec.I1 = surface->I1;
                    spec.I2 = surface->I2;
                }
            }
            cfg.cells.push_back({harness::to_string(spec.kind), spec, std::nullopt, surface});
        }
    }
    return cfg;
}

namespace {

fields::AmplitudeField custom_field(const FieldConfig& f, std::int64_t N) {
    const int m = harness::cap_level_for(N);
    const fields::QuadratureSpec q{m, 8};
    if (f.mode == "const") return fields::const_field(fields::unit_support(), q);
    if (f.mode == "random-phase") return fields::random_phase_field(f.seed, m, fields::unit_support(), q);
    if (f.atomic_kind == "flat-line") return fields::flat_line_field(f.N.value_or(N));
    return fields::AmplitudeField::atomic(f.points, f.amplitudes);
}

std::string cell_name(const std::string& label, std::int64_t N, double p) {
    std::ostringstream os;
    os << "cell (kind=" << label << ", N=" << N << ", p=" << p << ")";
    return os.str();
}

DecouplingReport run_cell(const CellSpec& cell, std::int64_t N, double p, const harness::RunSpec& run) {
    try {
        if (cell.scenario) return harness::run_scenario(*cell.scenario, N, p, run);
        const geometry::QuadCoeffs A = cell.surface ? cell.surface->A : geometry::QuadCoeffs{{1, 0, 0, 0, 0, 1}};
        DecouplingReport r = harness::measure_linear(geometry::quad_surface(A), custom_field(*cell.field, N), N, p, run);
        r.kind = cell.label;
        return r;
    } catch (const NumericPoisonError& e) {
        const Vec4& x = e.point();
        std::ostringstream os;
        os << "numeric poison in " << cell_name(cell.label, N, p) << " at x = (" << x[0] << ", " << x[1] << ", "
           << x[2] << ", " << x[3] << "): " << e.what();
        throw NumericPoisonError(x, os.str());
    } catch (const Error& e) {
        throw Error(e.code(), cell_name(cell.label, N, p) + ": " + e.what());
    }
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json slope_json(const harness::SlopeFit& f, const std::optional<harness::ScenarioSpec>& spec) {
    json j = {{"kind", f.kind},
              {"p", number_or_null(f.p)},
              {"flavor", f.flavor == harness::Flavor::lp ? "lp" : "l2"},
              {"valid", f.valid}};
    if (f.valid) {
        j["slope"] = f.slope;
        j["se"] = f.se;
        j["ci"] = {f.ci_low, f.ci_high};
    } else {
        j["warning"] = f.warning;
    }
    if (spec) {
        const auto pred = harness::predicted_exponent(spec->kind, f.p, f.flavor);
        j["predicted"] = number_or_null(pred.exponent);
        j["provenance"] = harness::to_string(pred.provenance);
    }
    return j;
}

}  // namespace

RunOutput run(const RunConfig& config) {
    require(!config.cells.empty() && !config.Ns.empty() && !config.ps.empty(), "run: nothing to measure");
    RunOutput out;
    json slopes = json::array();
    for (const auto& cell : config.cells) {
        for (double p : config.ps) {
            std::vector<double> n, rl, sl, r2, s2;
            for (auto N : config.Ns) {
                DecouplingReport r = run_cell(cell, N, p, config.run);
                if (r.under_resolved > 0)
                    out.warnings.push_back(cell_name(cell.label, N, p) + ": " + std::to_string(r.under_resolved) +
                                           " samples beyond the finest prepared quadrature level");
                n.push_back(static_cast<double>(N));
                rl.push_back(r.ratio_lp);
                sl.push_back(r.ratio_lp_se);
                r2.push_back(r.ratio_l2);
                s2.push_back(r.ratio_l2_se);
                out.reports.push_back(std::move(r));
            }
            for (auto fl : {harness::Flavor::lp, harness::Flavor::l2}) {
                harness::SlopeFit f = fl == harness::Flavor::lp ? harness::fit_slope(n, rl, sl)
                                                                 : harness::fit_slope(n, r2, s2);
                f.kind = cell.label;
                f.p = p;
                f.flavor = fl;
                if (!f.valid && fl == harness::Flavor::lp)
                    out.warnings.push_back("slope for " + cell.label + " at p=" + json(number_or_null(p)).dump() +
                                           " omitted: " + f.warning);
                slopes.push_back(slope_json(f, cell.scenario));
                out.slopes.push_back(std::move(f));
            }
        }
    }

    json reports = json::array();
    std::string csv = harness::csv_header() + "\n";
    for (const auto& r : out.reports) {
        reports.push_back(json::parse(harness::report_json(r)));
        csv += harness::csv_row(r) + "\n";
    }
    const json doc = {{"v", kConfigVersion},
                      {"version", version()},
                      {"seed", config.seed},
                      {"reports", reports},
                      {"warnings", out.warnings}};
    out.documents["report"] = doc.dump(2) + "\n";
    out.documents["csv"] = csv;
    out.documents["slopes"] = slopes.dump(2) + "\n";
    out.documents["plotdata"] = harness::plotdata_json(out.reports) + "\n";
    out.documents["outputs"] = json(config.outputs).dump() + "\n";
    return out;
}

RunOutput example(const std::string& kind, std::int64_t N, double p, std::uint64_t seed, std::uint64_t budget,
                  const Vec4& center) {
    RunConfig cfg;
    harness::ScenarioSpec spec;
    spec.kind = harness::kind_from_string(kind);
    spec.seed = seed;
    cfg.seed = seed;
    cfg.cells.push_back({kind, spec, std::nullopt, std::nullopt});
    cfg.Ns = {N};
    cfg.ps = {p};
    cfg.run.sampler.seed = seed;
    cfg.run.sampler.budget = budget;
    cfg.run.center = center;
    return run(cfg);
}

// ---------------------------------------------------------------------------
// Identity checks

namespace {

geometry::QuadCoeffs random_in_L(std::mt19937_64& rng, double C) {
    std::uniform_real_distribution<double> u(-C, C);
    for (;;) {
        geometry::QuadCoeffs A{{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)}};
        if (geometry::in_L(A, C)) return A;
    }
}

fields::AmplitudeField random_atomic(std::mt19937_64& rng, const rescale::Square& R, int n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g;
    std::vector<Vec2> pts;
    std::vector<Complex> amps;
    for (int k = 0; k < n; ++k) {
        pts.emplace_back(R.a + R.delta * u(rng), R.b + R.delta * u(rng));
        amps.emplace_back(g(rng), g(rng));
    }
    return fields::AmplitudeField::atomic(pts, amps);
}

}  // namespace

IdentityCheck rescaling_check(int configurations, int points, std::uint64_t seed) {
    require(configurations >= 1 && points >= 1, "rescaling_check: counts must be positive");
    IdentityCheck c{"rescaling identity", 0.0, 1e-9};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < configurations; ++k) {
        const geometry::QuadCoeffs A = random_in_L(rng, 4);
        rescale::Square R;
        if (k % 2 == 0) {
            const int level = 1 + static_cast<int>(u(rng) * 3);
            const std::int64_t n = std::int64_t{1} << level;
            R = rescale::Square::from_dyadic({level, static_cast<std::int64_t>(u(rng) * n),
                                              static_cast<std::int64_t>(u(rng) * n)});
        } else {
            R.delta = 0.05 + 0.45 * u(rng);
            R.a = (1 - R.delta) * u(rng);
            R.b = (1 - R.delta) * u(rng);
        }
        const fields::AmplitudeField f = random_atomic(rng, R, 24);
        c.value = std::max(c.value, rescale::rescaling_residual(A, f, R, points, derive_seed(seed, k)));
        c.trials += points;
    }
    c.passed = c.value < c.threshold;
    return c;
}

IdentityCheck jacobian_check(int surfaces, int points, std::uint64_t seed) {
    require(surfaces >= 1 && points >= 1, "jacobian_check: counts must be positive");
    IdentityCheck c{"jacobian identity", 0.0, 1e-5};
    std::mt19937_64 rng(seed);
    for (int k = 0; k < surfaces; ++k) {
        const geometry::QuadCoeffs A = random_in_L(rng, 10);
        c.value = std::max(c.value, transversality::jacobian_residual(A, points, derive_seed(seed, k)));
        c.trials += points;
    }
    c.passed = c.value < c.threshold;
    return c;
}

IdentityCheck rank_check(int trials, std::uint64_t seed) {
    require(trials >= 1, "rank_check: trials must be positive");
    IdentityCheck c{"rank equivalence", 0.0, 0.0};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 1), co(-3, 3), big(-10, 10);
    std::int64_t disagree = 0;
    for (int i = 0; i < trials; ++i) {
        std::optional<geometry::Surface> S;
        double t = u(rng), s = u(rng);
        if (i % 2 == 0) {
            geometry::QuadCoeffs A;
            for (double& v : A.a) v = big(rng);
            if (i % 8 == 0) {
                const double lam = co(rng);
                for (int k = 0; k < 3; ++k) A.a[3 + k] = lam * A.a[k];
            }
            S = geometry::quad_surface(A);
        } else {
            const geometry::Interval I1{0, 0.4}, I2{0.6, 1};
            if (i % 4 == 1) {
                S = geometry::curve_lift(std::make_shared<geometry::MomentCurve>(), I1, I2);
            } else {
                std::array<std::vector<double>, 4> coeffs;
                for (auto& v : coeffs) v = {co(rng), co(rng), co(rng), co(rng), co(rng)};
                if (i % 8 == 3) coeffs[3] = {0, 0, 0, 0, 0};
                S = geometry::curve_lift(std::make_shared<geometry::PolynomialCurve>(coeffs), I1, I2);
            }
            t = 0.4 * u(rng);
            s = 0.6 + 0.4 * u(rng);
        }
        geometry::NormalForm nf;
        try {
            nf = geometry::normal_form(*S, t, s);
        } catch (const Error&) {
            ++c.excluded;
            continue;
        }
        const geometry::RankInfo ri = geometry::rank5_info(*S, t, s);
        const double m = nf.A.rank2_margin();
        if ((ri.margin > 1e-10 && ri.margin < 1e-6) || (m > 1e-10 && m < 1e-6)) {
            ++c.excluded;
            continue;
        }
        ++c.trials;
        if ((ri.rank == 4) != nf.A.rank2()) ++disagree;
    }
    c.value = c.trials > 0 ? static_cast<double>(disagree) / static_cast<double>(c.trials) : 1.0;
    c.passed = c.trials > 0 && disagree == 0 && c.excluded * 100 < trials;
    return c;
}

// ---------------------------------------------------------------------------
// Command documents

namespace {

json coeffs_json(const geometry::QuadCoeffs& A) { return json(A.a); }

json check_json(const IdentityCheck& c) {
    return {{"name", c.name},   {"value", c.value},     {"threshold", c.threshold},
            {"passed", c.passed}, {"trials", c.trials}, {"excluded", c.excluded}};
}

json big_json(const exponents::Big& x) {
    const double d = x.convert_to<double>();
    if (std::isfinite(d) && (d != 0 || x == 0) && std::abs(d) >= 1e-300) return d;
    if (x == 0) return 0.0;
    return x.str(12, std::ios_base::scientific);
}

json rational_json(const exponents::Rational& q) {
    return {{"exact", exponents::to_string(q)}, {"value", exponents::to_double(q)}};
}

}  // namespace

Document transversality_document(const geometry::QuadCoeffs& A, int K, double nu) {
    require(A.finite(), "coefficients must be finite");
    require(K >= 2, "K must be at least 2");
    const auto g = transversality::transverse_graph(A, K, nu);
    Document d;
    json counts = json::array();
    double mean = 0;
    for (int i = 0; i < K; ++i) {
        json row = json::array();
        for (int jj = 0; jj < K; ++jj) {
            row.push_back(g.counts[static_cast<std::size_t>(i) * K + jj]);
            mean += static_cast<double>(g.counts[static_cast<std::size_t>(i) * K + jj]);
        }
        counts.push_back(row);
    }
    mean /= static_cast<double>(K) * K;
    const int level = transversality::log2_exact(K);
    json sample = json::array();
    const transversality::DyadicSquare base{level, 0, 0};
    for (int k = 0; k < std::min(K, 16); ++k) {
        const transversality::DyadicSquare other{level, k, (3 * k) % K};
        const double v = g.table(base.i - other.i, base.j - other.j);
        sample.push_back({{"R1", {base.i, base.j}}, {"R2", {other.i, other.j}}, {"min_abs_form", v},
                          {"transverse", g.transverse(base, other)}});
    }
    const json doc = {{"A", coeffs_json(A)},
                      {"rank2", A.rank2()},
                      {"K", K},
                      {"nu", g.nu},
                      {"counts", counts},
                      {"max_count", g.max_count},
                      {"mean_count", mean},
                      {"strips",
                       {{"definite", g.strips.definite},
                        {"direction1", {g.strips.direction1[0], g.strips.direction1[1]}},
                        {"direction2", {g.strips.direction2[0], g.strips.direction2[1]}},
                        {"width", number_or_null(g.strips.width)}}},
                      {"strip_agreement", g.strip_agreement},
                      {"pairs", g.pairs},
                      {"strip_mismatches", g.strip_mismatches},
                      {"strip_mismatches_interior", g.strip_mismatches_interior},
                      {"pairs_sample", sample}};
    if (!A.rank2()) d.warnings.push_back("the coefficient matrix has rank < 2; the surface is degenerate");
    d.json = doc.dump(2) + "\n";
    return d;
}

Document rescale_document(const geometry::QuadCoeffs& A, double a, double b, double delta, int trials,
                          std::uint64_t seed) {
    require(A.finite(), "coefficients must be finite");
    require(delta > 0 && a >= 0 && b >= 0 && a + delta <= 1 && b + delta <= 1,
            "R = (a, b, delta) must be a square inside [0,1]^2");
    require(trials >= 1, "trials must be positive");
    const rescale::Square R{a, b, delta};
    std::mt19937_64 rng(seed);
    const auto f = random_atomic(rng, R, 32);
    const double residual = rescale::rescaling_residual(A, f, R, trials, seed);
    Document d;
    d.passed = residual < 1e-9;
    const json doc = {{"max_residual", residual},
                      {"trials", trials},
                      {"seed", seed},
                      {"A", coeffs_json(A)},
                      {"R", {{"a", a}, {"b", b}, {"delta", delta}}},
                      {"field", "atomic, 32 random points"},
                      {"threshold", 1e-9},
                      {"passed", d.passed}};
    d.json = doc.dump(2) + "\n";
    return d;
}

Document exponents_document(const std::string& p_text, int s, const std::string& eps_text, double big_o) {
    const exponents::Rational p = exponents::parse_rational(p_text);
    const exponents::Rational eps = exponents::parse_rational(eps_text);
    require(eps >= 0, "eps must be non-negative");
    require(big_o >= 0 && std::isfinite(big_o), "bigO must be non-negative");
    const auto C = exponents::exponent_constants(p);
    const double pd = exponents::to_double(p);
    Document d;
    json doc = {{"p", exponents::to_string(p)}, {"kappa", rational_json(C.kappa)}, {"kappa_regime", C.kappa_regime}};
    if (!C.kappa_regime) {
        doc["flag"] = C.flag;
        d.warnings.push_back(C.flag);
    }
    doc["kappa_identity"] = exponents::kappa_identity_holds(p);
    doc["contraction"] = exponents::contraction_holds(p);
    doc["gamma_candidate"] = C.gamma_candidate ? rational_json(*C.gamma_candidate) : json(nullptr);
    doc["gamma_iter"] = nullptr;
    doc["closes"] = nullptr;
    doc["witness"] = nullptr;
    if (C.gamma_candidate) {
        const exponents::Rational g = *C.gamma_candidate;
        const double gd = exponents::to_double(g), ed = exponents::to_double(eps);
        const double v = exponents::gamma_iterate(pd, ed, s, gd, big_o);
        json gi = {{"s", s},
                   {"eps", ed},
                   {"gamma_in", gd},
                   {"bigO", big_o},
                   {"value", v},
                   {"value_reversed", exponents::gamma_iterate_reversed(pd, ed, s, gd, big_o)}};
        if (s <= 200) {
            const auto q = exponents::gamma_iterate(p, eps, s, g, exponents::parse_rational(json(big_o).dump()));
            gi["value_rational"] = exponents::to_double(q);
        }
        doc["gamma_iter"] = gi;
        const auto model = exponents::EpsModel::logarithmic(10.0, pd);
        const auto res = exponents::contradiction_check(pd, big_o, model);
        doc["closes"] = res.closes;
        doc["extended_search"] = res.extended;
        doc["model"] = res.model;
        doc["margin"] = res.margin;
        if (!res.binding.empty()) doc["binding"] = res.binding;
        if (res.witness) {
            const auto& w = *res.witness;
            doc["witness"] = {{"s", w.s},
                              {"eps", big_json(w.eps)},
                              {"log10_inv_nu", big_json(w.log10_inv_nu)},
                              {"eps_nu", big_json(w.eps_nu)},
                              {"gamma_in", big_json(w.gamma_in)},
                              {"gamma_out", big_json(w.gamma_out)},
                              {"slack", big_json(w.slack)}};
        }
        d.passed = res.closes;
        if (!res.closes) d.warnings.push_back("no contradiction witness: " + res.binding);
    } else {
        if (p == 6) exponents::gamma_iterate(pd, exponents::to_double(eps), s, 1.0 / 3.0, big_o);
        d.warnings.push_back("gamma_iter and the contradiction search need p > 6");
    }
    d.json = doc.dump(2) + "\n";
    return d;
}

Document smoke_document(std::uint64_t seed) {
    const std::vector<IdentityCheck> checks = {rescaling_check(20, 10, seed), jacobian_check(10, 100, seed),
                                               rank_check(400, seed)};
    Document d;
    json arr = json::array();
    for (const auto& c : checks) {
        arr.push_back(check_json(c));
        if (!c.passed) {
            d.passed = false;
            d.warnings.push_back(c.name + " failed");
        }
    }
    d.json = json{{"checks", arr}, {"passed", d.passed}, {"seed", seed}}.dump(2) + "\n";
    return d;
}

}  // namespace declab::runner
