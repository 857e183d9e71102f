#include "declab/declab.h"

#include "declab/runner.hpp"

#include <cstring>
#include <exception>
#include <map>
#include <new>
#include <string>
#include <vector>

struct declab_result {
    std::map<std::string, std::string> documents;
    std::vector<std::string> warnings;
    bool passed = true;
};

struct declab_surface {
    declab::geometry::Surface surface;
};

struct declab_field {
    declab::fields::AmplitudeField field;
};

struct declab_report {
    declab::harness::DecouplingReport report;
    std::string json;
};

namespace {

thread_local std::string last_error;

template <class F>
declab_status guarded(F&& body) {
    try {
        last_error.clear();
        body();
        return DECLAB_OK;
    } catch (const declab::Error& e) {
        last_error = e.what();
        return static_cast<declab_status>(static_cast<int>(e.code()));
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return DECLAB_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return DECLAB_INTERNAL;
    } catch (...) {
        last_error = "unknown failure";
        return DECLAB_INTERNAL;
    }
}

void need(const void* p, const char* what) {
    if (p == nullptr) declab::fail(declab::ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
}

declab::geometry::QuadCoeffs coeffs(const double A[6]) {
    need(A, "A");
    declab::geometry::QuadCoeffs q;
    for (int k = 0; k < 6; ++k) q.a[k] = A[k];
    return q;
}

declab_result* from_output(const declab::runner::RunOutput& o) {
    auto* r = new declab_result;
    r->documents = o.documents;
    r->warnings = o.warnings;
    return r;
}

declab_result* from_document(const declab::runner::Document& d) {
    auto* r = new declab_result;
    r->documents["report"] = d.json;
    r->warnings = d.warnings;
    r->passed = d.passed;
    return r;
}

}  // namespace

extern "C" {

const char* declab_version(void) { return declab::runner::version(); }

const char* declab_status_string(declab_status status) {
    switch (status) {
        case DECLAB_OK: return "ok";
        case DECLAB_INVALID_ARGUMENT: return "invalid argument";
        case DECLAB_SCHEMA: return "schema error";
        case DECLAB_NUMERIC_POISON: return "numeric poison";
        case DECLAB_DEGENERATE: return "degenerate geometry";
        case DECLAB_NOT_TRANSVERSE: return "not transverse";
        case DECLAB_IO: return "i/o error";
        case DECLAB_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* declab_last_error(void) { return last_error.c_str(); }

declab_status declab_run_config(const char* config_json, declab_result** out) {
    return guarded([&] {
        need(config_json, "config");
        need(out, "out");
        *out = from_output(declab::runner::run(declab::runner::parse_config(config_json)));
    });
}

declab_status declab_run_example(const char* kind, int64_t N, double p, uint64_t seed, uint64_t budget,
                                 const double center[4], declab_result** out) {
    return guarded([&] {
        need(kind, "kind");
        need(out, "out");
        declab::Vec4 c = declab::Vec4::Zero();
        if (center != nullptr) c = declab::Vec4(center[0], center[1], center[2], center[3]);
        *out = from_output(declab::runner::example(kind, N, p, seed, budget, c));
    });
}

declab_status declab_run_transversality(const double A[6], int K, double nu, declab_result** out) {
    return guarded([&] {
        need(out, "out");
        *out = from_document(declab::runner::transversality_document(coeffs(A), K, nu));
    });
}

declab_status declab_run_rescale_check(const double A[6], double a, double b, double delta, int trials,
                                       uint64_t seed, declab_result** out) {
    return guarded([&] {
        need(out, "out");
        *out = from_document(declab::runner::rescale_document(coeffs(A), a, b, delta, trials, seed));
    });
}

declab_status declab_run_exponents(const char* p, int s, const char* eps, double big_o, declab_result** out) {
    return guarded([&] {
        need(p, "p");
        need(eps, "eps");
        need(out, "out");
        *out = from_document(declab::runner::exponents_document(p, s, eps, big_o));
    });
}

declab_status declab_run_smoke(uint64_t seed, declab_result** out) {
    return guarded([&] {
        need(out, "out");
        *out = from_document(declab::runner::smoke_document(seed));
    });
}

const char* declab_result_document(const declab_result* result, const char* name) {
    if (result == nullptr || name == nullptr) return nullptr;
    const auto it = result->documents.find(name);
    return it == result->documents.end() ? nullptr : it->second.c_str();
}

size_t declab_result_warning_count(const declab_result* result) {
    return result == nullptr ? 0 : result->warnings.size();
}

const char* declab_result_warning(const declab_result* result, size_t index) {
    if (result == nullptr || index >= result->warnings.size()) return nullptr;
    return result->warnings[index].c_str();
}

int declab_result_passed(const declab_result* result) { return result != nullptr && result->passed ? 1 : 0; }

void declab_result_free(declab_result* result) { delete result; }

void declab_sampler_init(declab_sampler* sampler) {
    if (sampler == nullptr) return;
    const declab::norms::SamplerSpec d;
    sampler->strategy = DECLAB_STRATEGY_MC;
    sampler->budget = d.budget;
    sampler->seed = d.seed;
    sampler->spacing = d.spacing;
    sampler->threads = d.threads;
}

declab_status declab_surface_quad(const double A[6], declab_surface** out) {
    return guarded([&] {
        need(out, "out");
        *out = new declab_surface{declab::geometry::quad_surface(coeffs(A))};
    });
}

declab_status declab_surface_moment_lift(double i1_lo, double i1_hi, double i2_lo, double i2_hi,
                                         declab_surface** out) {
    return guarded([&] {
        need(out, "out");
        *out = new declab_surface{declab::geometry::curve_lift(std::make_shared<declab::geometry::MomentCurve>(),
                                                               {i1_lo, i1_hi}, {i2_lo, i2_hi})};
    });
}

declab_status declab_surface_rank_check(const declab_surface* surface, double t, double s, int* out) {
    return guarded([&] {
        need(surface, "surface");
        need(out, "out");
        *out = declab::geometry::rank5_check(surface->surface, t, s) ? 1 : 0;
    });
}

void declab_surface_free(declab_surface* surface) { delete surface; }

declab_status declab_field_const(int cap_level, declab_field** out) {
    return guarded([&] {
        need(out, "out");
        declab::require(cap_level >= 0 && cap_level <= 20, "cap_level must be in [0, 20]");
        *out = new declab_field{declab::fields::const_field(declab::fields::unit_support(), {cap_level, 8})};
    });
}

declab_status declab_field_random_phase(uint64_t seed, int phase_level, declab_field** out) {
    return guarded([&] {
        need(out, "out");
        declab::require(phase_level >= 0 && phase_level <= 20, "phase_level must be in [0, 20]");
        *out = new declab_field{declab::fields::random_phase_field(seed, phase_level, declab::fields::unit_support(),
                                                                   {phase_level, 8})};
    });
}

declab_status declab_field_flat_line(int64_t N, declab_field** out) {
    return guarded([&] {
        need(out, "out");
        *out = new declab_field{declab::fields::flat_line_field(N)};
    });
}

declab_status declab_field_atomic(size_t n, const double* points, const double* amplitudes, declab_field** out) {
    return guarded([&] {
        need(out, "out");
        need(points, "points");
        declab::require(n > 0, "at least one point is required");
        std::vector<declab::Vec2> pts;
        std::vector<declab::Complex> amps;
        for (size_t k = 0; k < n; ++k) {
            pts.emplace_back(points[2 * k], points[2 * k + 1]);
            amps.emplace_back(amplitudes ? amplitudes[2 * k] : 1.0, amplitudes ? amplitudes[2 * k + 1] : 0.0);
        }
        *out = new declab_field{declab::fields::AmplitudeField::atomic(pts, amps)};
    });
}

void declab_field_free(declab_field* field) { delete field; }

declab_status declab_measure_linear(const declab_surface* surface, const declab_field* field, int64_t N, double p,
                                    const declab_sampler* sampler, declab_report** out) {
    return guarded([&] {
        need(surface, "surface");
        need(field, "field");
        need(out, "out");
        declab::harness::RunSpec run;
        if (sampler != nullptr) {
            declab::require(sampler->strategy == DECLAB_STRATEGY_MC || sampler->strategy == DECLAB_STRATEGY_LATTICE,
                            "unknown sampler strategy");
            run.sampler.strategy = sampler->strategy == DECLAB_STRATEGY_MC ? declab::norms::Strategy::mc
                                                                            : declab::norms::Strategy::lattice;
            run.sampler.budget = sampler->budget;
            run.sampler.seed = sampler->seed;
            run.sampler.spacing = sampler->spacing;
            run.sampler.threads = sampler->threads;
        }
        auto* r = new declab_report;
        try {
            r->report = declab::harness::measure_linear(surface->surface, field->field, N, p, run);
            r->json = declab::harness::report_json(r->report);
        } catch (...) {
            delete r;
            throw;
        }
        *out = r;
    });
}

declab_status declab_report_value(const declab_report* report, const char* key, double* out) {
    return guarded([&] {
        need(report, "report");
        need(key, "key");
        need(out, "out");
        const auto& r = report->report;
        const std::map<std::string, double> values = {
            {"N", static_cast<double>(r.N)},
            {"p", r.p},
            {"caps", static_cast<double>(r.caps)},
            {"cap_level", r.cap_level},
            {"lhs", r.lhs.value},
            {"lhs_se", r.lhs.stderr_},
            {"rhs_lp", r.rhs_lp},
            {"rhs_l2", r.rhs_l2},
            {"ratio_lp", r.ratio_lp},
            {"ratio_l2", r.ratio_l2},
            {"ratio_lp_se", r.ratio_lp_se},
            {"ratio_l2_se", r.ratio_l2_se},
            {"under_resolved", static_cast<double>(r.under_resolved)},
        };
        const auto it = values.find(key);
        if (it == values.end()) declab::fail(declab::ErrorCode::invalid_argument, std::string("unknown report key ") + key);
        *out = it->second;
    });
}

const char* declab_report_json(const declab_report* report) { return report == nullptr ? nullptr : report->json.c_str(); }

void declab_report_free(declab_report* report) { delete report; }

}  // extern "C"
