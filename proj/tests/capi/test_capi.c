#include "declab/declab.h"

#include <math.h>
#include <stdio.h>
#include <string.h>

static int failures = 0;

#define CHECK(cond)                                                       \
    do {                                                                  \
        if (!(cond)) {                                                    \
            fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__, __LINE__, #cond); \
            ++failures;                                                   \
        }                                                                 \
    } while (0)

static void version_and_status(void) {
    CHECK(strlen(declab_version()) > 0);
    CHECK(strcmp(declab_status_string(DECLAB_SCHEMA), "schema error") == 0);
    CHECK(strcmp(declab_status_string(DECLAB_NUMERIC_POISON), "numeric poison") == 0);
}

static void config_round_trip(void) {
    const char* cfg = "{\"v\":1,\"seed\":42,\"scenario\":\"indicator\",\"N\":16,\"p\":6,\"sampler\":{\"budget\":10000}}";
    declab_result* a = NULL;
    declab_result* b = NULL;
    CHECK(declab_run_config(cfg, &a) == DECLAB_OK);
    CHECK(declab_run_config(cfg, &b) == DECLAB_OK);
    if (a && b) {
        const char* csv_a = declab_result_document(a, "csv");
        const char* csv_b = declab_result_document(b, "csv");
        CHECK(csv_a != NULL && csv_b != NULL);
        if (csv_a && csv_b) CHECK(strcmp(csv_a, csv_b) == 0);
        CHECK(strncmp(csv_a, "kind,N,p,lhs,lhs_se,rhs_lp,rhs_l2,ratio_lp,ratio_l2,caps,budget,seed,runtime_ms\n", 80) == 0);
        CHECK(declab_result_document(a, "report") != NULL);
        CHECK(declab_result_document(a, "slopes") != NULL);
        CHECK(declab_result_document(a, "plotdata") != NULL);
        CHECK(declab_result_document(a, "missing") == NULL);
        CHECK(declab_result_warning_count(a) >= 1);
        CHECK(declab_result_warning(a, 1000) == NULL);
        CHECK(declab_result_passed(a) == 1);
    }
    declab_result_free(a);
    declab_result_free(b);
}

static void schema_errors(void) {
    declab_result* r = NULL;
    CHECK(declab_run_config("{\"v\":1,\"seed\":1,\"scenario\":\"indicator\",\"N\":16,\"p\":6,\"extra\":0}", &r) ==
          DECLAB_SCHEMA);
    CHECK(strstr(declab_last_error(), "extra") != NULL);
    CHECK(r == NULL);
    CHECK(declab_run_config("{\"v\":1,\"scenario\":\"indicator\",\"N\":16,\"p\":6}", &r) == DECLAB_SCHEMA);
    CHECK(declab_run_config("{\"v\":2,\"seed\":1,\"scenario\":\"indicator\",\"N\":16,\"p\":6}", &r) == DECLAB_SCHEMA);
    CHECK(declab_run_config("not json", &r) == DECLAB_SCHEMA);
    CHECK(declab_run_config(NULL, &r) == DECLAB_INVALID_ARGUMENT);
}

static void poison_cell(void) {
    declab_result* r = NULL;
    const char* cfg =
        "{\"v\":1,\"seed\":1,\"field\":{\"mode\":\"atomic\",\"points\":[[0.1,0.2],[0.7,0.9]],"
        "\"amplitudes\":[1e200,1]},\"N\":16,\"p\":6,\"sampler\":{\"budget\":2000}}";
    CHECK(declab_run_config(cfg, &r) == DECLAB_NUMERIC_POISON);
    CHECK(strstr(declab_last_error(), "kind=custom, N=16, p=6") != NULL);
}

static void direct_measurement(void) {
    const double A[6] = {1, 0, 0, 0, 0, 1};
    declab_surface* S = NULL;
    declab_field* f = NULL;
    declab_report* rep = NULL;
    declab_sampler smp;
    declab_sampler_init(&smp);
    smp.budget = 20000;
    smp.seed = 3;
    CHECK(declab_surface_quad(A, &S) == DECLAB_OK);
    const double pt[2] = {0.3, 0.6};
    CHECK(declab_field_atomic(1, pt, NULL, &f) == DECLAB_OK);
    CHECK(declab_measure_linear(S, f, 64, 6, &smp, &rep) == DECLAB_OK);
    double ratio = 0, caps = 0, dummy = 0;
    CHECK(declab_report_value(rep, "ratio_lp", &ratio) == DECLAB_OK);
    CHECK(declab_report_value(rep, "caps", &caps) == DECLAB_OK);
    CHECK(fabs(ratio - 1.0) < 1e-9);
    CHECK(caps == 1.0);
    CHECK(declab_report_value(rep, "nope", &dummy) == DECLAB_INVALID_ARGUMENT);
    CHECK(declab_report_json(rep) != NULL && strstr(declab_report_json(rep), "\"ratio_lp\"") != NULL);
    int rank = 0;
    CHECK(declab_surface_rank_check(S, 0.5, 0.5, &rank) == DECLAB_OK && rank == 1);
    declab_report_free(rep);
    declab_field_free(f);
    declab_surface_free(S);

    declab_surface* L = NULL;
    CHECK(declab_surface_moment_lift(0, 0.25, 0.75, 1, &L) == DECLAB_OK);
    CHECK(declab_surface_rank_check(L, 0.1, 0.9, &rank) == DECLAB_OK && rank == 1);
    declab_surface_free(L);

    declab_field* fl = NULL;
    CHECK(declab_field_flat_line(0, &fl) == DECLAB_INVALID_ARGUMENT);
    CHECK(declab_field_flat_line(64, &fl) == DECLAB_OK);
    declab_field_free(fl);
    declab_field* c = NULL;
    CHECK(declab_field_const(2, &c) == DECLAB_OK);
    declab_field_free(c);
    CHECK(declab_field_random_phase(5, 2, &c) == DECLAB_OK);
    declab_field_free(c);
}

static void commands(void) {
    const double A[6] = {1, 0, 0, 0, 0, 1};
    declab_result* r = NULL;
    CHECK(declab_run_rescale_check(A, 0.25, 0.5, 0.25, 200, 42, &r) == DECLAB_OK);
    CHECK(declab_result_passed(r) == 1);
    declab_result_free(r);
    r = NULL;
    CHECK(declab_run_rescale_check(A, 0.9, 0.5, 0.25, 200, 42, &r) == DECLAB_INVALID_ARGUMENT);
    CHECK(declab_run_transversality(A, 8, 0, &r) == DECLAB_OK);
    CHECK(strstr(declab_result_document(r, "report"), "\"counts\"") != NULL);
    declab_result_free(r);
    r = NULL;
    CHECK(declab_run_transversality(A, 12, 0, &r) == DECLAB_INVALID_ARGUMENT);
    CHECK(declab_run_exponents("8", 10, "1e-3", 1, &r) == DECLAB_OK);
    CHECK(strstr(declab_result_document(r, "report"), "\"exact\": \"2/3\"") != NULL);
    CHECK(declab_result_passed(r) == 1);
    declab_result_free(r);
    r = NULL;
    CHECK(declab_run_exponents("six", 10, "1e-3", 1, &r) == DECLAB_INVALID_ARGUMENT);
    CHECK(declab_run_smoke(42, &r) == DECLAB_OK);
    CHECK(declab_result_passed(r) == 1);
    declab_result_free(r);
}

int main(void) {
    version_and_status();
    config_round_trip();
    schema_errors();
    poison_cell();
    direct_measurement();
    commands();
    if (failures) fprintf(stderr, "%d checks failed\n", failures);
    else printf("all C API checks passed\n");
    return failures ? 1 : 0;
}
