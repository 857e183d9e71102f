#include "declab/declab.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitChecksFailed = 7;

struct Failure {
    int code;
    std::string message;
};

void check(declab_status st) {
    if (st != DECLAB_OK) throw Failure{static_cast<int>(st), declab_last_error()};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure{DECLAB_IO, "cannot read " + path};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Failure{DECLAB_IO, "cannot write " + path};
    out << text;
    if (!out) throw Failure{DECLAB_IO, "write failed for " + path};
}

class Result {
public:
    ~Result() { declab_result_free(r_); }
    declab_result** out() { return &r_; }
    std::string doc(const char* name) const {
        const char* d = declab_result_document(r_, name);
        return d ? d : "";
    }
    bool passed() const { return declab_result_passed(r_) == 1; }
    void print_warnings() const {
        for (size_t k = 0; k < declab_result_warning_count(r_); ++k)
            std::cerr << "warning: " << declab_result_warning(r_, k) << "\n";
    }

private:
    declab_result* r_ = nullptr;
};

/// Writes the report document to `path`, or to stdout when the path is empty.
void emit(const Result& r, const std::string& path) {
    if (path.empty())
        std::cout << r.doc("report");
    else
        write_file(path, r.doc("report"));
}

void emit_measurement(const Result& r, std::string out, std::string csv, std::string slopes, std::string plotdata) {
    const auto outputs = nlohmann::json::parse(r.doc("outputs").empty() ? "{}" : r.doc("outputs"));
    auto fallback = [&](std::string& path, const char* key) {
        if (path.empty() && outputs.contains(key)) path = outputs[key].get<std::string>();
    };
    fallback(out, "report");
    fallback(csv, "csv");
    fallback(slopes, "slopes");
    fallback(plotdata, "plotdata");
    if (!out.empty()) write_file(out, r.doc("report"));
    if (!slopes.empty()) write_file(slopes, r.doc("slopes"));
    if (!plotdata.empty()) write_file(plotdata, r.doc("plotdata"));
    if (!csv.empty())
        write_file(csv, r.doc("csv"));
    else
        std::cout << r.doc("csv");
}

std::vector<double> parse_list(const std::string& text, std::size_t count, const char* what) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Failure{DECLAB_INVALID_ARGUMENT, std::string(what) + ": \"" + item + "\" is not a number"};
        }
    }
    if (v.size() != count)
        throw Failure{DECLAB_INVALID_ARGUMENT,
                      std::string(what) + " needs " + std::to_string(count) + " comma-separated numbers"};
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for decoupling inequalities on quadratic surfaces in R^4"};
    app.set_version_flag("--version", std::string(declab_version()));
    app.require_subcommand(1);

    std::string config, out, csv, slopes, plotdata;
    auto* measure = app.add_subcommand("measure", "Run the measurements of a configuration file");
    measure->add_option("--config", config, "JSON configuration (\"v\": 1)")->required();
    measure->add_option("--out", out, "full reports (JSON)");
    measure->add_option("--csv", csv, "one row per measurement (stdout when omitted)");
    measure->add_option("--slopes", slopes, "fitted log-log slopes (JSON)");
    measure->add_option("--plotdata", plotdata, "plot-ready series (JSON)");

    std::string kind, center_text;
    std::int64_t N = 0;
    double p = 6;
    std::uint64_t seed = 42, budget = 100000;
    auto* example = app.add_subcommand("example", "Measure one canonical scenario");
    example->add_option("--kind", kind, "indicator, flat-line, strip, random-phase, bilinear-pair, curve-bilinear, parabola-2d")
        ->required();
    example->add_option("--N", N, "scale (K for the strip)")->required();
    example->add_option("--p", p, "exponent")->capture_default_str();
    example->add_option("--seed", seed)->capture_default_str();
    example->add_option("--budget", budget, "Monte Carlo samples")->capture_default_str();
    example->add_option("--center", center_text, "ball center c1,c2,c3,c4");
    example->add_option("--out", out, "full report (JSON)");
    example->add_option("--csv", csv, "CSV row (stdout when omitted)");

    std::string A_text;
    int K = 16;
    double nu = 0;
    auto* trans = app.add_subcommand("transversality", "Count non-transverse square pairs");
    trans->add_option("--A", A_text, "coefficients A1,...,A6")->required();
    trans->add_option("--K", K, "squares per side (power of two)")->capture_default_str();
    trans->add_option("--nu", nu, "transversality threshold (0 selects K^-2)")->capture_default_str();
    trans->add_option("--out", out, "JSON output (stdout when omitted)");

    std::string R_text;
    int trials = 1000;
    auto* resc = app.add_subcommand("rescale-check", "Check the parabolic rescaling identity");
    resc->add_option("--A", A_text, "coefficients A1,...,A6")->required();
    resc->add_option("--R", R_text, "square a,b,delta")->required();
    resc->add_option("--trials", trials)->capture_default_str();
    resc->add_option("--seed", seed)->capture_default_str();
    resc->add_option("--out", out, "JSON output (stdout when omitted)");

    std::string p_text, eps_text = "1e-3";
    int s = 12;
    double big_o = 10;
    auto* expo = app.add_subcommand("exponents", "Exponent bookkeeping and the contradiction search");
    expo->add_option("--p", p_text, "exponent (decimal or a/b)")->required();
    expo->add_option("--s", s, "iteration depth")->capture_default_str();
    expo->add_option("--eps", eps_text, "epsilon (decimal or a/b)")->capture_default_str();
    expo->add_option("--bigO", big_o, "constant of the O((1-kappa)^s) term")->capture_default_str();
    expo->add_option("--out", out, "JSON output (stdout when omitted)");

    auto* smoke = app.add_subcommand("smoke", "Exact-identity checks (rescaling, Jacobian, rank)");
    smoke->add_option("--seed", seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : DECLAB_INVALID_ARGUMENT;
    }

    try {
        Result r;
        if (*measure) {
            check(declab_run_config(read_file(config).c_str(), r.out()));
            r.print_warnings();
            emit_measurement(r, out, csv, slopes, plotdata);
        } else if (*example) {
            std::vector<double> c(4, 0.0);
            if (!center_text.empty()) c = parse_list(center_text, 4, "--center");
            check(declab_run_example(kind.c_str(), N, p, seed, budget, c.data(), r.out()));
            r.print_warnings();
            emit_measurement(r, out, csv, "", "");
        } else if (*trans) {
            const auto A = parse_list(A_text, 6, "--A");
            check(declab_run_transversality(A.data(), K, nu, r.out()));
            r.print_warnings();
            emit(r, out);
        } else if (*resc) {
            const auto A = parse_list(A_text, 6, "--A");
            const auto R = parse_list(R_text, 3, "--R");
            check(declab_run_rescale_check(A.data(), R[0], R[1], R[2], trials, seed, r.out()));
            r.print_warnings();
            emit(r, out);
            if (!r.passed()) return kExitChecksFailed;
        } else if (*expo) {
            check(declab_run_exponents(p_text.c_str(), s, eps_text.c_str(), big_o, r.out()));
            r.print_warnings();
            emit(r, out);
        } else if (*smoke) {
            check(declab_run_smoke(seed, r.out()));
            r.print_warnings();
            emit(r, "");
            if (!r.passed()) return kExitChecksFailed;
        }
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << "\n";
        return f.code;
    }
    return 0;
}
