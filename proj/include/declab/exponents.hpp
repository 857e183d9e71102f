#pragma once

// Exponent bookkeeping: kappa_p, the candidate bound for gamma_p, the gamma_{p,eps,s} iteration,
// the quadratic-reduction recursion, the linear-from-bilinear bound and the contradiction search.

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace declab::exponents {

using Rational = boost::multiprecision::cpp_rational;
using Big = boost::multiprecision::cpp_bin_float_50;

/// Exact rational from "6", "6.01", "-0.5", "13/2" or "1e-3".
Rational parse_rational(const std::string& text);
double to_double(const Rational& q);
std::string to_string(const Rational& q);

/// kappa_p = (p-4)/(p-2); requires p != 2.
Rational kappa(const Rational& p);
/// (p-6)/(2p-8) + 1/2 - 1/p; requires p > 6.
Rational gamma_candidate(const Rational& p);
double gamma_candidate(double p);

struct Constants {
    Rational p;
    Rational kappa;
    std::optional<Rational> gamma_candidate;  ///< present for p > 6
    bool kappa_regime = true;                 ///< false for p <= 4
    std::string flag;                         ///< reason when kappa_regime is false
};
Constants exponent_constants(const Rational& p);

/// 2/p == (1-kappa)/2 + kappa/p, exactly.
bool kappa_identity_holds(const Rational& p);
/// 2(1-kappa_p) < 1, exactly.
bool contraction_holds(const Rational& p);

/// gamma_{p,eps,s}, term by term in the order written. Throws for p == 6 (2 kappa - 1 = 0) and s < 2.
double gamma_iterate(double p, double eps, int s, double gamma_in, double big_o);
Rational gamma_iterate(const Rational& p, const Rational& eps, int s, const Rational& gamma_in, const Rational& big_o);
/// The same terms summed in reverse order.
double gamma_iterate_reversed(double p, double eps, int s, double gamma_in, double big_o);
/// gamma_{p,eps,s} - gamma_in, rearranged so that no leading terms cancel.
Big gamma_excess(const Big& p, const Big& eps, int s, const Big& gamma_in, const Big& big_o);

/// eps(nu, p) as a function of L = log10(1/nu) >= 1 (nu <= 1/10).
class EpsModel {
public:
    /// eps = nu.
    static EpsModel linear();
    /// eps = log(C_p) / (4 p log(1/nu)).
    static EpsModel logarithmic(double C_p, double p);
    static EpsModel constant(double value);
    static EpsModel custom(std::function<Big(const Big& L)> fn, std::string name);

    Big at(const Big& L) const;
    /// Smallest L >= 1 with eps < target, if one exists below L_max.
    std::optional<Big> solve(const Big& target, const Big& L_max) const;
    const std::string& name() const { return name_; }

private:
    enum class Type { linear, logarithmic, constant, custom };
    Type type_ = Type::linear;
    double a_ = 0;
    std::function<Big(const Big&)> fn_;
    std::string name_;
};

struct SearchBounds {
    int s_max = 60;
    int eps_decades = 6;  ///< eps in {1e-1, ..., 1e-eps_decades}
    Big L_max = Big("1e300");
};

struct Witness {
    int s = 0;
    Big eps;
    Big log10_inv_nu;
    Big eps_nu;
    Big gamma_in;
    Big gamma_out;  ///< gamma_{p,eps,s}
    Big slack;      ///< gamma_in - gamma_out - eps_nu > 0
};

struct ClosureResult {
    bool closes = false;
    bool extended = false;  ///< witness needed the extended bounds
    std::optional<Witness> witness;
    std::string binding;    ///< constraint that blocked closure
    double p = 0, big_o = 0, margin = 0;
    std::string model;
};

/// Searches (s, eps, nu) refuting gamma_p = gamma_candidate(p) + margin: gamma_{p,eps,s} + eps(nu) < gamma_p
/// and 1/2 - 1/p + eps(nu) < 1 - 4/p. The excess is decreasing in gamma_p, so a witness refutes every larger
/// value as well. The primary bounds are tried first, then the extended ones.
ClosureResult contradiction_check(double p, double big_o, const EpsModel& model, double margin = 1e-3,
                                  const SearchBounds& bounds = {},
                                  const std::optional<SearchBounds>& extended = SearchBounds{5000, 4000, Big("1e4000")});

/// Running bounds (gamma/3) sum_{j<k} (2/3)^j for k = 1..depth.
std::vector<Rational> scale_recursion(const Rational& gamma_quad, int depth);
std::vector<double> scale_recursion(double gamma_quad, int depth);

struct TableEntry {
    double M = 0;
    double value = 0;
};

/// C_nu N^eps sup_{M <= N} (M/N)^{1/p-1/2} D_multi(M) over the table entries.
double bg_bound(const std::vector<TableEntry>& table, double N, double p, double eps_nu, double C_nu);

struct SimulationStep {
    int j = 0;
    double M = 0;
    double d_multi = 0;
    double term = 0;  ///< C_p K^{4p} (C_p K^{p-2})^j D_multi(M)^p
};

struct Simulation {
    int n = 0;
    double K = 0;
    double head = 0;   ///< (C_p K^{p-2})^n
    double bound = 0;  ///< the resulting bound on D(N, p)
    std::vector<SimulationStep> steps;
};

/// Iterates the one-step inequality n times with K^n = N^{1/2} and K^{-2} >= nu; D_multi at
/// intermediate scales is log-log interpolated from the table.
Simulation bg_simulate(const std::vector<TableEntry>& table, double N, double p, double nu, double C_p);

}  // namespace declab::exponents
