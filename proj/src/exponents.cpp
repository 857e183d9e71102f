#include "declab/exponents.hpp"

#include "declab/common.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace declab::exponents {

namespace mp = boost::multiprecision;
using Int = mp::cpp_int;

namespace {

Int pow10(unsigned e) {
    Int r = 1;
    for (unsigned k = 0; k < e; ++k) r *= 10;
    return r;
}

Int parse_int(const std::string& s, const std::string& whole) {
    std::size_t k = 0;
    bool neg = false;
    if (k < s.size() && (s[k] == '+' || s[k] == '-')) neg = s[k++] == '-';
    if (k == s.size()) fail(ErrorCode::invalid_argument, "not a number: '" + whole + "'");
    Int v = 0;
    for (; k < s.size(); ++k) {
        if (!std::isdigit(static_cast<unsigned char>(s[k]))) fail(ErrorCode::invalid_argument, "not a number: '" + whole + "'");
        v = v * 10 + (s[k] - '0');
    }
    return neg ? Int(-v) : v;
}

template <class T>
T ipow(T x, int n) {
    T r = 1;
    for (; n > 0; n >>= 1) {
        if (n & 1) r *= x;
        x *= x;
    }
    return r;
}

void check_iteration(bool p_is_six, bool p_above_six, int s) {
    if (p_is_six)
        fail(ErrorCode::invalid_argument,
             "gamma_iterate: p = 6 makes 2 kappa_p - 1 vanish; evaluate at p slightly above 6 and take the limit");
    require(p_above_six, "gamma_iterate requires p > 6");
    require(s >= 2, "gamma_iterate requires s >= 2");
}

struct Terms {
    double t1, t2, t3, t4;
};

Terms iteration_terms(double p, double eps, int s, double gamma_in, double big_o) {
    check_iteration(p == 6.0, p > 6.0, s);
    const double k = (p - 4) / (p - 2), d = 2 * k - 1, r = 2 * (1 - k), h = std::ldexp(1.0, -s);
    return {h,
            k * (gamma_in + eps) * ((1 - std::pow(1 - k, s)) / k - 2 * h * (1 - std::pow(r, s)) / d),
            k * h * (1 - 2 / p) * (1 - std::pow(r, s - 1)) / d,
            big_o * std::pow(1 - k, s)};
}

}  // namespace

Rational parse_rational(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (const auto slash = s.find('/'); slash != std::string::npos) {
        const Int num = parse_int(s.substr(0, slash), text), den = parse_int(s.substr(slash + 1), text);
        require(den != 0, "zero denominator in '" + text + "'");
        return Rational(num, den);
    }
    int exp10 = 0;
    if (const auto e = s.find_first_of("eE"); e != std::string::npos) {
        exp10 = static_cast<int>(parse_int(s.substr(e + 1), text));
        s = s.substr(0, e);
    }
    std::string digits = s;
    unsigned frac = 0;
    if (const auto dot = s.find('.'); dot != std::string::npos) {
        frac = static_cast<unsigned>(s.size() - dot - 1);
        digits = s.substr(0, dot) + s.substr(dot + 1);
        if (digits == "" || digits == "-" || digits == "+") fail(ErrorCode::invalid_argument, "not a number: '" + text + "'");
    }
    Rational q(parse_int(digits, text), pow10(frac));
    if (exp10 > 0) q *= Rational(pow10(static_cast<unsigned>(exp10)));
    if (exp10 < 0) q /= Rational(pow10(static_cast<unsigned>(-exp10)));
    return q;
}

double to_double(const Rational& q) { return q.convert_to<double>(); }

std::string to_string(const Rational& q) { return q.str(); }

Rational kappa(const Rational& p) {
    require(p != 2, "kappa_p is undefined at p = 2");
    return (p - 4) / (p - 2);
}

Rational gamma_candidate(const Rational& p) {
    require(p > 6, "the candidate bound for gamma_p needs p > 6");
    return (p - 6) / (2 * p - 8) + Rational(1, 2) - 1 / p;
}

double gamma_candidate(double p) {
    require(p > 6.0, "the candidate bound for gamma_p needs p > 6");
    return (p - 6) / (2 * p - 8) + 0.5 - 1 / p;
}

Constants exponent_constants(const Rational& p) {
    require(p > 2, "exponent constants need p > 2");
    Constants c;
    c.p = p;
    c.kappa = kappa(p);
    if (p <= 4) {
        c.kappa_regime = false;
        c.flag = "p <= 4: kappa_p <= 0, outside the interpolation regime";
    }
    if (p > 6) c.gamma_candidate = gamma_candidate(p);
    return c;
}

bool kappa_identity_holds(const Rational& p) {
    const Rational k = kappa(p);
    return Rational(2) / p == (1 - k) / 2 + k / p;
}

bool contraction_holds(const Rational& p) { return 2 * (1 - kappa(p)) < 1; }

double gamma_iterate(double p, double eps, int s, double gamma_in, double big_o) {
    const Terms t = iteration_terms(p, eps, s, gamma_in, big_o);
    return t.t1 + t.t2 + t.t3 + t.t4;
}

double gamma_iterate_reversed(double p, double eps, int s, double gamma_in, double big_o) {
    const Terms t = iteration_terms(p, eps, s, gamma_in, big_o);
    return t.t4 + t.t3 + t.t2 + t.t1;
}

Rational gamma_iterate(const Rational& p, const Rational& eps, int s, const Rational& gamma_in, const Rational& big_o) {
    check_iteration(p == 6, p > 6, s);
    const Rational k = kappa(p), d = 2 * k - 1, r = 2 * (1 - k), h = Rational(1) / ipow(Rational(2), s);
    return h + k * (gamma_in + eps) * ((1 - ipow(Rational(1 - k), s)) / k - 2 * h * (1 - ipow(r, s)) / d) +
           k * h * (1 - Rational(2) / p) * (1 - ipow(r, s - 1)) / d + big_o * ipow(Rational(1 - k), s);
}

Big gamma_excess(const Big& p, const Big& eps, int s, const Big& gamma_in, const Big& big_o) {
    check_iteration(p == 6, p > 6, s);
    const Big k = (p - 4) / (p - 2), d = 2 * k - 1, r = 2 * (1 - k), h = mp::ldexp(Big(1), -s);
    const Big q = mp::pow(Big(1 - k), s);
    const Big a = q + 2 * k * h * (1 - mp::pow(r, s)) / d;
    return -a * gamma_in + (1 - a) * eps + h + k * h * (1 - 2 / p) * (1 - mp::pow(r, s - 1)) / d + big_o * q;
}

// ---------------------------------------------------------------------------

EpsModel EpsModel::linear() {
    EpsModel m;
    m.type_ = Type::linear;
    m.name_ = "nu";
    return m;
}

EpsModel EpsModel::logarithmic(double C_p, double p) {
    require(C_p > 0 && p > 0, "eps model needs C_p > 0 and p > 0");
    EpsModel m;
    m.type_ = Type::logarithmic;
    m.a_ = std::max(0.0, std::log(C_p) / (4 * p * std::log(10.0)));
    m.name_ = "log(C_p)/(4p log(1/nu)), C_p=" + std::to_string(C_p);
    return m;
}

EpsModel EpsModel::constant(double value) {
    require(value >= 0, "eps model constant must be non-negative");
    EpsModel m;
    m.type_ = Type::constant;
    m.a_ = value;
    m.name_ = "constant " + std::to_string(value);
    return m;
}

EpsModel EpsModel::custom(std::function<Big(const Big&)> fn, std::string name) {
    require(static_cast<bool>(fn), "custom eps model needs a function");
    EpsModel m;
    m.type_ = Type::custom;
    m.fn_ = std::move(fn);
    m.name_ = std::move(name);
    return m;
}

Big EpsModel::at(const Big& L) const {
    switch (type_) {
        case Type::linear: return mp::pow(Big(10), -L);
        case Type::logarithmic: return Big(a_) / L;
        case Type::constant: return Big(a_);
        case Type::custom: return fn_(L);
    }
    return Big(0);
}

std::optional<Big> EpsModel::solve(const Big& target, const Big& L_max) const {
    if (!(target > 0)) return std::nullopt;
    std::optional<Big> L;
    switch (type_) {
        case Type::linear: L = std::max(Big(1), -mp::log10(target) + mp::log10(Big(2))); break;
        case Type::logarithmic: L = a_ > 0 ? std::max(Big(1), 2 * Big(a_) / target) : Big(1); break;
        case Type::constant:
            if (Big(a_) < target) L = Big(1);
            break;
        case Type::custom: {
            if (at(Big(1)) < target) {
                L = Big(1);
                break;
            }
            if (!(at(L_max) < target)) break;
            Big lo = 0, hi = mp::log10(L_max);
            for (int k = 0; k < 400; ++k) {
                const Big mid = (lo + hi) / 2;
                (at(mp::pow(Big(10), mid)) < target ? hi : lo) = mid;
            }
            L = mp::pow(Big(10), hi);
            break;
        }
    }
    if (L && (*L > L_max || !(at(*L) < target))) return std::nullopt;
    return L;
}

// ---------------------------------------------------------------------------

namespace {

struct SearchOutcome {
    std::optional<Witness> witness;
    std::string binding;
};

SearchOutcome search(const Big& p, const Big& big_o, const Big& gamma_in, const Big& endpoint_room,
                     const EpsModel& model, const SearchBounds& b) {
    SearchOutcome out;
    if (!model.solve(endpoint_room, b.L_max)) {
        out.binding = "endpoint: eps(nu) cannot drop below 1/2 - 3/p, so 1/2 - 1/p + eps(nu) < 1 - 4/p fails";
        return out;
    }
    out.binding = "iteration: no s <= " + std::to_string(b.s_max) + " gives gamma_{p,0,s} below gamma_p";
    for (int s = 2; s <= b.s_max; ++s) {
        const Big base = gamma_excess(p, Big(0), s, gamma_in, big_o);
        if (!(base < 0)) continue;
        const Big slack0 = -base;
        const Big per_eps = gamma_excess(p, Big(1), s, gamma_in, big_o) - base;
        std::optional<Big> eps;
        for (int j = 1; j <= b.eps_decades; ++j) {
            const Big e = mp::pow(Big(10), -j);
            if (per_eps * e <= slack0 / 2) {
                eps = e;
                break;
            }
        }
        if (!eps) {
            out.binding = "eps grid: no eps >= 1e-" + std::to_string(b.eps_decades) + " leaves room at s = " + std::to_string(s);
            continue;
        }
        const Big rem = slack0 - per_eps * *eps;
        const auto L = model.solve(std::min(rem, endpoint_room), b.L_max);
        if (!L) {
            out.binding = "nu range: eps(nu) cannot drop below the remaining slack within log10(1/nu) <= L_max";
            continue;
        }
        Witness w;
        w.s = s;
        w.eps = *eps;
        w.log10_inv_nu = *L;
        w.eps_nu = model.at(*L);
        w.gamma_in = gamma_in;
        const Big excess = gamma_excess(p, *eps, s, gamma_in, big_o);
        w.gamma_out = gamma_in + excess;
        w.slack = -excess - w.eps_nu;
        if (!(w.slack > 0)) continue;
        out.witness = w;
        out.binding.clear();
        return out;
    }
    return out;
}

}  // namespace

ClosureResult contradiction_check(double p, double big_o, const EpsModel& model, double margin,
                                  const SearchBounds& bounds, const std::optional<SearchBounds>& extended) {
    if (p == 6.0)
        fail(ErrorCode::invalid_argument,
             "contradiction_check: p = 6 makes 2 kappa_p - 1 vanish; run at p slightly above 6 and take the limit");
    require(p > 6.0 && std::isfinite(p), "contradiction_check requires p > 6");
    require(big_o >= 0 && std::isfinite(big_o), "contradiction_check: the O((1-kappa)^s) constant must be >= 0");
    require(margin > 0 && std::isfinite(margin), "contradiction_check: margin must be positive");
    require(bounds.s_max >= 2 && bounds.eps_decades >= 1, "contradiction_check: empty search bounds");
    ClosureResult r;
    r.p = p;
    r.big_o = big_o;
    r.margin = margin;
    r.model = model.name();
    const Big P(p), B(big_o);
    const Big gamma_in = (P - 6) / (2 * P - 8) + Big(1) / 2 - 1 / P + Big(margin);
    const Big room = Big(1) / 2 - 3 / P;
    SearchOutcome o = search(P, B, gamma_in, room, model, bounds);
    if (!o.witness && extended) {
        o = search(P, B, gamma_in, room, model, *extended);
        r.extended = static_cast<bool>(o.witness);
    }
    r.closes = static_cast<bool>(o.witness);
    r.witness = o.witness;
    r.binding = o.binding;
    return r;
}

// ---------------------------------------------------------------------------

std::vector<Rational> scale_recursion(const Rational& gamma_quad, int depth) {
    require(gamma_quad >= 0, "scale_recursion: gamma_quad must be non-negative");
    require(depth >= 1, "scale_recursion: depth must be at least 1");
    std::vector<Rational> out;
    Rational sum = 0, term = gamma_quad / 3;
    for (int k = 0; k < depth; ++k) {
        sum += term;
        out.push_back(sum);
        term *= Rational(2, 3);
    }
    return out;
}

std::vector<double> scale_recursion(double gamma_quad, int depth) {
    require(gamma_quad >= 0 && std::isfinite(gamma_quad), "scale_recursion: gamma_quad must be non-negative");
    require(depth >= 1, "scale_recursion: depth must be at least 1");
    std::vector<double> out;
    for (int k = 1; k <= depth; ++k) out.push_back(gamma_quad * (1 - std::pow(2.0 / 3.0, k)));
    return out;
}

namespace {

std::vector<TableEntry> checked_table(std::vector<TableEntry> table, double N) {
    require(!table.empty(), "D_multi table is empty");
    require(N >= 1 && std::isfinite(N), "N must be at least 1");
    for (const auto& e : table)
        require(e.M >= 1 && std::isfinite(e.M) && e.value > 0 && std::isfinite(e.value),
                "D_multi table entries need M >= 1 and positive finite values");
    std::sort(table.begin(), table.end(), [](const auto& a, const auto& b) { return a.M < b.M; });
    require(table.front().M == 1 && table.back().M >= N, "D_multi table must cover M in [1, N]");
    return table;
}

double interpolate(const std::vector<TableEntry>& t, double M) {
    if (M <= t.front().M) return t.front().value;
    if (M >= t.back().M) return t.back().value;
    const auto hi = std::lower_bound(t.begin(), t.end(), M, [](const TableEntry& e, double m) { return e.M < m; });
    const auto lo = hi - 1;
    if (hi->M == M) return hi->value;
    const double u = std::log(M / lo->M) / std::log(hi->M / lo->M);
    return std::exp((1 - u) * std::log(lo->value) + u * std::log(hi->value));
}

}  // namespace

double bg_bound(const std::vector<TableEntry>& table, double N, double p, double eps_nu, double C_nu) {
    require(p >= 2 && std::isfinite(p), "bg_bound needs 2 <= p < infinity");
    require(C_nu > 0 && eps_nu >= 0, "bg_bound needs C_nu > 0 and eps >= 0");
    const auto t = checked_table(table, N);
    double sup = 0;
    for (const auto& e : t)
        if (e.M <= N) sup = std::max(sup, std::pow(e.M / N, 1 / p - 0.5) * e.value);
    return C_nu * std::pow(N, eps_nu) * sup;
}

Simulation bg_simulate(const std::vector<TableEntry>& table, double N, double p, double nu, double C_p) {
    require(p >= 2 && std::isfinite(p), "bg_simulate needs 2 <= p < infinity");
    require(nu > 0 && nu <= 0.1, "bg_simulate needs nu in (0, 1/10]");
    require(C_p > 0 && std::isfinite(C_p), "bg_simulate needs C_p > 0");
    const auto t = checked_table(table, N);
    Simulation sim;
    sim.n = std::max(1, static_cast<int>(std::ceil(std::log(N) / std::log(1 / nu) - 1e-12)));
    sim.K = std::pow(N, 1.0 / (2 * sim.n));
    const double step = C_p * std::pow(sim.K, p - 2);
    sim.head = std::pow(step, sim.n);
    double total = sim.head;
    for (int j = 0; j < sim.n; ++j) {
        SimulationStep st;
        st.j = j;
        st.M = N * std::pow(sim.K, -2.0 * j);
        st.d_multi = interpolate(t, st.M);
        st.term = C_p * std::pow(sim.K, 4 * p) * std::pow(step, j) * std::pow(st.d_multi, p);
        total += st.term;
        sim.steps.push_back(st);
    }
    sim.bound = std::pow(total, 1 / p);
    return sim;
}

}  // namespace declab::exponents
