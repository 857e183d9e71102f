#pragma once

#include <Eigen/Core>

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace declab {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Complex = std::complex<double>;

/// Error categories surfaced through the C API as status codes.
enum class ErrorCode : int {
    invalid_argument = 1,
    schema = 2,
    numeric_poison = 3,
    degenerate = 4,
    not_transverse = 5,
    io = 6,
    internal = 99,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised when a transversality-dependent measurement is handed a non-transverse pair.
class NotTransverseError : public Error {
public:
    NotTransverseError(double min_form, double nu)
        : Error(ErrorCode::not_transverse,
                "squares are not nu-transverse: min |Q| = " + std::to_string(min_form) +
                    " < nu = " + std::to_string(nu)),
          min_form_(min_form) {}
    double min_form() const noexcept { return min_form_; }

private:
    double min_form_;
};

/// A sample of the integrand was NaN or infinite; carries the offending point.
class NumericPoisonError : public Error {
public:
    NumericPoisonError(const Vec4& x, const std::string& what)
        : Error(ErrorCode::numeric_poison, what), x_(x) {}
    const Vec4& point() const noexcept { return x_; }

private:
    Vec4 x_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, const std::string& what) {
    if (!condition) fail(ErrorCode::invalid_argument, what);
}

/// Deterministic 64-bit mixer used to derive per-chunk / per-trial seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ (stream * 0xd1342543de82ef95ULL + 1));
}

}  // namespace declab
