#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fdephi {

using cplx = std::complex<double>;

class PoleError : public std::domain_error {
public:
    explicit PoleError(cplx z)
        : std::domain_error("gamma: pole at non-positive integer z = " + std::to_string(z.real())),
          where_(z) {}
    cplx where() const noexcept { return where_; }

private:
    cplx where_;
};

namespace detail {

inline bool is_nonpositive_integer(cplx z) noexcept {
    return z.imag() == 0.0 && z.real() <= 0.0 && std::floor(z.real()) == z.real();
}

// sin(pi x) and cos(pi x) for real x with exact argument reduction.
inline double sinpi(double x) noexcept {
    double r = std::fmod(x, 2.0);
    if (r < 0) r += 2.0;
    if (r == 0.0 || r == 1.0) return 0.0;
    if (r == 0.5) return 1.0;
    if (r == 1.5) return -1.0;
    if (r > 1.0) return -std::sin(std::numbers::pi * (r - 1.0));
    return std::sin(std::numbers::pi * r);
}

inline double cospi(double x) noexcept { return sinpi(x + 0.5); }

inline cplx sinpi(cplx z) noexcept {
    const double y = std::numbers::pi * z.imag();
    return {sinpi(z.real()) * std::cosh(y), cospi(z.real()) * std::sinh(y)};
}

// Stirling series for log Gamma, valid for Re z >= 0.5. The imaginary part
// is not reduced to the principal branch; exp() of the result is exact.
inline cplx lgamma_right(cplx z) {
    // B_{2k} / (2k (2k-1))
    static constexpr std::array<double, 10> coef = {
        1.0 / 12.0,           -1.0 / 360.0,        1.0 / 1260.0,         -1.0 / 1680.0,
        1.0 / 1188.0,         -691.0 / 360360.0,   1.0 / 156.0,          -3617.0 / 122400.0,
        43867.0 / 244188.0,   -174611.0 / 125400.0};
    constexpr double min_abs = 15.0;

    cplx shift_prod = 1.0;
    cplx w = z;
    while (std::abs(w) < min_abs) {
        shift_prod *= w;
        w += 1.0;
    }
    const cplx inv = 1.0 / w;
    const cplx inv2 = inv * inv;
    cplx series = 0.0;
    cplx p = inv;
    for (double c : coef) {
        series += c * p;
        p *= inv2;
    }
    constexpr double half_log_2pi = 0.91893853320467274178032973640562;
    cplx result = (w - 0.5) * std::log(w) - w + half_log_2pi + series;
    if (shift_prod != 1.0) result -= std::log(shift_prod);
    return result;
}

}  // namespace detail

/// Logarithm of Gamma(z). The branch of the imaginary part is arbitrary, so
/// use it only through exp() or for |Gamma| via the real part.
inline cplx lgamma_complex(cplx z) {
    if (detail::is_nonpositive_integer(z)) throw PoleError(z);
    if (z.real() >= 0.5) return detail::lgamma_right(z);
    // Reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z)
    return std::log(std::numbers::pi) - std::log(detail::sinpi(z)) -
           detail::lgamma_right(1.0 - z);
}

/// Gamma(z) for complex z; throws PoleError at 0, -1, -2, ...
inline cplx gamma_complex(cplx z) {
    if (detail::is_nonpositive_integer(z)) throw PoleError(z);
    if (z.imag() == 0.0 && z.real() < 171.0) return std::tgamma(z.real());
    if (z.real() >= 0.5) return std::exp(detail::lgamma_right(z));
    return std::numbers::pi / (detail::sinpi(z) * std::exp(detail::lgamma_right(1.0 - z)));
}

/// 1/Gamma(z). Entire; exactly zero at the poles of Gamma.
inline cplx rgamma_complex(cplx z) {
    if (detail::is_nonpositive_integer(z)) return 0.0;
    if (z.imag() == 0.0 && z.real() > -170.0 && z.real() < 171.0) return 1.0 / std::tgamma(z.real());
    if (z.real() >= 0.5) return std::exp(-detail::lgamma_right(z));
    return detail::sinpi(z) * std::exp(detail::lgamma_right(1.0 - z)) / std::numbers::pi;
}

}  // namespace fdephi
