#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fdephi/core.hpp"
#include "fdephi/gamma.hpp"

namespace fdephi {

namespace detail {

/// u^z for u >= 0 on the principal branch, with 0^0 = 1.
inline cplx upow(double u, cplx z) {
    if (u > 0.0) return std::exp(z * std::log(u));
    if (z == cplx(0.0)) return 1.0;
    if (z.real() > 0.0) return 0.0;
    return {std::numeric_limits<double>::infinity(), 0.0};
}

// Integrals of the power kernel against the two hat functions of one cell.
// With x = a/b = 1 - e:
//   P = int_0^e (1-v)^(alpha-1) (e-v) dv,   Q = int_0^e (1-v)^(alpha-1) v dv.
// Small e goes through the binomial series to avoid cancellation.
inline std::pair<cplx, cplx> cell_moments(cplx alpha, double e) {
    if (e < 0.1) {
        cplx P = 0.0, Q = 0.0, c = 1.0;
        double ep = e * e;
        for (int n = 0; n < 60; ++n) {
            const cplx tp = c * ep / double((n + 1) * (n + 2));
            const cplx tq = c * ep / double(n + 2);
            P += tp;
            Q += tq;
            if (std::abs(tq) <= 1e-18 * std::abs(Q)) break;
            c *= (double(n + 1) - alpha) / double(n + 1);
            ep *= e;
        }
        return {P, Q};
    }
    const double x = 1.0 - e;
    const cplx ap1 = alpha + 1.0;
    if (x <= 0.0) return {1.0 / ap1, 1.0 / (alpha * ap1)};
    const cplx xa = upow(x, alpha);
    const cplx xa1 = xa * x;
    const cplx P = (1.0 - xa1) / ap1 - x * (1.0 - xa) / alpha;
    const cplx Q = (1.0 - xa) / alpha - (1.0 - xa1) / ap1;
    return {P, Q};
}

/// Left and right hat weights of cell [U_j, U_j + delta] seen from target U_k = U_j + b.
inline std::pair<cplx, cplx> cell_weights(cplx alpha, cplx inv_gamma, double b, double delta) {
    const double e = delta / b;
    auto [P, Q] = cell_moments(alpha, e);
    const cplx s = upow(b, alpha) * (inv_gamma / e);
    return {s * P, s * Q};
}

}  // namespace detail

/// Quadrature weights of I^{alpha,phi} on a fixed grid.
///
/// Row k holds the weights over source nodes 0..k. Uniform phi-spacing gives
/// a Toeplitz structure stored in O(N); otherwise rows are stored densely or,
/// when `store` is false, recomputed at each application.
class OperatorWeights {
public:
    OperatorWeights(ComplexOrder alpha, std::shared_ptr<const PhiSamples> phi, bool store = true)
        : alpha_(alpha), phi_(std::move(phi)) {
        if (alpha_.is_zero()) throw std::invalid_argument("OperatorWeights: order must be nonzero");
        inv_gamma_ = rgamma_complex(alpha_.value());
        const auto& U = phi_->u;
        const std::size_t N = U.size();
        const double d0 = U.back() / double(N - 1);
        toeplitz_ = true;
        for (std::size_t j = 0; j + 1 < N && toeplitz_; ++j)
            if (std::abs((U[j + 1] - U[j]) - d0) > 1e-9 * d0) toeplitz_ = false;
        if (toeplitz_) {
            left_.assign(N + 1, 0.0);
            right_.assign(N + 1, 0.0);
            for (std::size_t d = 1; d < N; ++d) {
                auto [l, r] = detail::cell_weights(alpha_.value(), inv_gamma_, double(d) * d0, d0);
                left_[d] = l;
                right_[d] = r;
            }
        } else if (store) {
            dense_.resize(N * (N + 1) / 2);
            for (std::size_t k = 0; k < N; ++k) compute_row(k, {dense_.data() + offset(k), k + 1});
        }
    }

    ComplexOrder order() const noexcept { return alpha_; }
    std::size_t size() const noexcept { return phi_->u.size(); }
    bool toeplitz() const noexcept { return toeplitz_; }
    const PhiSamples& phi() const noexcept { return *phi_; }

    /// Weight of source node j in target row k (zero for j > k).
    cplx operator()(std::size_t k, std::size_t j) const {
        if (j > k) return 0.0;
        if (toeplitz_) return toeplitz_weight(k, j);
        if (!dense_.empty()) return dense_[offset(k) + j];
        std::vector<cplx> row(k + 1);
        compute_row(k, row);
        return row[j];
    }

    /// Fills row k (length k+1).
    void row(std::size_t k, std::span<cplx> out) const {
        if (toeplitz_) {
            for (std::size_t j = 0; j <= k; ++j) out[j] = toeplitz_weight(k, j);
        } else if (!dense_.empty()) {
            std::copy_n(dense_.data() + offset(k), k + 1, out.data());
        } else {
            compute_row(k, out);
        }
    }

    GridFunction apply(const GridFunction& f) const {
        const std::size_t N = size();
        if (f.size() != N) throw std::invalid_argument("OperatorWeights: grid size mismatch");
        GridFunction out(f.grid());
        auto fv = f.values();
        if (toeplitz_) {
            for (std::size_t k = 1; k < N; ++k) {
                cplx s = left_[k] * fv[0] + right_[1] * fv[k];
                for (std::size_t j = 1; j < k; ++j) s += (left_[k - j] + right_[k - j + 1]) * fv[j];
                out[k] = s;
            }
            return out;
        }
        std::vector<cplx> buf;
        for (std::size_t k = 1; k < N; ++k) {
            const cplx* w;
            if (!dense_.empty()) {
                w = dense_.data() + offset(k);
            } else {
                buf.resize(k + 1);
                compute_row(k, buf);
                w = buf.data();
            }
            cplx s = 0.0;
            for (std::size_t j = 0; j <= k; ++j) s += w[j] * fv[j];
            out[k] = s;
        }
        return out;
    }

private:
    static std::size_t offset(std::size_t k) { return k * (k + 1) / 2; }

    cplx toeplitz_weight(std::size_t k, std::size_t j) const {
        if (k == 0) return 0.0;
        if (j == 0) return left_[k];
        if (j == k) return right_[1];
        return left_[k - j] + right_[k - j + 1];
    }

    void compute_row(std::size_t k, std::span<cplx> out) const {
        const auto& U = phi_->u;
        std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k + 1), cplx(0.0));
        for (std::size_t j = 0; j < k; ++j) {
            auto [l, r] = detail::cell_weights(alpha_.value(), inv_gamma_, U[k] - U[j], U[j + 1] - U[j]);
            out[j] += l;
            out[j + 1] += r;
        }
    }

    ComplexOrder alpha_;
    std::shared_ptr<const PhiSamples> phi_;
    cplx inv_gamma_;
    bool toeplitz_ = false;
    std::vector<cplx> left_, right_;
    std::vector<cplx> dense_;
};

/// Grid, phi samples and a per-order cache of stored weights.
class OperatorContext {
public:
    OperatorContext(GridPtr grid, const PhiSpec& phi)
        : grid_(std::move(grid)), phi_(phi), samples_(std::make_shared<PhiSamples>(phi, *grid_)) {}

    const GridPtr& grid() const noexcept { return grid_; }
    const PhiSpec& phi() const noexcept { return phi_; }
    const PhiSamples& samples() const noexcept { return *samples_; }
    std::shared_ptr<const PhiSamples> samples_ptr() const noexcept { return samples_; }

    const OperatorWeights& weights(ComplexOrder alpha) const {
        const auto key = std::make_pair(alpha.re(), alpha.im());
        auto it = cache_.find(key);
        if (it == cache_.end())
            it = cache_.emplace(key, std::make_unique<OperatorWeights>(alpha, samples_)).first;
        return *it->second;
    }

    /// I^{alpha,phi} f; order zero is the identity.
    GridFunction integral(const GridFunction& f, ComplexOrder alpha) const {
        if (alpha.is_zero()) return f;
        return weights(alpha).apply(f);
    }

    /// (phi(t) - phi(0))^z.
    GridFunction shifted_power(cplx z) const {
        GridFunction out(grid_);
        for (std::size_t k = 0; k < grid_->size(); ++k) out[k] = detail::upow(samples_->u[k], z);
        return out;
    }

private:
    GridPtr grid_;
    PhiSpec phi_;
    std::shared_ptr<const PhiSamples> samples_;
    mutable std::map<std::pair<double, double>, std::unique_ptr<OperatorWeights>> cache_;
};

// ---------------------------------------------------------------------------
// Operators on grid functions

namespace detail {

inline void require_integrable(ComplexOrder alpha) {
    if (alpha.is_zero()) return;
    if (!(alpha.re() > 0.0)) throw std::invalid_argument("fractional order must have Re > 0");
}

}  // namespace detail

/// I^{alpha,phi} f by product trapezoid in u = phi(t).
inline GridFunction frac_integral(const GridFunction& f, ComplexOrder alpha, const PhiSpec& phi) {
    detail::require_integrable(alpha);
    if (alpha.is_zero()) return f;
    auto samples = std::make_shared<const PhiSamples>(phi, *f.grid());
    return OperatorWeights(alpha, samples, false).apply(f);
}

namespace detail {

// Fornberg weights for the d-th derivative at z from nodes x[0..n-1].
inline std::vector<double> fd_weights(const std::vector<double>& x, double z, int d) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> c(n, std::vector<double>(d + 1, 0.0));
    double c1 = 1.0, c4 = x[0] - z;
    c[0][0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const int mn = std::min<int>(static_cast<int>(i), d);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - z;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = c[i][d];
    return w;
}

}  // namespace detail

/// (1/phi' d/dt) f: central differences inside, one-sided three-point at the ends.
inline GridFunction phi_derivative(const GridFunction& f, const PhiSamples& phi) {
    const Grid& g = *f.grid();
    const std::size_t N = g.size();
    GridFunction out(f.grid());
    auto fv = f.values();
    auto stencil = [&](std::size_t first, std::size_t at) {
        const std::vector<double> x = {g[first], g[first + 1], g[first + 2]};
        const auto w = detail::fd_weights(x, g[at], 1);
        return w[0] * fv[first] + w[1] * fv[first + 1] + w[2] * fv[first + 2];
    };
    out[0] = stencil(0, 0);
    for (std::size_t k = 1; k + 1 < N; ++k) out[k] = stencil(k - 1, k);
    out[N - 1] = stencil(N - 3, N - 1);
    for (std::size_t k = 0; k < N; ++k) out[k] /= phi.prime[k];
    return out;
}

/// (1/phi' d/dt)^2 f in compact form: differences over single cells divided by
/// phi' at the midpoints, then differenced again and divided by phi' at the
/// nodes. The end nodes use a one-sided four-point rule in u = phi(t).
inline GridFunction phi_second_derivative(const GridFunction& f, const PhiSamples& phi) {
    const Grid& g = *f.grid();
    const std::size_t N = g.size();
    if (N < 4) throw std::invalid_argument("second derivative needs at least 4 nodes");
    GridFunction out(f.grid());
    auto fv = f.values();
    for (std::size_t k = 1; k + 1 < N; ++k) {
        const double hm = g[k] - g[k - 1], hp = g[k + 1] - g[k];
        const cplx Fp = (fv[k + 1] - fv[k]) / (hp * phi.prime_mid[k]);
        const cplx Fm = (fv[k] - fv[k - 1]) / (hm * phi.prime_mid[k - 1]);
        out[k] = (Fp - Fm) / (0.5 * (hm + hp) * phi.prime[k]);
    }
    auto end = [&](std::size_t first, std::size_t at) {
        const std::vector<double> x(phi.u.begin() + first, phi.u.begin() + first + 4);
        const auto w = detail::fd_weights(x, phi.u[at], 2);
        cplx s = 0.0;
        for (std::size_t i = 0; i < 4; ++i) s += w[i] * fv[first + i];
        return s;
    };
    out[0] = end(0, 0);
    out[N - 1] = end(N - 4, N - 1);
    return out;
}

/// (1/phi' d/dt)^n f; pairs of applications use the compact second difference.
inline GridFunction phi_derivative(const GridFunction& f, const PhiSamples& phi, int n) {
    GridFunction out = f;
    if (n % 2 == 1) out = phi_derivative(out, phi);
    for (int i = 0; i < n / 2; ++i) out = phi_second_derivative(out, phi);
    return out;
}

/// D^{alpha,phi} f = (1/phi' d/dt)^n I^{n-alpha,phi} f.
inline GridFunction rl_derivative(const OperatorContext& ctx, const GridFunction& f,
                                  ComplexOrder alpha) {
    detail::require_integrable(alpha);
    if (alpha.is_zero()) return f;
    const int n = alpha.ceiling();
    const ComplexOrder rest = ComplexOrder(n) - alpha;
    return phi_derivative(ctx.integral(f, rest), ctx.samples(), n);
}

inline GridFunction rl_derivative(const GridFunction& f, ComplexOrder alpha, const PhiSpec& phi) {
    return rl_derivative(OperatorContext(f.grid(), phi), f, alpha);
}

/// Psi_j = (phi(t) - phi(0))^j / j!.
inline GridFunction psi(const OperatorContext& ctx, int j) {
    GridFunction out = ctx.shifted_power(double(j));
    out *= cplx(1.0 / std::tgamma(j + 1.0));
    return out;
}

/// f minus its quasi-Taylor polynomial sum_j init_j Psi_j.
inline GridFunction remove_taylor(const OperatorContext& ctx, const GridFunction& f,
                                  std::span<const double> init) {
    GridFunction g = f;
    for (std::size_t j = 0; j < init.size(); ++j)
        if (init[j] != 0.0) g -= cplx(init[j]) * psi(ctx, int(j));
    return g;
}

/// Modified Caputo derivative with given values (D^{j,phi} f)(0), j < n.
inline GridFunction caputo_derivative(const OperatorContext& ctx, const GridFunction& f,
                                      ComplexOrder alpha, std::span<const double> init) {
    const int n = alpha.ceiling();
    if (init.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("caputo_derivative: expected " + std::to_string(n) +
                                    " initial value(s), got " + std::to_string(init.size()));
    if (alpha.is_zero()) return f;
    return rl_derivative(ctx, remove_taylor(ctx, f, init), alpha);
}

inline GridFunction caputo_derivative(const GridFunction& f, ComplexOrder alpha, const PhiSpec& phi,
                                      std::span<const double> init) {
    return caputo_derivative(OperatorContext(f.grid(), phi), f, alpha, init);
}

/// Estimates (D^{j,phi} f)(0) for j < n from the discrete derivative.
inline std::vector<double> estimate_init(const OperatorContext& ctx, const GridFunction& f, int n) {
    std::vector<double> init;
    GridFunction d = f;
    for (int j = 0; j < n; ++j) {
        init.push_back(d[0].real());
        d = phi_derivative(d, ctx.samples());
    }
    return init;
}

/// Caputo derivative of a smooth function: I^{n-alpha,phi} (1/phi' d/dt)^n f.
inline GridFunction caputo_smooth(const OperatorContext& ctx, const GridFunction& f,
                                  ComplexOrder alpha) {
    detail::require_integrable(alpha);
    if (alpha.is_zero()) return f;
    const int n = alpha.ceiling();
    return ctx.integral(phi_derivative(f, ctx.samples(), n), ComplexOrder(n) - alpha);
}

inline GridFunction caputo_smooth(const GridFunction& f, ComplexOrder alpha, const PhiSpec& phi) {
    return caputo_smooth(OperatorContext(f.grid(), phi), f, alpha);
}

// ---------------------------------------------------------------------------
// Power rules

/// I^{alpha,phi} (phi - phi(0))^p = Gamma(p+1)/Gamma(p+1+alpha) (phi - phi(0))^{p+alpha}.
inline GridFunction phi_power_int(const OperatorContext& ctx, ComplexOrder alpha, cplx p) {
    if (!(p.real() > -1.0)) throw std::invalid_argument("phi_power_int: need Re p > -1");
    const cplx c = gamma_complex(p + 1.0) * rgamma_complex(p + 1.0 + alpha.value());
    GridFunction out = ctx.shifted_power(p + alpha.value());
    out *= c;
    return out;
}

/// D^{alpha,phi} (phi - phi(0))^p = Gamma(p+1)/Gamma(p+1-alpha) (phi - phi(0))^{p-alpha}.
inline GridFunction phi_power_der(const OperatorContext& ctx, ComplexOrder alpha, cplx p) {
    if (!(p.real() >= 0.0)) throw std::invalid_argument("phi_power_der: need Re p >= 0");
    const cplx c = gamma_complex(p + 1.0) * rgamma_complex(p + 1.0 - alpha.value());
    if (c == cplx(0.0)) return GridFunction(ctx.grid());
    GridFunction out = ctx.shifted_power(p - alpha.value());
    out *= c;
    return out;
}

inline GridFunction phi_power_int(ComplexOrder alpha, cplx p, const PhiSpec& phi, GridPtr g) {
    return phi_power_int(OperatorContext(std::move(g), phi), alpha, p);
}

inline GridFunction phi_power_der(ComplexOrder alpha, cplx p, const PhiSpec& phi, GridPtr g) {
    return phi_power_der(OperatorContext(std::move(g), phi), alpha, p);
}

}  // namespace fdephi
