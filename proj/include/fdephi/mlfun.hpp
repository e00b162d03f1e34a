#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdephi/gamma.hpp"

namespace fdephi {

struct MlParams {
    std::vector<cplx> a;   // a_1 ... a_n
    cplx b = 1.0;

    void validate() const {
        for (std::size_t i = 0; i < a.size(); ++i)
            if (!(a[i].real() > 0.0))
                throw std::invalid_argument("ml: Re a[" + std::to_string(i) + "] must be positive");
        if (!(b.real() > 0.0)) throw std::invalid_argument("ml: Re b must be positive");
    }
};

/// c_0 = 1, c_k = prod_{j<k} Gamma(alpha[j beta + gamma] + 1) / Gamma(alpha[j beta + gamma] + lambda + 1).
struct KsParams {
    double alpha = 1.0;
    double beta = 1.0;
    cplx gamma = 0.0;
    double lambda = 1.0;
};

/// Raised when the level cap is hit before the stopping rule fires.
class SeriesDivergence : public std::runtime_error {
public:
    SeriesDivergence(const std::string& what, cplx partial, double last_level, int levels)
        : std::runtime_error(what), partial_(partial), last_level_(last_level), levels_(levels) {}
    cplx partial_sum() const noexcept { return partial_; }
    double last_level() const noexcept { return last_level_; }
    int levels() const noexcept { return levels_; }

private:
    cplx partial_;
    double last_level_;
    int levels_;
};

inline constexpr int kDefaultLevelCap = 400;

namespace detail {

struct KahanSum {
    cplx sum = 0.0, comp = 0.0;
    void add(cplx x) {
        const cplx y = x - comp;
        const cplx t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

// Calls f(l) for every composition l of k into n parts, lexicographically.
template <class F>
void for_each_composition(int k, std::size_t n, F&& f) {
    std::vector<int> l(n, 0);
    if (n == 0) {
        if (k == 0) f(l);
        return;
    }
    // lexicographic in (l_1..l_n) ascending means l_1 grows last
    auto rec_lex = [&](auto&& self, std::size_t i, int left) -> void {
        if (i + 1 == n) {
            l[i] = left;
            f(l);
            return;
        }
        for (int v = 0; v <= left; ++v) {
            l[i] = v;
            self(self, i + 1, left - v);
        }
    };
    rec_lex(rec_lex, 0, k);
}

// Runs the level loop with the three-small-levels stopping rule.
// level(k, abs_sum) returns the level sum and accumulates sum |term| into abs_sum.
template <class Level>
cplx sum_levels(Level&& level, double tol, int cap, const char* name) {
    KahanSum acc;
    int small = 0;
    double last = 0.0;
    for (int k = 0; k <= cap; ++k) {
        double mag = 0.0;
        acc.add(level(k, mag));
        last = mag;
        if (mag < tol * std::max(1.0, std::abs(acc.sum))) {
            if (++small == 3) return acc.sum;
        } else {
            small = 0;
        }
    }
    throw SeriesDivergence(std::string(name) + ": no convergence within " + std::to_string(cap) +
                               " levels",
                           acc.sum, last, cap);
}

}  // namespace detail

/// E_{(a_1..a_n), b}(z_1..z_n) = sum_k sum_{|l|=k} (k; l) prod z_i^{l_i} / Gamma(b + sum a_i l_i).
inline cplx ml_multivariate(const MlParams& p, const std::vector<cplx>& z, double tol = 1e-13,
                            int cap = kDefaultLevelCap) {
    p.validate();
    if (z.size() != p.a.size()) throw std::invalid_argument("ml: arity of a and z differ");
    if (!(tol > 0.0)) throw std::invalid_argument("ml: tol must be positive");
    const std::size_t n = z.size();
    std::vector<cplx> logz(n);
    for (std::size_t i = 0; i < n; ++i)
        logz[i] = z[i] == cplx(0.0) ? cplx(-INFINITY) : std::log(z[i]);

    auto level = [&](int k, double& mag) {
        detail::KahanSum s;
        const double lk = std::lgamma(k + 1.0);
        detail::for_each_composition(k, n, [&](const std::vector<int>& l) {
            cplx arg = p.b;
            cplx direct = 1.0;
            int m = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (l[i] == 0) continue;
                if (z[i] == cplx(0.0)) return;
                arg += double(l[i]) * p.a[i];
                for (int j = 1; j <= l[i]; ++j) direct *= z[i] * double(++m) / double(j);
            }
            cplx term = direct * rgamma_complex(arg);
            if (!std::isfinite(std::abs(term)) || std::abs(direct) > 1e250) {
                cplx lg = lk;
                for (std::size_t i = 0; i < n; ++i)
                    if (l[i]) lg += double(l[i]) * logz[i] - std::lgamma(l[i] + 1.0);
                term = std::exp(lg - lgamma_complex(arg));
            }
            mag += std::abs(term);
            s.add(term);
        });
        return s.sum;
    };
    const cplx v = detail::sum_levels(level, tol, cap, "ml_multivariate");
    bool real = p.b.imag() == 0.0;
    for (std::size_t i = 0; i < n; ++i) real = real && p.a[i].imag() == 0.0 && z[i].imag() == 0.0;
    return real ? cplx(v.real()) : v;
}

/// E_{a,b}(z).
inline cplx ml_two_param(cplx a, cplx b, cplx z, double tol = 1e-13, int cap = kDefaultLevelCap) {
    return ml_multivariate(MlParams{{a}, b}, {z}, tol, cap);
}

/// Kilbas-Saigo type series sum_k c_k z^k.
inline cplx kilbas_saigo(const KsParams& p, cplx z, double tol = 1e-13, int cap = kDefaultLevelCap) {
    if (!(tol > 0.0)) throw std::invalid_argument("kilbas_saigo: tol must be positive");
    cplx logc = 0.0;
    bool dead = false;  // a denominator pole zeroes every later coefficient
    const cplx logz = z == cplx(0.0) ? cplx(-INFINITY) : std::log(z);
    auto level = [&](int k, double& mag) -> cplx {
        if (k > 0 && !dead) {
            const cplx x = p.alpha * ((k - 1) * p.beta + p.gamma);
            if (detail::is_nonpositive_integer(x + 1.0))
                throw std::domain_error("kilbas_saigo: Gamma pole in numerator at j = " +
                                        std::to_string(k - 1));
            if (detail::is_nonpositive_integer(x + p.lambda + 1.0)) {
                dead = true;
            } else {
                logc += lgamma_complex(x + 1.0) - lgamma_complex(x + p.lambda + 1.0);
            }
        }
        if (dead) return 0.0;
        if (k == 0) {
            mag = 1.0;
            return 1.0;
        }
        if (z == cplx(0.0)) return 0.0;
        const cplx term = std::exp(logc + double(k) * logz);
        mag = std::abs(term);
        return term;
    };
    const cplx v = detail::sum_levels(level, tol, cap, "kilbas_saigo");
    return p.gamma.imag() == 0.0 && z.imag() == 0.0 ? cplx(v.real()) : v;
}

/// Precomputed multivariate Mittag-Leffler series for repeated evaluation
/// at arguments bounded by zmax (componentwise modulus).
class MlSeries {
public:
    MlSeries(const MlParams& p, const std::vector<double>& zmax, double tol = 1e-13,
             int cap = kDefaultLevelCap)
        : n_(p.a.size()) {
        p.validate();
        if (zmax.size() != n_) throw std::invalid_argument("MlSeries: arity of a and zmax differ");
        std::vector<double> logzmax(n_);
        for (std::size_t i = 0; i < n_; ++i) logzmax[i] = zmax[i] > 0 ? std::log(zmax[i]) : -INFINITY;
        double bound_sum = 0.0;
        int small = 0;
        for (int k = 0;; ++k) {
            if (k > cap)
                throw SeriesDivergence("MlSeries: no convergence within " + std::to_string(cap) +
                                           " levels",
                                       bound_sum, 0.0, cap);
            double level_bound = 0.0;
            const double lk = std::lgamma(k + 1.0);
            detail::for_each_composition(k, n_, [&](const std::vector<int>& l) {
                cplx lg = lk;
                cplx arg = p.b;
                double lb = 0.0;
                for (std::size_t i = 0; i < n_; ++i) {
                    if (l[i] == 0) continue;
                    lg -= std::lgamma(l[i] + 1.0);
                    arg += double(l[i]) * p.a[i];
                    lb += double(l[i]) * logzmax[i];
                }
                const cplx c = std::exp(lg - lgamma_complex(arg));
                if (std::isinf(lb) && lb < 0) return;
                level_bound += std::abs(c) * std::exp(lb);
                coef_.push_back(c);
                for (std::size_t i = 0; i < n_; ++i) exps_.push_back(l[i]);
                max_exp_ = std::max(max_exp_, k);
            });
            bound_sum += level_bound;
            if (level_bound < tol * std::max(1.0, bound_sum)) {
                if (++small == 3) break;
            } else {
                small = 0;
            }
        }
    }

    std::size_t terms() const noexcept { return coef_.size(); }

    cplx operator()(const std::vector<cplx>& z) const {
        if (z.size() != n_) throw std::invalid_argument("MlSeries: arity mismatch");
        const std::size_t stride = static_cast<std::size_t>(max_exp_) + 1;
        std::vector<cplx> pw(n_ * stride, 1.0);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t e = 1; e < stride; ++e) pw[i * stride + e] = pw[i * stride + e - 1] * z[i];
        detail::KahanSum s;
        for (std::size_t t = 0; t < coef_.size(); ++t) {
            cplx v = coef_[t];
            for (std::size_t i = 0; i < n_; ++i) {
                const int e = exps_[t * n_ + i];
                if (e) v *= pw[i * stride + static_cast<std::size_t>(e)];
            }
            s.add(v);
        }
        return s.sum;
    }

private:
    std::size_t n_;
    std::vector<cplx> coef_;
    std::vector<int> exps_;
    int max_exp_ = 0;
};

}  // namespace fdephi
