#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fdephi/core.hpp"
#include "fdephi/fraccalc.hpp"
#include "fdephi/mlfun.hpp"

namespace fdephi {

struct SolveOptions {
    double tol = 1e-10;
    int kmax = 200;
    double ml_tol = 1e-13;
    std::vector<double> nu_grid;   // empty: 1, 2, 4, ..., 2^20
};

inline std::vector<double> default_nu_grid() {
    std::vector<double> nu;
    for (int e = 0; e <= 20; ++e) nu.push_back(std::ldexp(1.0, e));
    return nu;
}

class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(std::vector<Finding> findings)
        : std::invalid_argument(join(findings)), findings_(std::move(findings)) {}
    const std::vector<Finding>& findings() const noexcept { return findings_; }

private:
    static std::string join(const std::vector<Finding>& f) {
        std::string s = "invalid problem";
        for (const auto& x : f) s += "; " + to_string(x);
        return s;
    }
    std::vector<Finding> findings_;
};

/// An iteration that ran out of steps; carries the last iterate.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, GridFunction partial, double defect, int iterations)
        : std::runtime_error(what), partial_(std::move(partial)), defect_(defect),
          iterations_(iterations) {}
    const GridFunction& partial() const noexcept { return partial_; }
    double defect() const noexcept { return defect_; }
    int iterations() const noexcept { return iterations_; }

private:
    GridFunction partial_;
    double defect_;
    int iterations_;
};

struct Solution {
    GridFunction x;
    GridFunction particular;
    std::vector<GridFunction> canonical;
    int terms_used = 0;
    ContractionCertificate certificate;
    GridFunction residual;
    double residual_norm = 0.0;
    std::vector<std::string> warnings;
};

/// A problem with coefficients and right-hand side sampled on the grid.
class SampledProblem {
public:
    SampledProblem(FDEProblem p, GridPtr grid) : p_(std::move(p)), ctx_(grid, p_.phi) {
        auto findings = validate_problem(p_, *grid);
        if (!findings.empty()) throw ValidationError(std::move(findings));
        for (const auto& c : p_.coeffs)
            d_.push_back(GridFunction::sample(grid, [&](double t) { return expr::eval_real(c, t); }));
        h_ = GridFunction::sample(grid, [&](double t) { return expr::eval_real(p_.rhs, t); });
    }

    const FDEProblem& problem() const noexcept { return p_; }
    const OperatorContext& ctx() const noexcept { return ctx_; }
    const GridPtr& grid() const noexcept { return ctx_.grid(); }
    const std::vector<GridFunction>& d() const noexcept { return d_; }
    const GridFunction& h() const noexcept { return h_; }
    std::size_t m() const noexcept { return p_.m(); }
    ComplexOrder beta(std::size_t i) const { return p_.beta[i]; }
    ComplexOrder gap(std::size_t i) const { return p_.beta[0] - p_.beta[i]; }

    /// A u = sum_i d_i I^{beta_0 - beta_i} u.
    GridFunction apply_A(const GridFunction& u) const {
        GridFunction out(grid());
        for (std::size_t i = 1; i <= m(); ++i) out += d_[i - 1] * ctx_.integral(u, gap(i));
        return out;
    }

private:
    FDEProblem p_;
    OperatorContext ctx_;
    std::vector<GridFunction> d_;
    GridFunction h_;
};

// ---------------------------------------------------------------------------
// Contraction

namespace detail {

// max over nodes of sum_j |w_kj| e^{nu (t_j - t_k)}, per node.
inline std::vector<double> exp_ratio(const OperatorWeights& w, const Grid& g, double nu) {
    const std::size_t N = g.size();
    std::vector<double> out(N, 0.0);
    std::vector<cplx> row(N);
    std::vector<double> ex(N);
    const bool direct = nu * g.horizon() < 700.0;
    if (direct)
        for (std::size_t j = 0; j < N; ++j) ex[j] = std::exp(nu * g[j]);
    for (std::size_t k = 1; k < N; ++k) {
        w.row(k, {row.data(), k + 1});
        double s = 0.0;
        if (direct) {
            for (std::size_t j = 0; j <= k; ++j) s += std::abs(row[j]) * ex[j];
            out[k] = s / ex[k];
        } else {
            for (std::size_t j = k + 1; j-- > 0;) {
                const double arg = nu * (g[j] - g[k]);
                if (arg < -745.0) break;
                s += std::abs(row[j]) * std::exp(arg);
            }
            out[k] = s;
        }
    }
    return out;
}

// |I^z f| <= Gamma(Re z)/|Gamma(z)| I^{Re z} |f|.
inline double complex_order_factor(ComplexOrder z) {
    if (z.is_real()) return 1.0;
    return std::tgamma(z.re()) * std::abs(rgamma_complex(z.value()));
}

}  // namespace detail

inline ContractionCertificate check_contraction(const SampledProblem& sp,
                                                std::vector<double> nu_grid = {}) {
    if (nu_grid.empty()) nu_grid = default_nu_grid();
    const Grid& g = *sp.grid();
    ContractionCertificate cert;
    cert.per_node_margin = GridFunction(sp.grid());
    if (sp.m() == 0) {
        cert.nu = nu_grid.front();
        cert.C = 0.0;
        cert.satisfied = true;
        if (sp.problem().phi.is_shift()) cert.analytic_C = 0.0;
        return cert;
    }
    std::vector<double> dn;
    for (const auto& d : sp.d()) dn.push_back(d.sup_norm());

    for (double nu : nu_grid) {
        std::vector<double> ratio(g.size(), 0.0);
        for (std::size_t i = 1; i <= sp.m(); ++i) {
            if (dn[i - 1] == 0.0) continue;
            const ComplexOrder z = sp.gap(i);
            const double fac = detail::complex_order_factor(z);
            const auto& w = sp.ctx().weights(ComplexOrder(z.re()));
            const auto r = detail::exp_ratio(w, g, nu);
            for (std::size_t k = 0; k < g.size(); ++k) ratio[k] += dn[i - 1] * fac * r[k];
        }
        const double C = *std::max_element(ratio.begin(), ratio.end());
        cert.nu = nu;
        cert.C = C;
        for (std::size_t k = 0; k < g.size(); ++k) cert.per_node_margin[k] = ratio[k];
        if (sp.problem().phi.is_shift()) {
            double a = 0.0;
            for (std::size_t i = 1; i <= sp.m(); ++i) {
                const ComplexOrder z = sp.gap(i);
                a += dn[i - 1] * detail::complex_order_factor(z) * std::pow(nu, -z.re());
            }
            cert.analytic_C = a;
        }
        if (C < 1.0) {
            cert.satisfied = true;
            break;
        }
    }
    return cert;
}

inline ContractionCertificate check_contraction(const FDEProblem& p, GridPtr g,
                                                std::vector<double> nu_grid = {}) {
    return check_contraction(SampledProblem(p, std::move(g)), std::move(nu_grid));
}

// ---------------------------------------------------------------------------
// Series solvers

namespace detail {

inline void require_zero_init(const FDEProblem& p, const char* who) {
    for (double c : p.init)
        if (c != 0.0) throw std::invalid_argument(std::string(who) + ": initial values must be zero");
}

}  // namespace detail

/// S = sum_k (-A)^k seed, stopping when ||u_k|| <= tol max(1, ||S||).
inline std::pair<GridFunction, int> neumann_sum(const SampledProblem& sp, const GridFunction& seed,
                                                double tol, int kmax) {
    GridFunction u = seed;
    GridFunction S = seed;
    for (int k = 0;; ++k) {
        if (u.sup_norm() <= tol * std::max(1.0, S.sup_norm())) return {S, k};
        if (k == kmax)
            throw SolverError("neumann series: no convergence after " + std::to_string(kmax) +
                                  " terms",
                              sp.ctx().integral(S, sp.beta(0)), u.sup_norm(), kmax);
        u = -sp.apply_A(u);
        S += u;
    }
}

/// Particular solution x = I^{beta_0} sum_k (-A)^k h and the number of terms.
inline std::pair<GridFunction, int> neumann_solve(const SampledProblem& sp, double tol = 1e-10,
                                                  int kmax = 200) {
    detail::require_zero_init(sp.problem(), "neumann_solve");
    auto [S, depth] = neumann_sum(sp, sp.h(), tol, kmax);
    return {sp.ctx().integral(S, sp.beta(0)), depth};
}

inline std::pair<GridFunction, int> neumann_solve(const FDEProblem& p, GridPtr g,
                                                  double tol = 1e-10, int kmax = 200) {
    return neumann_solve(SampledProblem(p, std::move(g)), tol, kmax);
}

/// Successive approximation w_n = h - A w_{n-1}; returns I^{beta_0} w.
inline GridFunction picard_solve(const SampledProblem& sp, double tol = 1e-10, int kmax = 200,
                                 int* iterations = nullptr) {
    detail::require_zero_init(sp.problem(), "picard_solve");
    GridFunction w = sp.h();
    for (int n = 1; n <= kmax; ++n) {
        GridFunction next = sp.h() - sp.apply_A(w);
        const double defect = (next - w).sup_norm();
        w = std::move(next);
        if (iterations) *iterations = n;
        if (defect <= tol) return sp.ctx().integral(w, sp.beta(0));
        if (n == kmax)
            throw SolverError("picard iteration: no convergence after " + std::to_string(kmax) +
                                  " iterations",
                              sp.ctx().integral(w, sp.beta(0)), defect, kmax);
    }
    return sp.ctx().integral(w, sp.beta(0));
}

inline GridFunction picard_solve(const FDEProblem& p, GridPtr g, double tol = 1e-10,
                                 int kmax = 200) {
    return picard_solve(SampledProblem(p, std::move(g)), tol, kmax);
}

// ---------------------------------------------------------------------------
// Canonical sets

/// D^{beta,phi} Psi_j, exact.
inline GridFunction psi_derivative(const OperatorContext& ctx, ComplexOrder beta, int j) {
    if (beta.is_zero()) return psi(ctx, j);
    GridFunction out = phi_power_der(ctx, beta, double(j));
    out *= cplx(1.0 / std::tgamma(j + 1.0));
    return out;
}

/// Canonical solutions x_0 ... x_{n_0-1} of the homogeneous equation.
inline std::vector<GridFunction> canonical_set(const SampledProblem& sp, double tol = 1e-10,
                                               int kmax = 200, int* terms = nullptr) {
    const auto cls = classify_case(sp.problem());
    const int n0 = cls.n[0];
    std::vector<GridFunction> xs;
    for (int j = 0; j < n0; ++j) {
        GridFunction x = psi(sp.ctx(), j);
        const auto idx = canonical_seed_indices(cls, sp.m(), j);
        GridFunction seed(sp.grid());
        for (std::size_t i : idx) seed += sp.d()[i - 1] * psi_derivative(sp.ctx(), sp.beta(i), j);
        if (!idx.empty() && seed.sup_norm() > 0.0) {
            auto [S, depth] = neumann_sum(sp, seed, tol, kmax);
            x -= sp.ctx().integral(S, sp.beta(0));
            if (terms) *terms = std::max(*terms, depth);
        }
        xs.push_back(std::move(x));
    }
    return xs;
}

// ---------------------------------------------------------------------------
// Residual

/// r = sum_{i=0}^m d_i ^C D^{beta_i} x - h with d_0 = 1, and its norm over
/// the interior nodes (first and last two excluded).
inline std::pair<GridFunction, double> residual(const SampledProblem& sp, const GridFunction& x) {
    const auto& init = sp.problem().init;
    auto init_for = [&](ComplexOrder b) {
        const auto n = static_cast<std::size_t>(b.ceiling());
        return std::span<const double>(init.data(), std::min(n, init.size()));
    };
    GridFunction r = caputo_derivative(sp.ctx(), x, sp.beta(0), init_for(sp.beta(0)));
    for (std::size_t i = 1; i <= sp.m(); ++i)
        r += sp.d()[i - 1] * caputo_derivative(sp.ctx(), x, sp.beta(i), init_for(sp.beta(i)));
    r -= sp.h();
    const double norm = r.sup_norm(2, 2);
    return {std::move(r), norm};
}

inline std::pair<GridFunction, double> residual(const FDEProblem& p, const GridFunction& x) {
    return residual(SampledProblem(p, x.grid()), x);
}

// ---------------------------------------------------------------------------
// Superposition

enum class Method { Series, Picard };

inline Solution solve_ivp(const SampledProblem& sp, const SolveOptions& opt = {},
                          Method method = Method::Series) {
    Solution sol;
    sol.certificate = check_contraction(sp, opt.nu_grid);
    if (!sol.certificate.satisfied)
        sol.warnings.push_back("contraction not certified (best C = " +
                               std::to_string(sol.certificate.C) +
                               "); attempting the series anyway");
    SampledProblem zero(sp.problem().with_zero_init(), sp.grid());
    if (method == Method::Picard) {
        sol.particular = picard_solve(zero, opt.tol, opt.kmax, &sol.terms_used);
    } else {
        auto [x, depth] = neumann_solve(zero, opt.tol, opt.kmax);
        sol.particular = std::move(x);
        sol.terms_used = depth;
    }
    sol.canonical = canonical_set(sp, opt.tol, opt.kmax, &sol.terms_used);
    sol.x = sol.particular;
    for (std::size_t j = 0; j < sol.canonical.size(); ++j)
        if (sp.problem().init[j] != 0.0) sol.x += cplx(sp.problem().init[j]) * sol.canonical[j];
    std::tie(sol.residual, sol.residual_norm) = residual(sp, sol.x);
    return sol;
}

inline Solution solve_ivp(const FDEProblem& p, GridPtr g, const SolveOptions& opt = {},
                          Method method = Method::Series) {
    return solve_ivp(SampledProblem(p, std::move(g)), opt, method);
}

// ---------------------------------------------------------------------------
// Constant coefficients

/// lambda_i when every coefficient is a constant expression.
inline std::optional<std::vector<double>> constant_coefficients(const FDEProblem& p) {
    std::vector<double> lam;
    for (const auto& c : p.coeffs) {
        if (!c.is_constant()) return std::nullopt;
        lam.push_back(expr::eval_real(c, 0.0));
    }
    return lam;
}

class NonConstantCoefficients : public std::invalid_argument {
public:
    NonConstantCoefficients()
        : std::invalid_argument("solve_constant: coefficients depend on t; use solve_ivp") {}
};

namespace detail {

// Arguments -lambda_i r^{a_i} of the multivariate Mittag-Leffler kernel.
inline std::vector<cplx> ml_args(const std::vector<double>& lam, const std::vector<cplx>& a,
                                 double r) {
    std::vector<cplx> z(lam.size());
    for (std::size_t i = 0; i < lam.size(); ++i) z[i] = -lam[i] * upow(r, a[i]);
    return z;
}

inline std::vector<double> ml_bounds(const std::vector<double>& lam, const std::vector<cplx>& a,
                                     double rmax) {
    std::vector<double> b(lam.size());
    for (std::size_t i = 0; i < lam.size(); ++i) b[i] = std::abs(lam[i]) * std::pow(rmax, a[i].real());
    return b;
}

}  // namespace detail

/// Solution by the Mittag-Leffler closed forms.
inline Solution solve_constant(const SampledProblem& sp, const SolveOptions& opt = {}) {
    const auto lam_opt = constant_coefficients(sp.problem());
    if (!lam_opt) throw NonConstantCoefficients();
    const auto& lam = *lam_opt;
    const auto& ctx = sp.ctx();
    const auto& U = ctx.samples().u;
    const std::size_t N = U.size();
    const std::size_t m = sp.m();
    const cplx b0 = sp.beta(0).value();

    std::vector<cplx> a(m);
    for (std::size_t i = 1; i <= m; ++i) a[i - 1] = sp.gap(i).value();
    const auto zmax = detail::ml_bounds(lam, a, U.back());

    Solution sol;
    sol.certificate = check_contraction(sp, opt.nu_grid);

    // particular: Gamma(beta_0) sum_j W[k][j] E_{(a), beta_0}(-lambda (U_k - U_j)^a) h_j
    {
        const MlSeries E(MlParams{a, b0}, zmax, opt.ml_tol);
        const auto& W = ctx.weights(sp.beta(0));
        const cplx g0 = gamma_complex(b0);
        sol.particular = GridFunction(sp.grid());
        std::vector<cplx> row(N);
        std::vector<cplx> kernel;
        if (W.toeplitz()) {
            kernel.resize(N);
            for (std::size_t d = 0; d < N; ++d) kernel[d] = E(detail::ml_args(lam, a, U[d]));
        }
        for (std::size_t k = 1; k < N; ++k) {
            W.row(k, {row.data(), k + 1});
            cplx s = 0.0;
            for (std::size_t j = 0; j <= k; ++j) {
                const cplx e = W.toeplitz() ? kernel[k - j] : E(detail::ml_args(lam, a, U[k] - U[j]));
                s += row[j] * e * sp.h()[j];
            }
            sol.particular[k] = g0 * s;
        }
    }

    // canonical: Psi_j - sum_{i in S_j} lambda_i U^{j + a_i} E_{(a), j + 1 + a_i}(-lambda U^a)
    const auto cls = classify_case(sp.problem());
    for (int j = 0; j < cls.n[0]; ++j) {
        GridFunction x = psi(ctx, j);
        for (std::size_t i : canonical_seed_indices(cls, m, j)) {
            if (lam[i - 1] == 0.0) continue;
            const MlSeries E(MlParams{a, double(j) + 1.0 + a[i - 1]}, zmax, opt.ml_tol);
            for (std::size_t k = 0; k < N; ++k)
                x[k] -= lam[i - 1] * detail::upow(U[k], double(j) + a[i - 1]) *
                        E(detail::ml_args(lam, a, U[k]));
        }
        sol.canonical.push_back(std::move(x));
    }

    sol.x = sol.particular;
    for (std::size_t j = 0; j < sol.canonical.size(); ++j)
        if (sp.problem().init[j] != 0.0) sol.x += cplx(sp.problem().init[j]) * sol.canonical[j];
    std::tie(sol.residual, sol.residual_norm) = residual(sp, sol.x);
    return sol;
}

inline Solution solve_constant(const FDEProblem& p, GridPtr g, const SolveOptions& opt = {}) {
    return solve_constant(SampledProblem(p, std::move(g)), opt);
}

}  // namespace fdephi
