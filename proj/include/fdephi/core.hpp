#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fdephi/expr.hpp"
#include "fdephi/gamma.hpp"

namespace fdephi {

// ---------------------------------------------------------------------------
// Orders

/// A fractional order with Re > 0, or exactly zero.
class ComplexOrder {
public:
    constexpr ComplexOrder() = default;
    ComplexOrder(double re, double im = 0.0) : re_(re), im_(im) {
        if (!valid(re, im))
            throw std::invalid_argument("order must have Re > 0 or be exactly 0, got (" +
                                        std::to_string(re) + ", " + std::to_string(im) + ")");
    }

    static bool valid(double re, double im) noexcept {
        if (!std::isfinite(re) || !std::isfinite(im)) return false;
        return re > 0.0 || (re == 0.0 && im == 0.0);
    }

    double re() const noexcept { return re_; }
    double im() const noexcept { return im_; }
    cplx value() const noexcept { return {re_, im_}; }
    bool is_zero() const noexcept { return re_ == 0.0 && im_ == 0.0; }
    bool is_real() const noexcept { return im_ == 0.0; }
    bool is_positive_integer() const noexcept {
        return im_ == 0.0 && re_ > 0.0 && std::floor(re_) == re_;
    }

    /// Number of integer derivatives hidden in the order: the order itself
    /// for natural orders, floor(Re)+1 otherwise, and 0 for order zero.
    int ceiling() const noexcept {
        if (is_zero()) return 0;
        if (is_positive_integer()) return static_cast<int>(re_);
        return static_cast<int>(std::floor(re_)) + 1;
    }

    friend ComplexOrder operator-(const ComplexOrder& a, const ComplexOrder& b) {
        return ComplexOrder(a.re_ - b.re_, a.im_ - b.im_);
    }
    friend bool operator==(const ComplexOrder&, const ComplexOrder&) = default;

private:
    double re_ = 0.0;
    double im_ = 0.0;
};

inline std::string to_string(const ComplexOrder& a) {
    std::ostringstream os;
    os << a.re();
    if (a.im() != 0.0) os << (a.im() > 0 ? "+" : "-") << std::abs(a.im()) << "i";
    return os.str();
}

// ---------------------------------------------------------------------------
// Grids and sampled functions

class Grid {
public:
    explicit Grid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
        if (nodes_.size() < 3) throw std::invalid_argument("grid needs at least 3 nodes");
        if (nodes_.front() != 0.0) throw std::invalid_argument("grid must start at 0");
        for (std::size_t k = 1; k < nodes_.size(); ++k)
            if (!(nodes_[k] > nodes_[k - 1]))
                throw std::invalid_argument("grid nodes must be strictly increasing");
    }

    /// n nodes equally spaced on [0, T]; the last node is exactly T.
    static std::shared_ptr<const Grid> uniform(double T, std::size_t n) {
        if (!(T > 0.0)) throw std::invalid_argument("horizon T must be positive");
        if (n < 3) throw std::invalid_argument("grid needs at least 3 nodes");
        std::vector<double> t(n);
        for (std::size_t k = 0; k < n; ++k)
            t[k] = T * static_cast<double>(k) / static_cast<double>(n - 1);
        t.back() = T;
        return std::make_shared<const Grid>(std::move(t));
    }

    std::size_t size() const noexcept { return nodes_.size(); }
    double horizon() const noexcept { return nodes_.back(); }
    double operator[](std::size_t k) const { return nodes_[k]; }
    std::span<const double> nodes() const noexcept { return nodes_; }

private:
    std::vector<double> nodes_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Complex samples of a function, one per grid node.
class GridFunction {
public:
    GridFunction() = default;
    explicit GridFunction(GridPtr grid)
        : grid_(std::move(grid)), values_(grid_ ? grid_->size() : 0, cplx(0.0)) {}
    GridFunction(GridPtr grid, std::vector<cplx> values)
        : grid_(std::move(grid)), values_(std::move(values)) {
        if (!grid_ || values_.size() != grid_->size())
            throw std::invalid_argument("grid function length does not match grid");
    }

    template <class F>
    static GridFunction sample(GridPtr grid, F&& f) {
        GridFunction out(grid);
        for (std::size_t k = 0; k < grid->size(); ++k) out.values_[k] = cplx(f((*grid)[k]));
        return out;
    }

    const GridPtr& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    cplx operator[](std::size_t k) const { return values_[k]; }
    cplx& operator[](std::size_t k) { return values_[k]; }
    std::span<const cplx> values() const noexcept { return values_; }
    std::span<cplx> values() noexcept { return values_; }

    double sup_norm() const {
        double m = 0.0;
        for (auto v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Largest modulus over nodes [first, size - skip_last).
    double sup_norm(std::size_t first, std::size_t skip_last) const {
        double m = 0.0;
        for (std::size_t k = first; k + skip_last < values_.size(); ++k)
            m = std::max(m, std::abs(values_[k]));
        return m;
    }

    GridFunction& operator+=(const GridFunction& o) {
        check_same(o);
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
        return *this;
    }
    GridFunction& operator-=(const GridFunction& o) {
        check_same(o);
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
        return *this;
    }
    GridFunction& operator*=(cplx s) {
        for (auto& v : values_) v *= s;
        return *this;
    }
    /// Pointwise product.
    GridFunction& operator*=(const GridFunction& o) {
        check_same(o);
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] *= o.values_[k];
        return *this;
    }

    friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
    friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
    friend GridFunction operator*(GridFunction a, const GridFunction& b) { return a *= b; }
    friend GridFunction operator*(cplx s, GridFunction a) { return a *= s; }
    friend GridFunction operator*(GridFunction a, cplx s) { return a *= s; }
    friend GridFunction operator-(GridFunction a) { return a *= -1.0; }

private:
    void check_same(const GridFunction& o) const {
        if (o.values_.size() != values_.size())
            throw std::invalid_argument("grid functions live on different grids");
    }

    GridPtr grid_;
    std::vector<cplx> values_;
};

// ---------------------------------------------------------------------------
// phi

/// The function phi with its symbolic derivative.
class PhiSpec {
public:
    explicit PhiSpec(expr::Expr phi)
        : phi_(std::move(phi)), phi_prime_(expr::differentiate(phi_)) {}
    explicit PhiSpec(std::string_view src) : PhiSpec(expr::parse(src)) {}

    static PhiSpec identity() { return PhiSpec(expr::Expr::var()); }

    const expr::Expr& phi() const noexcept { return phi_; }
    const expr::Expr& phi_prime() const noexcept { return phi_prime_; }

    double operator()(double t) const { return expr::eval_real(phi_, t); }
    double prime(double t) const { return expr::eval_real(phi_prime_, t); }

    /// phi'(t) == 1 identically, i.e. phi(t) = t + const.
    bool is_shift() const { return phi_prime_.is_number(1.0); }

private:
    expr::Expr phi_;
    expr::Expr phi_prime_;
};

/// phi and phi' sampled on a grid, plus the shifted coordinate phi(t) - phi(0).
struct PhiSamples {
    std::vector<double> u;           // phi(t_k) - phi(0)
    std::vector<double> prime;       // phi'(t_k)
    std::vector<double> prime_mid;   // phi' at cell midpoints

    PhiSamples(const PhiSpec& phi, const Grid& g)
        : u(g.size()), prime(g.size()), prime_mid(g.size() - 1) {
        const double phi0 = phi(g[0]);
        for (std::size_t k = 0; k < g.size(); ++k) {
            u[k] = phi(g[k]) - phi0;
            prime[k] = phi.prime(g[k]);
            if (k + 1 < g.size()) prime_mid[k] = phi.prime(0.5 * (g[k] + g[k + 1]));
        }
        u[0] = 0.0;
    }
};

// ---------------------------------------------------------------------------
// The problem

struct FDEProblem {
    std::vector<ComplexOrder> beta;     // beta_0 ... beta_m
    std::vector<expr::Expr> coeffs;     // d_1 ... d_m
    expr::Expr rhs;                     // h
    std::vector<double> init;           // c_0 ... c_{n_0 - 1}
    PhiSpec phi = PhiSpec::identity();
    double T = 1.0;

    std::size_t m() const noexcept { return beta.empty() ? 0 : beta.size() - 1; }
    int n0() const { return beta.at(0).ceiling(); }

    /// Same problem with every initial value set to zero.
    FDEProblem with_zero_init() const {
        FDEProblem p = *this;
        std::fill(p.init.begin(), p.init.end(), 0.0);
        return p;
    }
    FDEProblem with_rhs(expr::Expr h) const {
        FDEProblem p = *this;
        p.rhs = std::move(h);
        return p;
    }
};

struct Finding {
    std::string field;     // e.g. "beta", "coeffs[1]", "phi"
    std::string message;
};

inline std::string to_string(const Finding& f) { return f.field + ": " + f.message; }

namespace detail {

inline std::string node_label(const Grid& g, std::size_t k) {
    std::ostringstream os;
    os << "node " << k << " (t=" << g[k] << ")";
    return os.str();
}

inline void check_expression(const expr::Expr& e, const std::string& field, const Grid& g,
                             std::vector<Finding>& out) {
    for (std::size_t k = 0; k < g.size(); ++k) {
        try {
            const double v = expr::eval_real(e, g[k]);
            if (!std::isfinite(v)) {
                out.push_back({field, "non-finite value at " + node_label(g, k)});
                return;
            }
        } catch (const expr::EvalError& err) {
            out.push_back({field, std::string(err.what()) + " at " + node_label(g, k)});
            return;
        }
    }
}

}  // namespace detail

/// Every violated hypothesis, not just the first.
inline std::vector<Finding> validate_problem(const FDEProblem& p, const Grid& g) {
    std::vector<Finding> out;
    if (p.beta.empty()) {
        out.push_back({"beta", "at least one order is required"});
        return out;
    }
    if (p.beta[0].is_zero()) out.push_back({"beta[0]", "leading order must have Re > 0"});
    for (std::size_t i = 1; i < p.beta.size(); ++i) {
        if (!(p.beta[i - 1].re() > p.beta[i].re()))
            out.push_back({"beta", "orders not strictly decreasing in real part at index " +
                                       std::to_string(i)});
        if (i + 1 < p.beta.size() && p.beta[i].is_zero())
            out.push_back({"beta[" + std::to_string(i) + "]",
                           "only the last order may be zero"});
    }
    if (p.coeffs.size() != p.m())
        out.push_back({"coeffs", "expected " + std::to_string(p.m()) + " coefficient(s), got " +
                                     std::to_string(p.coeffs.size())});
    if (!p.beta[0].is_zero()) {
        const int n0 = p.beta[0].ceiling();
        if (p.init.size() != static_cast<std::size_t>(n0))
            out.push_back({"init", "expected " + std::to_string(n0) + " initial value(s), got " +
                                       std::to_string(p.init.size())});
    }
    for (std::size_t k = 0; k < p.init.size(); ++k)
        if (!std::isfinite(p.init[k]))
            out.push_back({"init[" + std::to_string(k) + "]", "not finite"});
    if (!(p.T > 0.0)) out.push_back({"T", "horizon must be positive"});
    if (g.horizon() != p.T) out.push_back({"T", "grid does not end at the horizon"});

    // phi: real, finite, strictly increasing
    std::size_t before = out.size();
    detail::check_expression(p.phi.phi(), "phi", g, out);
    detail::check_expression(p.phi.phi_prime(), "phi'", g, out);
    if (out.size() == before) {
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (!(p.phi.prime(g[k]) > 0.0)) {
                out.push_back({"phi", "phi' <= 0 at " + detail::node_label(g, k)});
                break;
            }
        }
    }
    for (std::size_t i = 0; i < p.coeffs.size(); ++i)
        detail::check_expression(p.coeffs[i], "coeffs[" + std::to_string(i) + "]", g, out);
    detail::check_expression(p.rhs, "rhs", g, out);
    return out;
}

// ---------------------------------------------------------------------------
// Case classification

enum class CaseTag {
    BetaMZeroN0GtN1,   // beta_m = 0, n_0 > n_1
    BetaMZeroN0EqN1,   // beta_m = 0, n_0 = n_1
    GapN0GtN1,         // K_{j0} empty, K_{j0+1} not, n_0 > n_1
    GapN0EqN1,         // same with n_0 = n_1
    AllEmpty,          // K_{n_0 - 1} empty
};

inline std::string_view to_string(CaseTag t) {
    switch (t) {
        case CaseTag::BetaMZeroN0GtN1: return "BETA_M_ZERO_N0_GT_N1";
        case CaseTag::BetaMZeroN0EqN1: return "BETA_M_ZERO_N0_EQ_N1";
        case CaseTag::GapN0GtN1: return "GAP_N0_GT_N1";
        case CaseTag::GapN0EqN1: return "GAP_N0_EQ_N1";
        case CaseTag::AllEmpty: return "ALL_EMPTY";
    }
    return "?";
}

struct CaseClassification {
    std::vector<int> n;                        // n_0 ... n_m
    std::vector<std::vector<std::size_t>> K;   // K_j, j = 0 ... n_0 - 1, indices in 1..m
    std::vector<std::optional<std::size_t>> kappa;
    std::optional<int> j0;
    CaseTag tag = CaseTag::AllEmpty;
};

/// Depends on the orders only.
inline CaseClassification classify_case(std::span<const ComplexOrder> beta) {
    if (beta.empty()) throw std::invalid_argument("classify_case: no orders");
    CaseClassification c;
    const std::size_t m = beta.size() - 1;
    for (const auto& b : beta) c.n.push_back(b.ceiling());
    const int n0 = c.n[0];
    for (int j = 0; j < n0; ++j) {
        std::vector<std::size_t> Kj;
        for (std::size_t i = 1; i <= m; ++i)
            if (beta[i].re() >= 0.0 && beta[i].re() <= j) Kj.push_back(i);
        c.kappa.push_back(Kj.empty() ? std::nullopt
                                     : std::optional<std::size_t>(*std::min_element(
                                           Kj.begin(), Kj.end())));
        c.K.push_back(std::move(Kj));
    }
    for (int j = 0; j + 1 < n0; ++j)
        if (c.K[j].empty() && !c.K[j + 1].empty()) c.j0 = j;

    const bool beta_m_zero = m >= 1 && beta[m].is_zero();
    const int n1 = m >= 1 ? c.n[1] : 0;
    if (n0 == 0 || m == 0 || c.K[n0 - 1].empty()) {
        c.tag = CaseTag::AllEmpty;
    } else if (beta_m_zero) {
        c.tag = n0 > n1 ? CaseTag::BetaMZeroN0GtN1 : CaseTag::BetaMZeroN0EqN1;
    } else {
        c.tag = n0 > n1 ? CaseTag::GapN0GtN1 : CaseTag::GapN0EqN1;
    }
    return c;
}

inline CaseClassification classify_case(const FDEProblem& p) { return classify_case(p.beta); }

/// Indices i whose terms d_i ^C D^{beta_i} act on Psi_j, following the rule
/// selected by the case tag. Orders whose Caputo derivative annihilates
/// Psi_j (n_i > j) are dropped.
inline std::vector<std::size_t> canonical_seed_indices(const CaseClassification& c,
                                                       std::size_t m, int j) {
    std::vector<std::size_t> idx;
    const int n1 = m >= 1 ? c.n[1] : 0;
    std::size_t first = 1;
    switch (c.tag) {
        case CaseTag::AllEmpty:
            return idx;
        case CaseTag::GapN0GtN1:
        case CaseTag::GapN0EqN1:
            if (c.j0 && j <= *c.j0) return idx;
            [[fallthrough]];
        case CaseTag::BetaMZeroN0GtN1:
        case CaseTag::BetaMZeroN0EqN1:
            if (j < n1 || c.tag == CaseTag::BetaMZeroN0EqN1 || c.tag == CaseTag::GapN0EqN1) {
                if (!c.kappa[j]) return idx;
                first = *c.kappa[j];
            }
            break;
    }
    for (std::size_t i = first; i <= m; ++i)
        if (c.n[i] <= j) idx.push_back(i);
    return idx;
}

// ---------------------------------------------------------------------------

struct ContractionCertificate {
    double nu = 0.0;
    double C = 0.0;
    bool satisfied = false;
    GridFunction per_node_margin;          // the weighted ratio at each node
    std::optional<double> analytic_C;      // closed-form bound, phi(t) = t + const only
};

}  // namespace fdephi
