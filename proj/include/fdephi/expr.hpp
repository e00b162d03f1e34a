#pragma once

// Small expression language for phi(t), d_i(t) and h(t).
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          right-associative
//   primary := number | 't' | 'pi' | 'e' | func '(' args ')' | '(' expr ')'
//   func    := exp | ln | sin | cos | sqrt    (one argument)
//            | pow                            (two arguments)

#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fdephi::expr {

enum class Kind { Number, Pi, E, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
enum class Func { Exp, Ln, Sin, Cos, Sqrt, Pow };

inline std::string_view func_name(Func f) {
    switch (f) {
        case Func::Exp: return "exp";
        case Func::Ln: return "ln";
        case Func::Sin: return "sin";
        case Func::Cos: return "cos";
        case Func::Sqrt: return "sqrt";
        case Func::Pow: return "pow";
    }
    return "?";
}

inline int func_arity(Func f) { return f == Func::Pow ? 2 : 1; }

inline std::optional<Func> func_from_name(std::string_view s) {
    if (s == "exp") return Func::Exp;
    if (s == "ln") return Func::Ln;
    if (s == "sin") return Func::Sin;
    if (s == "cos") return Func::Cos;
    if (s == "sqrt") return Func::Sqrt;
    if (s == "pow") return Func::Pow;
    return std::nullopt;
}

class Expr;

struct Node {
    Kind kind = Kind::Number;
    double value = 0.0;          // Number only
    Func func = Func::Exp;       // Call only
    std::vector<Expr> args;      // children, arity checked at construction
};

/// Immutable expression tree with structural equality.
class Expr {
public:
    Expr() : node_(std::make_shared<const Node>()) {}

    static Expr number(double v) {
        Node n;
        n.kind = Kind::Number;
        n.value = v;
        return Expr(std::move(n));
    }
    static Expr pi() { return leaf(Kind::Pi); }
    static Expr e() { return leaf(Kind::E); }
    static Expr var() { return leaf(Kind::Var); }
    static Expr neg(Expr a) { return unary(Kind::Neg, std::move(a)); }
    static Expr binary(Kind k, Expr a, Expr b) {
        if (k != Kind::Add && k != Kind::Sub && k != Kind::Mul && k != Kind::Div &&
            k != Kind::Pow)
            throw std::invalid_argument("expr: not a binary operator");
        Node n;
        n.kind = k;
        n.args = {std::move(a), std::move(b)};
        return Expr(std::move(n));
    }
    static Expr call(Func f, std::vector<Expr> args) {
        if (static_cast<int>(args.size()) != func_arity(f))
            throw std::invalid_argument("expr: wrong arity for " + std::string(func_name(f)));
        Node n;
        n.kind = Kind::Call;
        n.func = f;
        n.args = std::move(args);
        return Expr(std::move(n));
    }

    Kind kind() const { return node_->kind; }
    double value() const { return node_->value; }
    Func func() const { return node_->func; }
    const std::vector<Expr>& args() const { return node_->args; }
    const Expr& arg(std::size_t i) const { return node_->args.at(i); }

    bool is_number() const { return kind() == Kind::Number; }
    bool is_number(double v) const { return is_number() && value() == v; }

    /// True when the tree contains no occurrence of t.
    bool is_constant() const {
        if (kind() == Kind::Var) return false;
        for (const auto& a : args())
            if (!a.is_constant()) return false;
        return true;
    }

    friend bool operator==(const Expr& a, const Expr& b) {
        if (a.node_ == b.node_) return true;
        if (a.kind() != b.kind()) return false;
        switch (a.kind()) {
            case Kind::Number:
                return a.value() == b.value();
            case Kind::Call:
                if (a.func() != b.func()) return false;
                break;
            default:
                break;
        }
        if (a.args().size() != b.args().size()) return false;
        for (std::size_t i = 0; i < a.args().size(); ++i)
            if (!(a.args()[i] == b.args()[i])) return false;
        return true;
    }

private:
    explicit Expr(Node n) : node_(std::make_shared<const Node>(std::move(n))) {}
    static Expr leaf(Kind k) {
        Node n;
        n.kind = k;
        return Expr(std::move(n));
    }
    static Expr unary(Kind k, Expr a) {
        Node n;
        n.kind = k;
        n.args = {std::move(a)};
        return Expr(std::move(n));
    }

    std::shared_ptr<const Node> node_;
};

// ---------------------------------------------------------------------------
// Errors

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t offset, std::string expected, std::string_view src)
        : std::runtime_error("syntax error at offset " + std::to_string(offset) + ": " +
                             expected + " in \"" + std::string(src) + "\""),
          offset_(offset),
          expected_(std::move(expected)) {}
    std::size_t offset() const noexcept { return offset_; }
    const std::string& expected() const noexcept { return expected_; }

private:
    std::size_t offset_;
    std::string expected_;
};

class UnknownIdentifier : public ParseError {
public:
    UnknownIdentifier(std::size_t offset, std::string name, std::string_view src)
        : ParseError(offset, "unknown identifier '" + name + "'", src), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class EvalError : public std::domain_error {
public:
    EvalError(const std::string& what, std::string node)
        : std::domain_error(what + " in '" + node + "'"), node_(std::move(node)) {}
    const std::string& node() const noexcept { return node_; }

private:
    std::string node_;
};

// ---------------------------------------------------------------------------
// Printing

inline std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline int precedence(Kind k) {
    switch (k) {
        case Kind::Add:
        case Kind::Sub: return 1;
        case Kind::Mul:
        case Kind::Div: return 2;
        case Kind::Neg: return 3;
        case Kind::Pow: return 4;
        default: return 5;
    }
}

inline void unparse_into(const Expr& e, std::string& out);

inline void unparse_child(const Expr& child, bool parens, std::string& out) {
    if (parens) out += '(';
    unparse_into(child, out);
    if (parens) out += ')';
}

inline void unparse_into(const Expr& e, std::string& out) {
    switch (e.kind()) {
        case Kind::Number:
            // negative literals only arise from folding; keep them re-parseable
            if (std::signbit(e.value())) {
                out += "(-" + format_number(-e.value()) + ")";
            } else {
                out += format_number(e.value());
            }
            return;
        case Kind::Pi: out += "pi"; return;
        case Kind::E: out += "e"; return;
        case Kind::Var: out += "t"; return;
        case Kind::Neg:
            out += '-';
            unparse_child(e.arg(0), precedence(e.arg(0).kind()) < precedence(Kind::Neg), out);
            return;
        case Kind::Call:
            out += func_name(e.func());
            out += '(';
            for (std::size_t i = 0; i < e.args().size(); ++i) {
                if (i) out += ',';
                unparse_into(e.args()[i], out);
            }
            out += ')';
            return;
        default:
            break;
    }
    const int p = precedence(e.kind());
    const Expr& lhs = e.arg(0);
    const Expr& rhs = e.arg(1);
    char op = '+';
    bool lp = false, rp = false;
    switch (e.kind()) {
        case Kind::Add: op = '+'; lp = precedence(lhs.kind()) < p; rp = precedence(rhs.kind()) <= p; break;
        case Kind::Sub: op = '-'; lp = precedence(lhs.kind()) < p; rp = precedence(rhs.kind()) <= p; break;
        case Kind::Mul: op = '*'; lp = precedence(lhs.kind()) < p; rp = precedence(rhs.kind()) <= p; break;
        case Kind::Div: op = '/'; lp = precedence(lhs.kind()) < p; rp = precedence(rhs.kind()) <= p; break;
        case Kind::Pow:
            op = '^';
            // base binds tighter than unary minus; exponent may be a unary
            lp = precedence(lhs.kind()) <= p;
            rp = precedence(rhs.kind()) < precedence(Kind::Neg);
            break;
        default: break;
    }
    unparse_child(lhs, lp, out);
    out += op;
    unparse_child(rhs, rp, out);
}

}  // namespace detail

/// Render an expression in the input syntax; parse(unparse(e)) == e.
inline std::string unparse(const Expr& e) {
    std::string out;
    detail::unparse_into(e, out);
    return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    Expr parse_all() {
        Expr e = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) fail("expected operator or end of input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& expected) const {
        throw ParseError(pos_, expected, src_);
    }

    void skip_ws() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' ||
                                      src_[pos_] == '\n' || src_[pos_] == '\r'))
            ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expr parse_expr() {
        Expr lhs = parse_term();
        for (;;) {
            if (accept('+')) {
                lhs = Expr::binary(Kind::Add, lhs, parse_term());
            } else if (accept('-')) {
                lhs = Expr::binary(Kind::Sub, lhs, parse_term());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_term() {
        Expr lhs = parse_unary();
        for (;;) {
            if (accept('*')) {
                lhs = Expr::binary(Kind::Mul, lhs, parse_unary());
            } else if (accept('/')) {
                lhs = Expr::binary(Kind::Div, lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_unary() {
        if (accept('-')) return Expr::neg(parse_unary());
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_primary();
        if (accept('^')) return Expr::binary(Kind::Pow, base, parse_unary());
        return base;
    }

    Expr parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) fail("expected operand");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            Expr inner = parse_expr();
            if (!accept(')')) fail("expected ')'");
            return inner;
        }
        if ((c >= '0' && c <= '9') || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
        fail("expected operand");
    }

    Expr parse_number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
            ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            // exponent only if followed by digits, so "2e" stays "2 * e"-free and errors
            std::size_t q = pos_ + 1;
            if (q < src_.size() && (src_[q] == '+' || src_[q] == '-')) ++q;
            if (q < src_.size() && std::isdigit(static_cast<unsigned char>(src_[q]))) {
                pos_ = q;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                    ++pos_;
            }
        }
        double v = 0.0;
        const char* first = src_.data() + start;
        const char* last = src_.data() + pos_;
        auto res = std::from_chars(first, last, v);
        if (res.ec != std::errc{} || res.ptr != last) {
            pos_ = start;
            fail("expected number");
        }
        return Expr::number(v);
    }

    Expr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                      src_[pos_] == '_'))
            ++pos_;
        const std::string name(src_.substr(start, pos_ - start));
        if (name == "t") return Expr::var();
        if (name == "pi") return Expr::pi();
        if (name == "e") return Expr::e();
        auto f = func_from_name(name);
        if (!f) throw UnknownIdentifier(start, name, src_);
        if (!accept('(')) fail("expected '(' after " + name);
        std::vector<Expr> args;
        args.push_back(parse_expr());
        while (accept(',')) args.push_back(parse_expr());
        if (!accept(')')) fail("expected ')'");
        if (static_cast<int>(args.size()) != func_arity(*f))
            throw ParseError(start, name + " takes " + std::to_string(func_arity(*f)) +
                                        " argument(s)",
                             src_);
        return Expr::call(*f, std::move(args));
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse(std::string_view src) { return detail::Parser(src).parse_all(); }

// ---------------------------------------------------------------------------
// Evaluation

namespace detail {

inline double eval_real(const Expr& e, double t) {
    auto domain = [&](const std::string& what) -> double { throw EvalError(what, unparse(e)); };
    switch (e.kind()) {
        case Kind::Number: return e.value();
        case Kind::Pi: return std::numbers::pi;
        case Kind::E: return std::numbers::e;
        case Kind::Var: return t;
        case Kind::Neg: return -eval_real(e.arg(0), t);
        case Kind::Add: return eval_real(e.arg(0), t) + eval_real(e.arg(1), t);
        case Kind::Sub: return eval_real(e.arg(0), t) - eval_real(e.arg(1), t);
        case Kind::Mul: return eval_real(e.arg(0), t) * eval_real(e.arg(1), t);
        case Kind::Div: {
            const double num = eval_real(e.arg(0), t);
            const double den = eval_real(e.arg(1), t);
            if (den == 0.0) return domain("division by zero");
            return num / den;
        }
        case Kind::Pow: break;
        case Kind::Call:
            switch (e.func()) {
                case Func::Exp: return std::exp(eval_real(e.arg(0), t));
                case Func::Sin: return std::sin(eval_real(e.arg(0), t));
                case Func::Cos: return std::cos(eval_real(e.arg(0), t));
                case Func::Ln: {
                    const double x = eval_real(e.arg(0), t);
                    if (!(x > 0.0)) return domain("ln of non-positive value");
                    return std::log(x);
                }
                case Func::Sqrt: {
                    const double x = eval_real(e.arg(0), t);
                    if (x < 0.0) return domain("sqrt of negative value");
                    return std::sqrt(x);
                }
                case Func::Pow: break;
            }
            break;
    }
    const double base = eval_real(e.arg(0), t);
    const double ex = eval_real(e.arg(1), t);
    if (base == 0.0 && ex < 0.0) return domain("zero raised to a negative power");
    if (base < 0.0 && std::floor(ex) != ex) return domain("negative base with non-integer exponent");
    return std::pow(base, ex);
}

}  // namespace detail

/// Value at t. Formulas are real-valued, so the imaginary part is zero.
inline std::complex<double> eval(const Expr& e, double t) {
    return {detail::eval_real(e, t), 0.0};
}

inline double eval_real(const Expr& e, double t) { return detail::eval_real(e, t); }

// ---------------------------------------------------------------------------
// Symbolic differentiation

namespace detail {

// Constructors that fold literal subtrees and drop neutral elements.
inline Expr fold_number(double v) {
    if (v == 0.0) return Expr::number(0.0);
    return v < 0.0 ? Expr::neg(Expr::number(-v)) : Expr::number(v);
}

inline std::optional<double> literal(const Expr& e) {
    if (e.is_number()) return e.value();
    if (e.kind() == Kind::Neg && e.arg(0).is_number()) return -e.arg(0).value();
    return std::nullopt;
}

inline Expr mk_neg(Expr a) {
    if (auto v = literal(a)) return fold_number(-*v);
    if (a.kind() == Kind::Neg) return a.arg(0);
    return Expr::neg(std::move(a));
}

inline Expr mk_add(Expr a, Expr b) {
    auto la = literal(a), lb = literal(b);
    if (la && lb) return fold_number(*la + *lb);
    if (la && *la == 0.0) return b;
    if (lb && *lb == 0.0) return a;
    return Expr::binary(Kind::Add, std::move(a), std::move(b));
}

inline Expr mk_sub(Expr a, Expr b) {
    auto la = literal(a), lb = literal(b);
    if (la && lb) return fold_number(*la - *lb);
    if (lb && *lb == 0.0) return a;
    if (la && *la == 0.0) return mk_neg(std::move(b));
    return Expr::binary(Kind::Sub, std::move(a), std::move(b));
}

inline Expr mk_mul(Expr a, Expr b) {
    auto la = literal(a), lb = literal(b);
    if (la && lb) return fold_number(*la * *lb);
    if ((la && *la == 0.0) || (lb && *lb == 0.0)) return Expr::number(0.0);
    if (la && *la == 1.0) return b;
    if (lb && *lb == 1.0) return a;
    if (la && *la == -1.0) return mk_neg(std::move(b));
    if (lb && *lb == -1.0) return mk_neg(std::move(a));
    return Expr::binary(Kind::Mul, std::move(a), std::move(b));
}

inline Expr mk_div(Expr a, Expr b) {
    auto la = literal(a), lb = literal(b);
    if (la && lb && *lb != 0.0) return fold_number(*la / *lb);
    if (la && *la == 0.0) return Expr::number(0.0);
    if (lb && *lb == 1.0) return a;
    return Expr::binary(Kind::Div, std::move(a), std::move(b));
}

inline Expr mk_pow(Expr a, Expr b) {
    auto la = literal(a), lb = literal(b);
    if (lb && *lb == 0.0) return Expr::number(1.0);
    if (lb && *lb == 1.0) return a;
    if (la && lb && *la > 0.0) return fold_number(std::pow(*la, *lb));
    return Expr::binary(Kind::Pow, std::move(a), std::move(b));
}

inline Expr mk_call(Func f, Expr a) { return Expr::call(f, {std::move(a)}); }

inline Expr power_rule(const Expr& u, const Expr& v, const Expr& du, const Expr& dv) {
    if (v.is_constant()) {
        // d(u^c) = c u^(c-1) u'
        return mk_mul(mk_mul(v, mk_pow(u, mk_sub(v, Expr::number(1.0)))), du);
    }
    const Expr uv = mk_pow(u, v);
    if (u.is_constant()) return mk_mul(mk_mul(uv, mk_call(Func::Ln, u)), dv);
    // d(u^v) = u^v (v' ln u + v u'/u)
    return mk_mul(uv, mk_add(mk_mul(dv, mk_call(Func::Ln, u)), mk_div(mk_mul(v, du), u)));
}

}  // namespace detail

/// d/dt by the standard rules, folding literal subtrees as it goes.
inline Expr differentiate(const Expr& e) {
    using namespace detail;
    switch (e.kind()) {
        case Kind::Number:
        case Kind::Pi:
        case Kind::E: return Expr::number(0.0);
        case Kind::Var: return Expr::number(1.0);
        case Kind::Neg: return mk_neg(differentiate(e.arg(0)));
        case Kind::Add: return mk_add(differentiate(e.arg(0)), differentiate(e.arg(1)));
        case Kind::Sub: return mk_sub(differentiate(e.arg(0)), differentiate(e.arg(1)));
        case Kind::Mul: {
            const Expr& u = e.arg(0);
            const Expr& v = e.arg(1);
            return mk_add(mk_mul(differentiate(u), v), mk_mul(u, differentiate(v)));
        }
        case Kind::Div: {
            const Expr& u = e.arg(0);
            const Expr& v = e.arg(1);
            const Expr dv = differentiate(v);
            if (literal(dv) && *literal(dv) == 0.0) return mk_div(differentiate(u), v);
            return mk_div(mk_sub(mk_mul(differentiate(u), v), mk_mul(u, dv)),
                          mk_pow(v, Expr::number(2.0)));
        }
        case Kind::Pow:
            return power_rule(e.arg(0), e.arg(1), differentiate(e.arg(0)),
                              differentiate(e.arg(1)));
        case Kind::Call: {
            const Expr& u = e.arg(0);
            const Expr du = differentiate(u);
            switch (e.func()) {
                case Func::Exp: return mk_mul(mk_call(Func::Exp, u), du);
                case Func::Ln: return mk_div(du, u);
                case Func::Sin: return mk_mul(mk_call(Func::Cos, u), du);
                case Func::Cos: return mk_neg(mk_mul(mk_call(Func::Sin, u), du));
                case Func::Sqrt:
                    return mk_div(du, mk_mul(Expr::number(2.0), mk_call(Func::Sqrt, u)));
                case Func::Pow:
                    return power_rule(u, e.arg(1), du, differentiate(e.arg(1)));
            }
        }
    }
    return Expr::number(0.0);
}

}  // namespace fdephi::expr
