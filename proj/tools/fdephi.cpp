// Command line front end: solve, canonical, ml, fracint, fracderiv, residual, contraction.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "fdephi/fraccalc.hpp"
#include "fdephi/mlfun.hpp"
#include "fdephi/solver.hpp"

using json = nlohmann::json;
using namespace fdephi;
using fdephi::cli::ConfigError;
using fdephi::cli::RunConfig;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kNumerical = 2 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string fmt_g16(double v) {
    if (v == 0.0) v = 0.0;  // drop the sign of -0
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.16g", v);
    return buf;
}

cplx parse_complex(const std::string& s) {
    auto num = [&](const std::string& x) {
        if (x.empty() || x == "+") return 1.0;
        if (x == "-") return -1.0;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(x, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != x.size()) throw UsageError("not a number: '" + s + "'");
        return v;
    };
    if (s.empty()) throw UsageError("empty number");
    if (s.back() != 'i') return num(s);
    const std::string body = s.substr(0, s.size() - 1);
    for (std::size_t k = body.size(); k-- > 1;) {
        if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E')
            return {num(body.substr(0, k)), num(body.substr(k))};
    }
    return {0.0, num(body)};
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw UsageError("cannot open output file " + path);
        }
    }
    std::ostream& os() { return file_.is_open() ? file_ : std::cout; }
    bool to_file() const { return file_.is_open(); }

private:
    std::ofstream file_;
};

void write_csv(std::ostream& os, const std::vector<std::string>& header,
               const Grid& g, const std::vector<const GridFunction*>& cols) {
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (std::size_t k = 0; k < g.size(); ++k) {
        os << fmt(g[k]);
        for (const auto* c : cols) {
            if (c && c->size() == g.size())
                os << ',' << fmt((*c)[k].real()) << ',' << fmt((*c)[k].imag());
            else
                os << ",nan,nan";
        }
        os << '\n';
    }
}

json series_json(const GridFunction& f) {
    json re = json::array(), im = json::array();
    for (auto v : f.values()) {
        re.push_back(v.real());
        im.push_back(v.imag());
    }
    return {{"re", re}, {"im", im}};
}

json grid_json(const Grid& g) {
    json t = json::array();
    for (double x : g.nodes()) t.push_back(x);
    return t;
}

json certificate_json(const ContractionCertificate& c) {
    json j = {{"nu", c.nu}, {"C", c.C}, {"satisfied", c.satisfied}};
    j["analytic_C"] = c.analytic_C ? json(*c.analytic_C) : json(nullptr);
    return j;
}

json classification_json(const CaseClassification& c) {
    json K = json::array(), kappa = json::array();
    for (const auto& k : c.K) K.push_back(k);
    for (const auto& k : c.kappa) kappa.push_back(k ? json(*k) : json(nullptr));
    return {{"n", c.n},
            {"K", K},
            {"kappa", kappa},
            {"j0", c.j0 ? json(*c.j0) : json(nullptr)},
            {"case_tag", std::string(to_string(c.tag))}};
}

void print_diagnostic(const std::string& status, const std::string& message, json extra = {}) {
    std::cerr << "error: " << message << '\n';
    json d = {{"status", status}, {"message", message}};
    if (!extra.is_null()) d.update(extra);
    std::cerr << d.dump() << '\n';
}

// ---------------------------------------------------------------------------

struct Globals {
    std::string config_path;
    std::string out;
    std::string format;
    std::size_t n = 0;
    double tol = 0.0;
    int kmax = 0;
    bool seed_docs = false;
};

RunConfig resolve(const Globals& g, bool need_problem) {
    RunConfig cfg;
    if (!g.config_path.empty()) cfg = cli::load_config(g.config_path);
    if (g.n) cfg.numerics.N = g.n;
    if (g.tol > 0) cfg.numerics.tol = g.tol;
    if (g.kmax > 0) cfg.numerics.kmax = g.kmax;
    if (!g.out.empty()) cfg.out_path = g.out;
    if (!g.format.empty()) cfg.format = g.format;
    if (cfg.format != "csv" && cfg.format != "json")
        throw ConfigError("output.format", 0, "expected csv or json");
    if (need_problem && !cfg.problem) throw ConfigError("problem", 0, "missing problem block (use --config)");
    if (cfg.numerics.N < 4) throw ConfigError("numerics.N", 0, "need at least 4 nodes");
    return cfg;
}

SolveOptions options(const RunConfig& cfg) {
    SolveOptions o;
    o.tol = cfg.numerics.tol;
    o.kmax = cfg.numerics.kmax;
    o.ml_tol = cfg.numerics.ml_tol;
    return o;
}

GridPtr make_grid(const RunConfig& cfg, double T) { return Grid::uniform(T, cfg.numerics.N); }

void emit_solution(const RunConfig& cfg, const GridPtr& g, const GridFunction& x,
                   const GridFunction* res, json summary) {
    Output out(cfg.out_path);
    if (cfg.format == "json") {
        summary["t"] = grid_json(*g);
        summary["x"] = series_json(x);
        if (res) summary["residual"] = series_json(*res);
        out.os() << summary.dump() << '\n';
        return;
    }
    write_csv(out.os(), {"t", "re_x", "im_x", "re_residual", "im_residual"}, *g, {&x, res});
    (out.to_file() ? std::cout : std::cerr) << summary.dump() << '\n';
}

int cmd_solve(const Globals& gl, const std::string& method) {
    const auto cfg = resolve(gl, true);
    const auto& p = *cfg.problem;
    const auto g = make_grid(cfg, p.T);
    SampledProblem sp(p, g);
    const bool constant = constant_coefficients(p).has_value();
    std::string used = method;
    if (used.empty()) used = constant ? "closed-form" : "series";
    try {
        Solution sol;
        if (used == "closed-form") {
            if (!constant) throw NonConstantCoefficients();
            sol = solve_constant(sp, options(cfg));
        } else {
            sol = solve_ivp(sp, options(cfg), used == "picard" ? Method::Picard : Method::Series);
        }
        json summary = {{"status", "ok"},
                        {"method", used},
                        {"terms_used", sol.terms_used},
                        {"residual_norm", sol.residual_norm},
                        {"certificate", certificate_json(sol.certificate)},
                        {"warnings", sol.warnings}};
        for (const auto& w : sol.warnings) std::cerr << "warning: " << w << '\n';
        emit_solution(cfg, g, sol.x, &sol.residual, summary);
        return kOk;
    } catch (const SolverError& e) {
        json summary = {{"status", "diverged"}, {"method", used}, {"message", e.what()},
                        {"defect", e.defect()}, {"iterations", e.iterations()}};
        emit_solution(cfg, g, e.partial(), nullptr, summary);
        print_diagnostic("diverged", e.what(), {{"defect", e.defect()}, {"iterations", e.iterations()}});
        return kNumerical;
    }
}

int cmd_canonical(const Globals& gl) {
    const auto cfg = resolve(gl, true);
    const auto& p = *cfg.problem;
    const auto g = make_grid(cfg, p.T);
    SampledProblem sp(p, g);
    const auto cls = classify_case(p);
    const auto xs = canonical_set(sp, cfg.numerics.tol, cfg.numerics.kmax);
    json doc = {{"status", "ok"}, {"classification", classification_json(cls)}};
    if (cfg.format == "json" || cfg.out_path.empty()) {
        doc["t"] = grid_json(*g);
        json arr = json::array();
        for (const auto& x : xs) arr.push_back(series_json(x));
        doc["canonical"] = arr;
        Output out(cfg.out_path);
        out.os() << doc.dump() << '\n';
        return kOk;
    }
    json files = json::array();
    for (std::size_t j = 0; j < xs.size(); ++j) {
        const std::string path = cfg.out_path + "_x" + std::to_string(j) + ".csv";
        Output out(path);
        write_csv(out.os(), {"t", "re_x", "im_x"}, *g, {&xs[j]});
        files.push_back(path);
    }
    doc["files"] = files;
    std::cout << doc.dump() << '\n';
    return kOk;
}

struct MlArgs {
    std::vector<std::string> a, z;
    std::string b = "1";
    bool ks = false;
    double alpha = 1.0, beta = 1.0, lambda = 1.0;
    std::string gamma = "0";
    double tol = std::numeric_limits<double>::epsilon();
};

int cmd_ml(const MlArgs& m) {
    cplx v;
    try {
        if (m.ks) {
            if (m.z.size() != 1) throw UsageError("--ks takes exactly one --z value");
            v = kilbas_saigo(KsParams{m.alpha, m.beta, parse_complex(m.gamma), m.lambda},
                             parse_complex(m.z[0]), m.tol);
        } else {
            MlParams p;
            for (const auto& s : m.a) p.a.push_back(parse_complex(s));
            p.b = parse_complex(m.b);
            std::vector<cplx> z;
            for (const auto& s : m.z) z.push_back(parse_complex(s));
            if (p.a.size() != z.size()) throw UsageError("--a and --z must have the same length");
            v = ml_multivariate(p, z, m.tol);
        }
    } catch (const SeriesDivergence& e) {
        std::cout << fmt_g16(e.partial_sum().real()) << ' ' << fmt_g16(e.partial_sum().imag()) << '\n';
        print_diagnostic("diverged", e.what(),
                         {{"partial_sum", complex_json(e.partial_sum())},
                          {"last_level", e.last_level()}});
        return kNumerical;
    }
    std::cout << fmt_g16(v.real()) << ' ' << fmt_g16(v.imag()) << '\n';
    return kOk;
}

struct OperatorArgs {
    std::string f;
    std::string alpha = "0.5";
    std::string phi = "t";
    double T = 1.0;
    std::string kind = "rl";
};

int cmd_operator(const Globals& gl, const OperatorArgs& a, bool derivative) {
    const auto cfg = resolve(gl, false);
    if (a.f.empty()) throw UsageError("--f is required");
    const cplx al = parse_complex(a.alpha);
    const ComplexOrder alpha(al.real(), al.imag());
    const PhiSpec phi(a.phi);
    const auto g = make_grid(cfg, a.T);
    {
        std::vector<Finding> findings;
        FDEProblem probe;
        probe.beta = {ComplexOrder(1.0)};
        probe.init = {0.0};
        probe.rhs = expr::parse(a.f);
        probe.phi = phi;
        probe.T = a.T;
        findings = validate_problem(probe, *g);
        if (!findings.empty()) throw ValidationError(findings);
    }
    const auto fe = expr::parse(a.f);
    const auto f = GridFunction::sample(g, [&](double t) { return expr::eval_real(fe, t); });
    OperatorContext ctx(g, phi);
    GridFunction y;
    if (!derivative) {
        y = ctx.integral(f, alpha);
    } else if (a.kind == "rl") {
        y = rl_derivative(ctx, f, alpha);
    } else if (a.kind == "caputo") {
        y = caputo_derivative(ctx, f, alpha, estimate_init(ctx, f, alpha.ceiling()));
    } else if (a.kind == "smooth") {
        y = caputo_smooth(ctx, f, alpha);
    } else {
        throw UsageError("--kind must be rl, caputo or smooth");
    }
    Output out(cfg.out_path);
    if (cfg.format == "json")
        out.os() << json{{"status", "ok"}, {"t", grid_json(*g)}, {"y", series_json(y)}}.dump() << '\n';
    else
        write_csv(out.os(), {"t", "re_y", "im_y"}, *g, {&y});
    return kOk;
}

int cmd_residual(const Globals& gl, const std::string& xsrc) {
    const auto cfg = resolve(gl, true);
    if (xsrc.empty()) throw UsageError("--x is required");
    const auto& p = *cfg.problem;
    const auto g = make_grid(cfg, p.T);
    SampledProblem sp(p, g);
    const auto xe = expr::parse(xsrc);
    const auto x = GridFunction::sample(g, [&](double t) { return expr::eval_real(xe, t); });
    auto [r, norm] = residual(sp, x);
    Output out(cfg.out_path);
    json summary = {{"status", "ok"}, {"residual_norm", norm}};
    if (cfg.format == "json") {
        summary["t"] = grid_json(*g);
        summary["residual"] = series_json(r);
        out.os() << summary.dump() << '\n';
    } else {
        write_csv(out.os(), {"t", "re_residual", "im_residual"}, *g, {&r});
        (out.to_file() ? std::cout : std::cerr) << summary.dump() << '\n';
    }
    return kOk;
}

int cmd_contraction(const Globals& gl) {
    const auto cfg = resolve(gl, true);
    const auto& p = *cfg.problem;
    const auto g = make_grid(cfg, p.T);
    SampledProblem sp(p, g);
    const auto cert = check_contraction(sp);
    json doc = {{"status", "ok"}, {"certificate", certificate_json(cert)}};
    Output out(cfg.out_path);
    out.os() << doc.dump() << '\n';
    return kOk;
}

int cmd_seed_docs(const Globals& gl) {
    const std::filesystem::path dir = gl.out.empty() ? "." : gl.out;
    std::filesystem::create_directories(dir);
    json files = json::array();
    for (auto [name, text] : {std::pair{"example1.yaml", cli::kExample1},
                              std::pair{"example2.yaml", cli::kExample2}}) {
        std::ofstream(dir / name) << text;
        files.push_back((dir / name).string());
    }
    std::cout << json{{"status", "ok"}, {"files", files}}.dump() << '\n';
    return kOk;
}

constexpr const char* kExpressionHelp = R"(
Expressions are formulas in t: numbers, pi, e, + - * / ^ (right associative),
unary minus, parentheses and exp, ln, sin, cos, sqrt, pow(a, b).
Complex numbers on the command line: 0.8, 0.8+0.2i, 2i.)";

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-term fractional differential equations with respect to a function"};
    app.footer(kExpressionHelp);
    app.fallthrough();
    app.require_subcommand(0, 1);

    Globals gl;
    app.add_option("--config", gl.config_path, "YAML run configuration");
    app.add_option("--out", gl.out, "output path (stdout when omitted)");
    app.add_option("--format", gl.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--n", gl.n, "number of grid nodes");
    app.add_option("--tol", gl.tol, "series truncation tolerance");
    app.add_option("--kmax", gl.kmax, "maximum number of series terms");
    app.add_flag("--seed-docs", gl.seed_docs, "write the bundled example configs into --out (a directory)");

    std::string method;
    auto* solve = app.add_subcommand("solve", "solve the initial value problem");
    solve->add_option("--method", method, "series, picard or closed-form")
        ->check(CLI::IsMember({"series", "picard", "closed-form"}));

    auto* canonical = app.add_subcommand("canonical", "canonical set of the homogeneous equation");

    MlArgs ml;
    auto* mlc = app.add_subcommand("ml", "multivariate Mittag-Leffler or Kilbas-Saigo series");
    mlc->add_option("--a", ml.a, "a_1 ... a_n")->expected(1, -1);
    mlc->add_option("--b", ml.b, "b");
    mlc->add_option("--z", ml.z, "z_1 ... z_n")->expected(1, -1);
    mlc->add_flag("--ks", ml.ks, "evaluate the Kilbas-Saigo type series instead");
    mlc->add_option("--alpha", ml.alpha);
    mlc->add_option("--beta", ml.beta);
    mlc->add_option("--gamma", ml.gamma);
    mlc->add_option("--lambda", ml.lambda);
    mlc->add_option("--ml-tol", ml.tol, "series tolerance (default: machine epsilon)");

    OperatorArgs opi, opd;
    auto* fracint = app.add_subcommand("fracint", "fractional integral of an expression");
    auto* fracderiv = app.add_subcommand("fracderiv", "fractional derivative of an expression");
    for (auto [cmd, a] : {std::pair{fracint, &opi}, std::pair{fracderiv, &opd}}) {
        cmd->add_option("--f", a->f, "function of t")->required();
        cmd->add_option("--alpha", a->alpha, "order (complex allowed)");
        cmd->add_option("--phi", a->phi, "phi(t)");
        cmd->add_option("--T", a->T, "horizon");
    }
    fracderiv->add_option("--kind", opd.kind, "rl, caputo or smooth");

    std::string xsrc;
    auto* res = app.add_subcommand("residual", "residual of a candidate solution");
    res->add_option("--x", xsrc, "candidate solution x(t)")->required();

    auto* contraction = app.add_subcommand("contraction", "contraction certificate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        print_diagnostic("usage", e.what());
        return kInvalid;
    }

    try {
        if (gl.seed_docs) return cmd_seed_docs(gl);
        if (*solve) return cmd_solve(gl, method);
        if (*canonical) return cmd_canonical(gl);
        if (*mlc) return cmd_ml(ml);
        if (*fracint) return cmd_operator(gl, opi, false);
        if (*fracderiv) return cmd_operator(gl, opd, true);
        if (*res) return cmd_residual(gl, xsrc);
        if (*contraction) return cmd_contraction(gl);
        std::cout << app.help();
        return kOk;
    } catch (const ValidationError& e) {
        json findings = json::array();
        for (const auto& f : e.findings()) findings.push_back({{"field", f.field}, {"message", f.message}});
        print_diagnostic("invalid", e.what(), {{"findings", findings}});
        return kInvalid;
    } catch (const ConfigError& e) {
        print_diagnostic("invalid", e.what(), {{"field", e.field()}, {"line", e.line()}});
        return kInvalid;
    } catch (const expr::ParseError& e) {
        print_diagnostic("invalid", e.what());
        return kInvalid;
    } catch (const UsageError& e) {
        print_diagnostic("invalid", e.what());
        return kInvalid;
    } catch (const SeriesDivergence& e) {
        print_diagnostic("diverged", e.what(), {{"partial_sum", complex_json(e.partial_sum())}});
        return kNumerical;
    } catch (const SolverError& e) {
        print_diagnostic("diverged", e.what(), {{"defect", e.defect()}});
        return kNumerical;
    } catch (const std::invalid_argument& e) {
        print_diagnostic("invalid", e.what());
        return kInvalid;
    } catch (const std::exception& e) {
        print_diagnostic("numerical", e.what());
        return kNumerical;
    }
}
