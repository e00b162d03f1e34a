#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "fdephi/solver.hpp"

namespace fdephi::cli {

/// A config problem addressed by field path and source line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, int line, const std::string& msg)
        : std::runtime_error(format(field, line, msg)), field_(std::move(field)), line_(line) {}
    const std::string& field() const noexcept { return field_; }
    int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& field, int line, const std::string& msg) {
        std::string s = field;
        if (line > 0) s += " (line " + std::to_string(line) + ")";
        return s + ": " + msg;
    }
    std::string field_;
    int line_;
};

struct Numerics {
    std::size_t N = 1025;
    double tol = 1e-10;
    int kmax = 200;
    double ml_tol = 1e-13;
};

struct RunConfig {
    std::optional<FDEProblem> problem;
    Numerics numerics;
    std::string out_path;
    std::string format = "csv";
};

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

template <class T>
T scalar(const YAML::Node& n, const std::string& field) {
    if (!n || !n.IsScalar()) throw ConfigError(field, line_of(n), "expected a scalar");
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(field, line_of(n), "cannot convert '" + n.Scalar() + "'");
    }
}

inline expr::Expr expression(const YAML::Node& n, const std::string& field) {
    const auto src = scalar<std::string>(n, field);
    try {
        return expr::parse(src);
    } catch (const expr::ParseError& e) {
        throw ConfigError(field, line_of(n), e.what());
    }
}

inline ComplexOrder order(const YAML::Node& n, const std::string& field) {
    double re = 0.0, im = 0.0;
    if (n.IsSequence()) {
        if (n.size() != 2) throw ConfigError(field, line_of(n), "expected [re, im]");
        re = scalar<double>(n[0], field + "[0]");
        im = scalar<double>(n[1], field + "[1]");
    } else {
        re = scalar<double>(n, field);
    }
    if (!ComplexOrder::valid(re, im))
        throw ConfigError(field, line_of(n), "order must have Re > 0 or be exactly 0");
    return ComplexOrder(re, im);
}

}  // namespace detail

inline FDEProblem parse_problem(const YAML::Node& p) {
    using detail::line_of;
    if (!p.IsMap()) throw ConfigError("problem", line_of(p), "expected a mapping");
    FDEProblem out;
    const auto betas = p["betas"];
    if (!betas || !betas.IsSequence() || betas.size() == 0)
        throw ConfigError("problem.betas", line_of(p), "expected a non-empty list of [re, im]");
    for (std::size_t i = 0; i < betas.size(); ++i)
        out.beta.push_back(detail::order(betas[i], "problem.betas[" + std::to_string(i) + "]"));
    if (const auto c = p["coeffs"]) {
        if (!c.IsSequence()) throw ConfigError("problem.coeffs", line_of(c), "expected a list");
        for (std::size_t i = 0; i < c.size(); ++i)
            out.coeffs.push_back(detail::expression(c[i], "problem.coeffs[" + std::to_string(i) + "]"));
    }
    out.rhs = detail::expression(p["rhs"], "problem.rhs");
    if (const auto c = p["init"]) {
        if (!c.IsSequence()) throw ConfigError("problem.init", line_of(c), "expected a list");
        for (std::size_t i = 0; i < c.size(); ++i)
            out.init.push_back(detail::scalar<double>(c[i], "problem.init[" + std::to_string(i) + "]"));
    }
    out.phi = p["phi"] ? PhiSpec(detail::expression(p["phi"], "problem.phi")) : PhiSpec::identity();
    out.T = p["T"] ? detail::scalar<double>(p["T"], "problem.T") : 1.0;
    return out;
}

inline RunConfig parse_config(const YAML::Node& root) {
    using detail::line_of;
    if (!root.IsMap()) throw ConfigError("<root>", line_of(root), "expected a mapping");
    RunConfig cfg;
    if (!root["schema"]) throw ConfigError("schema", 0, "missing schema version");
    const int schema = detail::scalar<int>(root["schema"], "schema");
    if (schema != kSchemaVersion)
        throw ConfigError("schema", line_of(root["schema"]),
                          "unsupported schema " + std::to_string(schema));
    if (const auto p = root["problem"]) cfg.problem = parse_problem(p);
    if (const auto n = root["numerics"]) {
        if (n["N"]) cfg.numerics.N = detail::scalar<std::size_t>(n["N"], "numerics.N");
        if (n["tol"]) cfg.numerics.tol = detail::scalar<double>(n["tol"], "numerics.tol");
        if (n["kmax"]) cfg.numerics.kmax = detail::scalar<int>(n["kmax"], "numerics.kmax");
        if (n["ml_tol"]) cfg.numerics.ml_tol = detail::scalar<double>(n["ml_tol"], "numerics.ml_tol");
    }
    if (const auto o = root["output"]) {
        if (o["path"]) cfg.out_path = detail::scalar<std::string>(o["path"], "output.path");
        if (o["format"]) cfg.format = detail::scalar<std::string>(o["format"], "output.format");
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(path);
    } catch (const YAML::BadFile&) {
        throw ConfigError(path, 0, "cannot read file");
    } catch (const YAML::ParserException& e) {
        throw ConfigError(path, e.mark.line + 1, e.msg);
    }
    return parse_config(root);
}

inline const char* kExample1 = R"(schema: 1
# ^C D^0.75 x + t ^C D^0.25 x = t,  x(0) = 0
problem:
  phi: "t"
  betas: [[0.75, 0], [0.25, 0]]
  coeffs: ["t"]
  rhs: "t"
  init: [0]
  T: 1
numerics:
  N: 2049
  tol: 1e-10
  kmax: 200
output:
  format: csv
)";

inline const char* kExample2 = R"(schema: 1
# ^C D^1.5 x + t ^C D^0.5 x = t^1.5,  x(0) = x'(0) = 0
problem:
  phi: "t"
  betas: [[1.5, 0], [0.5, 0]]
  coeffs: ["t"]
  rhs: "t^1.5"
  init: [0, 0]
  T: 1
numerics:
  N: 2049
  tol: 1e-10
  kmax: 200
output:
  format: csv
)";

}  // namespace fdephi::cli
