// End-to-end runs of the command line front end.

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
    int code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> v;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);)
        if (!l.empty()) v.push_back(l);
    return v;
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
    std::vector<std::vector<double>> rows;
    auto ls = lines(slurp(p));
    for (std::size_t i = 1; i < ls.size(); ++i) {
        std::vector<double> r;
        std::istringstream in(ls[i]);
        for (std::string cell; std::getline(in, cell, ',');) r.push_back(std::stod(cell));
        rows.push_back(r);
    }
    return rows;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        std::string tmpl = (fs::temp_directory_path() / "fdephi_cli_XXXXXX").string();
        ASSERT_NE(mkdtemp(tmpl.data()), nullptr);
        dir_ = tmpl;
    }
    void TearDown() override { fs::remove_all(dir_); }

    Outcome run(const std::string& args) {
        const auto err = dir_ / "stderr.txt";
        const std::string cmd = std::string("cd '") + dir_.string() + "' && '" FDEPHI_CLI "' " + args +
                                " 2>'" + err.string() + "'";
        Outcome r;
        FILE* pipe = popen(cmd.c_str(), "r");
        if (!pipe) return r;
        std::array<char, 4096> buf;
        for (std::size_t n; (n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0;) r.out.append(buf.data(), n);
        const int status = pclose(pipe);
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.err = slurp(err);
        return r;
    }

    fs::path seed() {
        EXPECT_EQ(run("--seed-docs --out seeds").code, 0);
        return dir_ / "seeds";
    }

    fs::path dir_;
};

json last_json_line(const std::string& s) {
    const auto ls = lines(s);
    return ls.empty() ? json() : json::parse(ls.back(), nullptr, false);
}

}  // namespace

TEST_F(Cli, MlExamples) {
    EXPECT_EQ(run("ml --a 1 --b 1 --z 1").out, "2.718281828459045 0\n");
    EXPECT_EQ(run("ml --a 1 --b 1 --z 0").out, "1 0\n");
    EXPECT_EQ(run("ml --ks --alpha 1 --beta 1 --gamma 0 --lambda 0 --z 0.5").out, "2 0\n");
}

TEST_F(Cli, MlArityMismatchIsValidationError) {
    const auto r = run("ml --a 1 2 --b 1 --z 1");
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(last_json_line(r.err)["status"], "invalid");
}

TEST_F(Cli, SolveExampleOne) {
    const auto cfg = seed() / "example1.yaml";
    const auto r = run("--config " + cfg.string() + " --out x.csv solve");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ls = lines(slurp(dir_ / "x.csv"));
    ASSERT_EQ(ls.size(), 2050u);
    EXPECT_EQ(ls[0], "t,re_x,im_x,re_residual,im_residual");
    const auto summary = json::parse(r.out);
    EXPECT_LE(summary["residual_norm"].get<double>(), 1e-3);
    EXPECT_GT(summary["terms_used"].get<int>(), 0);
    EXPECT_TRUE(summary["certificate"]["satisfied"].get<bool>());
    EXPECT_TRUE(summary["certificate"].contains("nu"));
    EXPECT_TRUE(summary["certificate"].contains("C"));
}

TEST_F(Cli, PicardMatchesSeries) {
    const auto cfg = seed() / "example1.yaml";
    ASSERT_EQ(run("--config " + cfg.string() + " --out s.csv solve --method series").code, 0);
    ASSERT_EQ(run("--config " + cfg.string() + " --out p.csv solve --method picard").code, 0);
    const auto s = read_csv(dir_ / "s.csv"), p = read_csv(dir_ / "p.csv");
    ASSERT_EQ(s.size(), p.size());
    double diff = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < 3; ++j) diff = std::max(diff, std::abs(s[i][j] - p[i][j]));
    EXPECT_LE(diff, 10 * 1e-10);
}

TEST_F(Cli, NonDecreasingOrdersRejected) {
    std::ofstream(dir_ / "bad.yaml") << "schema: 1\nproblem:\n  phi: \"t\"\n  betas: [[0.25, 0], [0.75, 0]]\n"
                                        "  coeffs: [\"t\"]\n  rhs: \"t\"\n  init: [0]\n  T: 1\n";
    const auto r = run("--config bad.yaml solve");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("strictly decreasing"), std::string::npos) << r.err;
    const auto diag = last_json_line(r.err);
    EXPECT_EQ(diag["status"], "invalid");
    EXPECT_EQ(diag["findings"][0]["field"], "beta");
}

TEST_F(Cli, DivergenceWritesPartialOutput) {
    const auto cfg = seed() / "example1.yaml";
    const auto r = run("--config " + cfg.string() + " --kmax 2 --out d.csv solve");
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(lines(slurp(dir_ / "d.csv")).size(), 2050u);
    EXPECT_EQ(last_json_line(r.err)["status"], "diverged");
}

TEST_F(Cli, SyntaxErrorDiagnostic) {
    const auto r = run("fracint --f 'sin('");
    EXPECT_EQ(r.code, 1);
    const auto diag = last_json_line(r.err);
    ASSERT_FALSE(diag.is_discarded());
    EXPECT_EQ(diag["status"], "invalid");
    EXPECT_NE(diag["message"].get<std::string>().find("offset"), std::string::npos);
}

TEST_F(Cli, FracintOfOneIsT) {
    const auto r = run("--out y.csv fracint --f 1 --alpha 1 --phi t");
    ASSERT_EQ(r.code, 0) << r.err;
    for (const auto& row : read_csv(dir_ / "y.csv")) {
        EXPECT_NEAR(row[1], row[0], 1e-12);
        EXPECT_EQ(row[2], 0.0);
    }
}

TEST_F(Cli, FracintHalfOrderOfT) {
    ASSERT_EQ(run("--out y.csv fracint --f 't^1' --alpha 0.5 --phi t").code, 0);
    const auto rows = read_csv(dir_ / "y.csv");
    EXPECT_EQ(rows.back()[0], 1.0);
    EXPECT_NEAR(rows.back()[1], 0.75225277806367504925, 1e-6);
}

TEST_F(Cli, ContractionReportsAnalyticBound) {
    const auto cfg = seed() / "example1.yaml";
    const auto r = run("--config " + cfg.string() + " contraction");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto c = json::parse(r.out)["certificate"];
    EXPECT_TRUE(c["satisfied"].get<bool>());
    EXPECT_LT(c["C"].get<double>(), 1.0);
    EXPECT_TRUE(c.contains("analytic_C"));
}

TEST_F(Cli, CanonicalWritesOneFilePerFunction) {
    const auto cfg = seed() / "example2.yaml";
    const auto r = run("--config " + cfg.string() + " --out c canonical");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto cls = json::parse(r.out);
    const int n0 = cls["classification"]["n"][0].get<int>();
    for (int j = 0; j < n0; ++j) EXPECT_TRUE(fs::exists(dir_ / ("c_x" + std::to_string(j) + ".csv"))) << j;
    EXPECT_TRUE(cls["classification"].contains("case_tag"));
}

TEST_F(Cli, IdenticalConfigGivesIdenticalBytes) {
    const auto cfg = seed() / "example2.yaml";
    ASSERT_EQ(run("--config " + cfg.string() + " --n 257 --out a.csv solve").code, 0);
    ASSERT_EQ(run("--config " + cfg.string() + " --n 257 --out b.csv solve").code, 0);
    EXPECT_EQ(slurp(dir_ / "a.csv"), slurp(dir_ / "b.csv"));
}
