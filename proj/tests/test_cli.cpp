// Drives the built spectral_lab binary through the shell.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
    int status = -1;
    std::string out;
};

// stdout captured; stderr appended when merge is set
Result run(const std::string& args, const char* redirect) {
    const std::string cmd = std::string(SPECTRAL_LAB_CLI) + " " + args + redirect;
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    if (p == nullptr)
        return r;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0)
        r.out.append(buf.data(), n);
    const int raw = pclose(p);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

Result sh(const std::string& args, bool merge = false) { return run(args, merge ? " 2>&1" : " 2>/dev/null"); }

// stderr only, stdout discarded
Result sh_err(const std::string& args) { return run(args, " 2>&1 >/dev/null"); }

std::string config(const std::string& name) { return std::string(SPECTRAL_LAB_CONFIGS) + "/" + name; }

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / "spectral_lab_cli";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST(Cli, Version) {
    const auto r = sh("--version");
    EXPECT_EQ(r.status, 0);
    EXPECT_NE(r.out.find("1.0.0"), std::string::npos);
}

TEST(Cli, ScalingDegreeToStdout) {
    const auto r = sh("--config " + config("scaling_degree.toml"));
    EXPECT_EQ(r.status, 0);
    EXPECT_EQ(r.out.rfind("# spectral_lab 1.0.0\r\n# experiment: scaling-degree\r\n# config_hash: fnv1a64:", 0), 0u);
    EXPECT_NE(r.out.find("# summary: degree=2.00 "), std::string::npos) << r.out;
}

TEST(Cli, SummaryOnStderrUnlessQuiet) {
    const auto loud = sh_err("--config " + config("confinement_free.toml"));
    EXPECT_EQ(loud.status, 0);
    EXPECT_NE(loud.out.find("confinement: FiniteEnergy"), std::string::npos) << loud.out;
    const auto quiet = sh_err("--quiet --config " + config("confinement_free.toml"));
    EXPECT_EQ(quiet.status, 0);
    EXPECT_TRUE(quiet.out.empty()) << quiet.out;
}

TEST(Cli, OutFileAndDeterminism) {
    const fs::path dir = scratch();
    const auto a = (dir / "a.csv").string();
    const auto b = (dir / "b.csv").string();
    ASSERT_EQ(sh("--quiet --config " + config("ft_scaling.toml") + " --out " + a).status, 0);
    ASSERT_EQ(sh("--quiet --config " + config("ft_scaling.toml") + " --out " + b).status, 0);
    const std::string text = slurp(a);
    EXPECT_EQ(text, slurp(b));
    EXPECT_NE(text.find("radius,pairing,abs_error\r\n"), std::string::npos);
    EXPECT_NE(text.find("# summary: exponent=1.000 expected=1.000"), std::string::npos) << text;
    fs::remove(a);
    fs::remove(b);
}

TEST(Cli, ExperimentOverride) {
    const auto r = sh("--quiet --config " + config("confinement.toml") + " --experiment sum-rule");
    // sum-rule needs a measure, which the confinement config lacks
    EXPECT_EQ(r.status, 1);
    const auto d = sh("--quiet --experiment schwinger-energy");
    EXPECT_EQ(d.status, 0);
    EXPECT_NE(d.out.find("# experiment: schwinger-energy"), std::string::npos);
}

TEST(Cli, MeasureFilesAndSumRule) {
    EXPECT_NE(sh("--config " + config("sum_rule.toml")).out.find("# summary: Holds"), std::string::npos);
    EXPECT_NE(sh("--config " + config("sum_rule_divergent.toml")).out.find("# summary: Divergent"), std::string::npos);
    const std::string d = sh("--config " + config("decompose.toml")).out;
    const auto at = d.find("continuum,bump,4,9,");
    ASSERT_NE(at, std::string::npos) << d;
    // mass comes from quadrature, printed at full precision
    EXPECT_NEAR(std::stod(d.substr(at + 19)), 0.4, 1e-12) << d;
}

TEST(Cli, InvalidConfigExitsOne) {
    const auto r = sh("--config " + config("invalid_confinement.toml"), true);
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.out.find("needs >= 5 points"), std::string::npos) << r.out;
    EXPECT_EQ(sh("--validate-only --config " + config("invalid_confinement.toml")).status, 1);
    EXPECT_EQ(sh("--validate-only --config " + config("confinement.toml")).status, 0);

    const fs::path dir = scratch();
    std::ofstream(dir / "syntax.toml") << "experiment = \n";
    const auto s = sh("--config " + (dir / "syntax.toml").string(), true);
    EXPECT_EQ(s.status, 1);
    EXPECT_NE(s.out.find("syntax.toml:1"), std::string::npos) << s.out;
    EXPECT_EQ(sh("--config /nonexistent/run.toml").status, 1);
    EXPECT_EQ(sh("--experiment warp-drive").status, 1);
    EXPECT_EQ(sh("--bogus-flag").status, 1);
}

TEST(Cli, ComputationFailureExitsTwo) {
    const fs::path dir = scratch();
    std::ofstream(dir / "diverge.toml") << "experiment = \"scaling-degree\"\nthreads = 1\n"
                                           "[measure.continuum]\nfamily = \"power\"\n"
                                           "params = { coefficient = 1.0, exponent = 400.0 }\nsupport = [1.0, inf]\n";
    const auto out = (dir / "diverge.csv").string();
    const auto r = sh("--config " + (dir / "diverge.toml").string() + " --out " + out, true);
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.out.find("lambda="), std::string::npos) << r.out;
    EXPECT_FALSE(fs::exists(out));
    EXPECT_FALSE(fs::exists(out + ".partial"));

    const auto w = sh("--quiet --config " + config("sum_rule.toml") + " --out /nonexistent/dir/x.csv");
    EXPECT_EQ(w.status, 2);
}

TEST(Cli, PrintDefaultConfigRoundTrips) {
    const fs::path dir = scratch();
    const auto r = sh("--print-default-config --experiment classify");
    ASSERT_EQ(r.status, 0);
    std::ofstream(dir / "default.toml") << r.out;
    EXPECT_EQ(sh("--validate-only --config " + (dir / "default.toml").string()).status, 0);
}
