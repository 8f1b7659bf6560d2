#include "lans/commands.hpp"
#include "lans/config.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lans;

namespace {

const char* kHappy = "nu = 1.0\nalpha = 0.5\nL = 6.283185307179586\ncutoff = 2\n"
                     "epsilon = 1.5\nsigma = 0.5\nseed = 42\n";

int run(const std::string& cmd, const std::string& text, std::string* csv_out = nullptr,
        std::string* info_out = nullptr) {
    const SimConfig cfg = parse_config(text);
    std::ostringstream csv, info;
    const int rc = run_command(cmd, cfg, csv, info);
    if (csv_out)
        *csv_out = csv.str();
    if (info_out)
        *info_out = info.str();
    return rc;
}

int config_error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("happy-path config fills defaults") {
    const SimConfig cfg = parse_config(kHappy);
    CHECK(cfg.physics.nu == 1.0);
    CHECK(cfg.physics.alpha == 0.5);
    CHECK(cfg.cutoff == 2);
    CHECK(cfg.seed == 42);
    CHECK(cfg.integrator.scheme == Scheme::SemiImplicitEM);
    CHECK(cfg.M == 100);
    CHECK(cfg.warnings.empty());
}

TEST_CASE("comments and blank lines are ignored") {
    const SimConfig cfg = parse_config("# header\n\n  nu = 2   # trailing\n\tsigma=0\n");
    CHECK(cfg.physics.nu == 2.0);
    CHECK(cfg.sigma == 0.0);
}

TEST_CASE("parse errors name the line and key") {
    try {
        parse_config("cutoff = 2\nnu = -1\n");
        CHECK(false);
    } catch (const ConfigError& e) {
        CHECK(e.line() == 2);
        CHECK(e.key() == "nu");
    }
    CHECK(config_error_line("nu = 1\nviscosity = 2\n") == 2);
    CHECK(config_error_line("nu = 1\nnu = 2\n") == 2);
    CHECK(config_error_line("cutoff = two\n") == 1);
    CHECK(config_error_line("cutoff = 2.5\n") == 1);
    CHECK(config_error_line("dt =\n") == 1);
    CHECK(config_error_line("just text\n") == 1);
    CHECK(config_error_line("scheme = leapfrog\n") == 1);
    CHECK(config_error_line("nonlinear = maybe\n") == 1);
    CHECK(config_error_line("dt = 0.3\nt_end = 1\n") == 2);
    CHECK(config_error_line("scheme = rk4_deterministic\n") == 1);
    CHECK(config_error_line("sigma = 0\nscheme = rk4_deterministic\n") == -1);
    CHECK(config_error_line("nu = 0\nsigma = 0\n") == -1);
    CHECK(config_error_line("nu = 0\n") == 1);
    CHECK(config_error_line("cutoff = 1\nh_mode = 8\n") == 2);
}

TEST_CASE("inadmissible epsilon is accepted with a warning") {
    const SimConfig cfg = parse_config("epsilon = 0.5\n");
    REQUIRE_FALSE(cfg.warnings.empty());
    std::string info;
    CHECK(run("validate", "epsilon = 0.5\n", nullptr, &info) == kExitOk);
    CHECK(info.find("warning") != std::string::npos);
}

TEST_CASE("validate prints traces and verdicts") {
    std::string csv, info;
    CHECK(run("validate", kHappy, &csv, &info) == kExitOk);
    CHECK(csv.rfind("quantity,value\n", 0) == 0);
    CHECK(csv.find("trace_Q,") != std::string::npos);
    CHECK(csv.find("trace_QAQ,") != std::string::npos);
    CHECK(csv.find("trace_alpha,") != std::string::npos);
    CHECK(info.find("admissible") != std::string::npos);
}

TEST_CASE("unknown subcommand is a configuration error") {
    CHECK(run("frobnicate", kHappy) == kExitConfig);
    CHECK(subcommands().size() == 10);
}

TEST_CASE("simulate writes the trajectory header and a loadable snapshot") {
    const auto dir = std::filesystem::temp_directory_path() / "lans_cli_test";
    std::filesystem::create_directories(dir);
    const auto snap = (dir / "final.snap").string();
    std::string csv;
    const std::string base = std::string(kHappy) + "dt = 0.01\nt_end = 0.1\n";
    CHECK(run("simulate", base + "snapshot_path = " + snap + "\n", &csv) == kExitOk);
    CHECK(csv.rfind("t,F,dissipation,dissipation_integral,martingale\n", 0) == 0);
    REQUIRE(std::filesystem::exists(snap));

    // restarting from the snapshot with t_end = 0 reproduces its energy
    std::string restart;
    CHECK(run("simulate", std::string(kHappy) + "dt = 0.01\nt_end = 0\nx0_snapshot = " + snap + "\n",
              &restart) == kExitOk);
    const auto last_F = [](const std::string& s) {
        const auto line_start = s.rfind('\n', s.size() - 2) + 1;
        const auto c1 = s.find(',', line_start);
        const auto c2 = s.find(',', c1 + 1);
        return s.substr(c1 + 1, c2 - c1 - 1);
    };
    CHECK(last_F(csv) == last_F(restart));

    CHECK(run("simulate", std::string(kHappy) + "x0_snapshot = " + (dir / "missing").string() + "\n") ==
          kExitConfig);
    std::filesystem::remove_all(dir);
}

TEST_CASE("exponential moments refuse an inadmissible exponent") {
    std::string csv, info;
    CHECK(run("mc-expmoments", std::string(kHappy) + "eps_exp = 5\nM = 4\n", &csv, &info) ==
          kExitConfig);
    CHECK(csv.empty());
    CHECK(info.find("< 0 required") != std::string::npos);
}

TEST_CASE("be refuses noise-free configurations") {
    CHECK(run("be", "sigma = 0\nM = 4\n") == kExitConfig);
}

TEST_CASE("ou-test and variation pass on small problems") {
    std::string csv;
    CHECK(run("ou-test", "L = 1\nnu = 5\ncutoff = 1\nsigma = 1\nnonlinear = false\n"
                         "T_long = 60\nburn_in = 10\n",
              &csv) == kExitOk);
    CHECK(csv.rfind("mode,oracle_variance,empirical_variance,rel_error\n", 0) == 0);
    CHECK(run("variation", "cutoff = 1\ndt = 0.001\nt_end = 0.1\n", &csv) == kExitOk);
    CHECK(csv.rfind("delta,fd_norm,eta_norm,rel_error\n", 0) == 0);
}

TEST_CASE("numbers are printed round-trip exact") {
    CHECK(format_real(0.1) == "0.10000000000000001");
    CHECK(std::stod(format_real(1.0 / 3.0)) == 1.0 / 3.0);
}

} // TEST_SUITE
