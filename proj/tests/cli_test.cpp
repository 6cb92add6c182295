#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;

struct CommandResult {
    int exit_code;
    std::string output;
};

CommandResult run_cli(const std::string& args, const std::string& cwd = "") {
    std::string cmd;
    if (!cwd.empty()) cmd += "cd '" + cwd + "' && ";
    cmd += std::string(NASHPDE_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    EXPECT_NE(pipe, nullptr);
    std::string output;
    char buf[4096];
    while (std::size_t got = std::fread(buf, 1, sizeof(buf), pipe)) {
        output.append(buf, got);
    }
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, output};
}

std::string config(const char* name) {
    return std::string(NASHPDE_TEST_CONFIG_DIR) + "/" + name;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path fresh_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

TEST(CliCheck, ConvexLqPasses) {
    const CommandResult r = run_cli("check " + config("convex_lq_1d.json"));
    EXPECT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NE(r.output.find("check gradient"), std::string::npos);
    EXPECT_NE(r.output.find("check adjoint"), std::string::npos);
    EXPECT_NE(r.output.find("check PASS"), std::string::npos);
    EXPECT_EQ(r.output.rfind("nashpde ", 0), 0u) << "run header missing";
}

TEST(CliCheck, TwoDimensionalInstancePasses) {
    const CommandResult r = run_cli("check " + config("twod_tracking.json"));
    EXPECT_EQ(r.exit_code, 0) << r.output;
}

TEST(CliCheck, ConfigErrorsExitTwo) {
    const CommandResult zeta = run_cli("check " + config("bad_negative_zeta.json"));
    EXPECT_EQ(zeta.exit_code, 2) << zeta.output;
    EXPECT_NE(zeta.output.find("zeta"), std::string::npos);

    const CommandResult mono = run_cli("check " + config("bad_nonmonotone_f.json"));
    EXPECT_EQ(mono.exit_code, 2) << mono.output;
    EXPECT_NE(mono.output.find("df/dy"), std::string::npos);

    const CommandResult missing = run_cli("check /nonexistent/config.json");
    EXPECT_EQ(missing.exit_code, 2);
}

TEST(CliCheck, WritesNoFiles) {
    const fs::path dir = fresh_dir("nashpde_cli_isolation");
    const CommandResult r = run_cli("check " + config("convex_lq_1d.json"), dir.string());
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_TRUE(fs::is_empty(dir));
    fs::remove_all(dir);
}

TEST(CliEquilibrium, ClosedFormMatchesCsv) {
    const fs::path dir = fresh_dir("nashpde_cli_eq");
    const fs::path csv = dir / "controls.csv";
    const CommandResult r =
        run_cli("equilibrium " + config("convex_lq_1d.json") + " --out " + csv.string());
    EXPECT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NE(r.output.find("residual="), std::string::npos);
    EXPECT_NE(r.output.find("normal_cone"), std::string::npos);
    EXPECT_NE(r.output.find(" pass"), std::string::npos);

    // u = clamp(2 sin(2 pi x), -1, 1), zeta = 1
    std::ifstream in(csv);
    ASSERT_TRUE(in.good());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "x1,u_1");
    int rows = 0;
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        ASSERT_NE(comma, std::string::npos);
        const double x = std::stod(line.substr(0, comma));
        const double u = std::stod(line.substr(comma + 1));
        const double expected =
            std::min(1.0, std::max(-1.0, 2.0 * std::sin(2.0 * M_PI * x)));
        EXPECT_NEAR(u, expected, 1e-8);
        ++rows;
    }
    EXPECT_EQ(rows, 31);
    fs::remove_all(dir);
}

TEST(CliEquilibrium, SymmetricPlayersReported) {
    const CommandResult r = run_cli("equilibrium " + config("symmetric_m2.json"));
    EXPECT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NE(r.output.find("player 1 grad_norm="), std::string::npos);
    EXPECT_NE(r.output.find("player 2 grad_norm="), std::string::npos);
}

TEST(CliEquilibrium, SymmetricControlsAgreeInCsv) {
    const fs::path dir = fresh_dir("nashpde_cli_sym");
    const fs::path csv = dir / "controls.csv";
    const CommandResult r =
        run_cli("equilibrium " + config("symmetric_m2.json") + " --out " + csv.string());
    ASSERT_EQ(r.exit_code, 0) << r.output;

    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    ASSERT_EQ(line, "x1,u_1,u_2");
    double worst = 0.0;
    while (std::getline(in, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const double u1 = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        const double u2 = std::stod(line.substr(c2 + 1));
        worst = std::max(worst, std::abs(u1 - u2));
    }
    EXPECT_LE(worst, 1e-8);
    fs::remove_all(dir);
}

TEST(CliEquilibrium, IterationLogWrittenOnRequest) {
    const fs::path dir = fresh_dir("nashpde_cli_eqlog");
    const fs::path log = dir / "iters.csv";
    const CommandResult r =
        run_cli("equilibrium " + config("symmetric_m2.json") + " --log " + log.string());
    EXPECT_EQ(r.exit_code, 0) << r.output;
    std::ifstream in(log);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "iter,residual");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_GE(rows, 2);
    fs::remove_all(dir);
}

TEST(CliEquilibrium, NoOutFlagWritesNothing) {
    const fs::path dir = fresh_dir("nashpde_cli_eq_isolation");
    const CommandResult r =
        run_cli("equilibrium " + config("convex_lq_1d.json"), dir.string());
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_TRUE(fs::is_empty(dir));
    fs::remove_all(dir);
}

TEST(CliEquilibrium, IterationCapExitsOne) {
    const CommandResult r =
        run_cli("equilibrium " + config("symmetric_m2.json") + " --max-iters 1");
    EXPECT_EQ(r.exit_code, 1) << r.output;
    EXPECT_NE(r.output.find("converged=false"), std::string::npos);
}

TEST(CliEquilibrium, StdoutDeterministic) {
    const std::string args = "equilibrium " + config("symmetric_m2.json");
    const CommandResult a = run_cli(args);
    const CommandResult b = run_cli(args);
    EXPECT_EQ(a.output, b.output);
}

TEST(CliEquilibrium, BadMethodFlagExitsTwo) {
    const CommandResult r =
        run_cli("equilibrium " + config("convex_lq_1d.json") + " --method newton");
    EXPECT_EQ(r.exit_code, 2);
}

TEST(CliCertify, ConvexExitsZero) {
    const CommandResult r = run_cli("certify " + config("symmetric_m2.json"));
    EXPECT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NE(r.output.find("verdict=fully-stable"), std::string::npos);
    EXPECT_NE(r.output.find("lambda_min="), std::string::npos);
}

TEST(CliCertify, IndefiniteExitsOne) {
    const CommandResult r = run_cli("certify " + config("indefinite_1d.json"));
    EXPECT_EQ(r.exit_code, 1) << r.output;
    EXPECT_NE(r.output.find("verdict=indefinite"), std::string::npos);
    EXPECT_NE(r.output.find("witness_norm=1"), std::string::npos);
}

TEST(CliCertify, FullyActiveExitsZeroWithEmptyFreeSet) {
    const CommandResult r = run_cli("certify " + config("fully_active_1d.json"));
    EXPECT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NE(r.output.find("free set empty"), std::string::npos);
    EXPECT_NE(r.output.find("verdict=fully-stable"), std::string::npos);
}

TEST(CliPerturb, PureTiltCertifiesAndReproduces) {
    const fs::path dir = fresh_dir("nashpde_cli_perturb");
    const fs::path csv_a = dir / "a.csv";
    const fs::path csv_b = dir / "b.csv";
    const std::string base =
        "perturb " + config("convex_lq_1d.json") + " --samples 10 --seed 7 --out ";
    const CommandResult a = run_cli(base + csv_a.string());
    const CommandResult b = run_cli(base + csv_b.string());
    EXPECT_EQ(a.exit_code, 0) << a.output;
    EXPECT_NE(a.output.find("kappa_hat="), std::string::npos);
    EXPECT_NE(a.output.find("lip_pass_rate=1"), std::string::npos);
    EXPECT_EQ(read_file(csv_a), read_file(csv_b));

    // stdout identical too (timestamps excluded by construction)
    EXPECT_EQ(a.output.substr(0, a.output.rfind('\n')),
              b.output.substr(0, b.output.rfind('\n')));
    fs::remove_all(dir);
}

TEST(CliPerturb, ThreadCapRespectsEnvAndKeepsBytes) {
    const fs::path dir = fresh_dir("nashpde_cli_threads");
    const fs::path csv_a = dir / "a.csv";
    const fs::path csv_b = dir / "b.csv";
    const std::string args =
        "perturb " + config("symmetric_m2.json") + " --samples 6 --seed 11 --out ";

    setenv("NASHPDE_THREADS", "1", 1);
    const CommandResult serial = run_cli(args + csv_a.string());
    setenv("NASHPDE_THREADS", "4", 1);
    const CommandResult parallel = run_cli(args + csv_b.string());
    unsetenv("NASHPDE_THREADS");

    EXPECT_EQ(serial.exit_code, 0) << serial.output;
    EXPECT_EQ(parallel.exit_code, 0) << parallel.output;
    EXPECT_EQ(read_file(csv_a), read_file(csv_b));
    fs::remove_all(dir);
}

}  // namespace
