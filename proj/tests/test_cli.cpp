#include "lpmfe/config.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

class Cli : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("lpmfe-cli-" + std::to_string(::getpid()) + "-" +
               ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    Result run(const std::string& args, const std::string& env = "") const {
        const auto log = dir / "log.txt";
        const std::string cmd = env + " '" + std::string(LPMFE_CLI_PATH) + "' " + args + " > '" + log.string() + "' 2>&1";
        const int st = std::system(cmd.c_str());
        Result r;
        r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
        std::ifstream is(log);
        std::stringstream ss;
        ss << is.rdbuf();
        r.out = ss.str();
        return r;
    }

    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream os(dir / name);
        os << text;
        return dir / name;
    }

    std::string read(const fs::path& p) const {
        std::ifstream is(p);
        std::stringstream ss;
        ss << is.rdbuf();
        return ss.str();
    }
};

} // namespace

TEST_F(Cli, ValidateEveryPreset) {
    for (const char* p : {"inventory-default", "uncontrolled", "zero-dynamics", "single-action-diffusion",
                          "deterministic-push"}) {
        const auto r = run(std::string("validate --preset ") + p);
        EXPECT_EQ(r.code, 0) << p << "\n" << r.out;
        EXPECT_NE(r.out.find("CFL number"), std::string::npos);
    }
}

TEST_F(Cli, SolveDefaultInventoryWritesArtifacts) {
    const auto out = dir / "inv";
    const auto r = run("solve --preset inventory-default --out '" + out.string() + "'");
    ASSERT_EQ(r.code, 0) << r.out;
    for (const char* f : {"flow.csv", "occupation.csv", "boundary.csv", "terminal.csv", "trace.csv", "metadata.ini"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    const auto meta = read(out / "metadata.ini");
    EXPECT_NE(meta.find("[run]"), std::string::npos);
    EXPECT_NE(meta.find("converged = 1"), std::string::npos);
    EXPECT_NE(meta.find("seed = 20240601"), std::string::npos);
}

TEST_F(Cli, UncontrolledConvergesInAtMostTwoIterations) {
    const auto out = dir / "unc";
    const auto r = run("solve --preset uncontrolled --out '" + out.string() + "'");
    ASSERT_EQ(r.code, 0) << r.out;
    std::ifstream is(out / "trace.csv");
    std::string line;
    std::size_t rows = 0;
    std::getline(is, line);
    while (std::getline(is, line)) rows += !line.empty();
    EXPECT_GE(rows, 1u);
    EXPECT_LE(rows, 2u);
    EXPECT_NE(read(out / "metadata.ini").find("cfl = "), std::string::npos);
}

TEST_F(Cli, EmptyGridIsAnError) {
    const auto cfg = write("bad.ini", "[model]\nkind = inventory\n[grid]\nN = 10\nM = 0\nK = 2\n");
    const auto r = run("validate --config '" + cfg.string() + "'");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("grid.M must be >= 1, got 0"), std::string::npos) << r.out;
}

TEST_F(Cli, UnknownKeyIsAnError) {
    const auto cfg = write("bad.ini", "[model]\nkind = inventory\nspeed = 3\n");
    const auto r = run("validate --config '" + cfg.string() + "'");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("unknown key model.speed"), std::string::npos) << r.out;
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("frobnicate --preset uncontrolled").code, 1);
    EXPECT_EQ(run("validate").code, 1);
    EXPECT_EQ(run("validate --preset uncontrolled --config x.ini").code, 1);
    EXPECT_EQ(run("validate --preset no-such-preset").code, 1);
    EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, MismatchedArtifactsAreRejected) {
    const auto out = dir / "zd";
    ASSERT_EQ(run("solve --preset zero-dynamics --out '" + out.string() + "'").code, 0);
    const auto r = run("crosscheck --preset uncontrolled --artifacts '" + out.string() + "' --out '" +
                       (dir / "cc").string() + "'");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("error:"), std::string::npos) << r.out;
}

TEST_F(Cli, ZeroDynamicsCrosscheckPasses) {
    const auto out = dir / "zd";
    ASSERT_EQ(run("solve --preset zero-dynamics --out '" + out.string() + "'").code, 0);
    const auto r = run("crosscheck --preset zero-dynamics --artifacts '" + out.string() + "' --out '" + out.string() +
                       "'");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("crosscheck passed"), std::string::npos);
    for (const char* f : {"comparison.csv", "comparison.txt", "sim_occupation.csv", "sim_terminal.csv"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    const auto meta = read(out / "metadata.ini");
    EXPECT_NE(meta.find("command = solve"), std::string::npos);
    EXPECT_NE(meta.find("[crosscheck]"), std::string::npos);
}

TEST_F(Cli, SingleActionAllPasses) {
    const auto r = run("all --preset single-action-diffusion --seed 7 --out '" + (dir / "sa").string() + "'");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("seed 7"), std::string::npos);
}

TEST_F(Cli, NotConvergedExitsTwo) {
    const auto cfg = write("short.ini", "[model]\nkind = inventory\n[grid]\nN = 20\nM = 20\nK = 4\n"
                                        "[equilibrium]\nmax_iters = 1\n");
    const auto r = run("solve --config '" + cfg.string() + "' --out '" + (dir / "o").string() + "'");
    EXPECT_EQ(r.code, 2) << r.out;
    EXPECT_NE(r.out.find("NOT converged"), std::string::npos);
}

TEST_F(Cli, UnstableGridNeedsOverride) {
    const auto cfg = write("coarse.ini", "[model]\nkind = inventory\n[grid]\nN = 2\nM = 40\nK = 2\n");
    EXPECT_EQ(run("validate --config '" + cfg.string() + "'").code, 1);
    EXPECT_EQ(run("validate --override-cfl --config '" + cfg.string() + "'").code, 0);
}

TEST_F(Cli, OutputDirectoryPrecedence) {
    const auto cfg = write("run.ini", "[model]\nkind = reflected-diffusion\ninitial = point-mass(0.5)\n"
                                      "[diffusion]\nterminal_linear = 1\n[grid]\nN = 4\nM = 4\nK = 0\n"
                                      "[output]\ndir = " + (dir / "from-config").string() + "\n");
    ASSERT_EQ(run("solve --config '" + cfg.string() + "'").code, 0);
    EXPECT_TRUE(fs::exists(dir / "from-config" / "flow.csv"));
    ASSERT_EQ(run("solve --config '" + cfg.string() + "'", "LPMFE_OUT_DIR='" + (dir / "from-env").string() + "'").code,
              0);
    EXPECT_TRUE(fs::exists(dir / "from-env" / "flow.csv"));
    ASSERT_EQ(run("solve --config '" + cfg.string() + "' --out '" + (dir / "from-flag").string() + "'",
                  "LPMFE_OUT_DIR='" + (dir / "from-env2").string() + "'")
                  .code,
              0);
    EXPECT_TRUE(fs::exists(dir / "from-flag" / "flow.csv"));
    EXPECT_FALSE(fs::exists(dir / "from-env2"));
}
