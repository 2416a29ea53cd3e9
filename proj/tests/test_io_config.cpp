#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace lpmfe;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("lpmfe-io-" + std::to_string(::getpid()) + "-" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

RunConfig parse(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

std::string config_error(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kMinimal = "[model]\nkind = inventory\n[grid]\nN = 4\nM = 6\nK = 2\n";

} // namespace

TEST(Csv, FlowRoundTripIsExact) {
    const auto m = oracle::inventory();
    const auto g = build_grid(m.domain, m.horizon, 8, 10, 2, {0.0, 1.0});
    const auto br = best_response(m, g, oracle::frozen_initial(m, g));
    const auto f = marginal_flow(br.triple, g);
    std::stringstream ss;
    write_flow_csv(ss, f, g);
    EXPECT_EQ(read_flow_csv(ss, g).rho, f.rho);
}

TEST(Csv, FlowForOtherGridIsRejected) {
    const auto m = oracle::inventory();
    const auto g = build_grid(m.domain, m.horizon, 8, 10, 2, {0.0, 1.0});
    std::stringstream ss;
    write_flow_csv(ss, oracle::frozen_initial(m, g), g);
    const std::string text = ss.str();
    std::istringstream a(text), b(text);
    EXPECT_THROW(read_flow_csv(a, build_grid(m.domain, m.horizon, 8, 12, 2, {0.0, 1.0})), InvalidArgument);
    EXPECT_THROW(read_flow_csv(b, build_grid(m.domain, m.horizon, 9, 10, 2, {0.0, 1.0})), InvalidArgument);
    std::istringstream bad("n,t,i,x,wrong\n");
    EXPECT_THROW(read_flow_csv(bad, g), InvalidArgument);
}

TEST(Csv, TripleRoundTripIsExact) {
    TempDir tmp;
    const auto m = oracle::inventory();
    const auto g = build_grid(m.domain, m.horizon, 8, 10, 2, {0.0, 1.0});
    const auto t = best_response(m, g, oracle::frozen_initial(m, g)).triple;
    write_triple(tmp.path, t, g);
    const auto back = read_triple(tmp.path, g);
    EXPECT_EQ(back.m, t.m);
    EXPECT_EQ(back.lambda_b, t.lambda_b);
    EXPECT_EQ(back.nu, t.nu);
    EXPECT_THROW(read_triple(tmp.path, build_grid(m.domain, m.horizon, 8, 10, 3, {0.0, 1.0})), InvalidArgument);
    EXPECT_THROW(read_triple(tmp.path / "missing", g), Error);
}

TEST(Csv, TraceRoundTrip) {
    std::vector<IterationRecord> tr{{1, 0.5, 0.25, -0.1, 0.125}, {2, 1e-7, 3e-9, -0.1000000001, 1e-3}};
    std::stringstream ss;
    write_trace_csv(ss, tr);
    const auto back = read_trace_csv(ss);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].iter, 2u);
    EXPECT_EQ(back[1].residual, 1e-7);
    EXPECT_EQ(back[1].cost, -0.1000000001);
}

TEST(Csv, Fmt17RoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) EXPECT_EQ(std::stod(fmt17(v)), v);
}

TEST(Config, EmptyFileIsAllDefaults) {
    const auto c = parse("");
    EXPECT_EQ(c.N, 50u);
    EXPECT_EQ(c.M, 60u);
    EXPECT_EQ(c.K, 5u);
}

TEST(Config, MinimalUsesDefaults) {
    const auto c = parse(kMinimal);
    EXPECT_EQ(c.kind, "inventory");
    EXPECT_EQ(c.N, 4u);
    EXPECT_EQ(c.equilibrium.damping, 0.5);
    EXPECT_EQ(c.simulation.paths, 100000u);
    EXPECT_EQ(c.grid().num_states(), 7u);
}

TEST(Config, AllPresetsParseAndValidate) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(LPMFE_PRESET_DIR)) {
        if (e.path().extension() != ".ini") continue;
        ++n;
        const auto c = load_config(e.path());
        const auto m = c.model();
        const auto g = c.grid();
        EXPECT_TRUE(validate_model(m, g).admissible()) << e.path();
        EXPECT_LE(cfl_report(m, g, flow_stats(m, g, oracle::frozen_initial(m, g))).number, 1.0) << e.path();
    }
    EXPECT_GE(n, 5u);
}

TEST(Config, RejectsUnknownKeysAndSections) {
    EXPECT_NE(config_error(std::string(kMinimal) + "foo = 1\n").find("unknown key grid.foo"), std::string::npos);
    EXPECT_NE(config_error(std::string(kMinimal) + "[extra]\na = 1\n").find("unknown section [extra]"),
              std::string::npos);
    EXPECT_NE(config_error("x = 1\n[model]\n[grid]\n").find("outside any section"), std::string::npos);
}

TEST(Config, RejectsEmptyGrid) {
    EXPECT_NE(config_error("[model]\n[grid]\nM = 0\n").find("grid.M must be >= 1, got 0"), std::string::npos);
    EXPECT_NE(config_error("[model]\n[grid]\nN = 0\n").find("grid.N must be >= 1, got 0"), std::string::npos);
    EXPECT_NE(config_error("[model]\n[grid]\nN = -3\n").find("nonnegative integer"), std::string::npos);
}

TEST(Config, RejectsBadValues) {
    EXPECT_FALSE(config_error("[model]\nhorizon = 0\n[grid]\n").empty());
    EXPECT_FALSE(config_error("[model]\nhorizon = abc\n[grid]\n").empty());
    EXPECT_FALSE(config_error("[model]\n[inventory]\nspoilage = 1.5\n[grid]\n").empty());
    EXPECT_FALSE(config_error("[model]\nkind = other\n[grid]\n").empty());
    EXPECT_FALSE(config_error("[model]\n[grid]\n[equilibrium]\ndamping = 0\n").empty());
    EXPECT_FALSE(config_error("[model]\n[grid]\n[equilibrium]\ninitial_flow = random\n").empty());
    EXPECT_FALSE(config_error("[model]\n[diffusion]\nsigma = 1\n[grid]\n").empty());
}

TEST(Config, InitialLaws) {
    const auto g = build_grid({0.0, 1.0}, 1.0, 1, 4, 0, {0.0, 0.0});
    EXPECT_EQ(parse(kMinimal).initial.describe(), InitialLaw::uniform().describe());
    auto c = parse("[model]\ninitial = point-mass(0.75)\n[grid]\n");
    EXPECT_EQ(c.initial.on_grid(g)[3], 1.0);
    c = parse("[model]\ninitial = histogram(1, 0, 3)\n[grid]\n");
    EXPECT_EQ(c.initial.describe(), InitialLaw::histogram({1, 0, 3}).describe());
    EXPECT_FALSE(config_error("[model]\ninitial = gaussian\n[grid]\n").empty());
    EXPECT_FALSE(config_error("[model]\ninitial = histogram()\n[grid]\n").empty());
}

TEST(Config, WriteConfigRoundTrips) {
    for (const auto& e : fs::directory_iterator(LPMFE_PRESET_DIR)) {
        if (e.path().extension() != ".ini") continue;
        const auto c = load_config(e.path());
        std::stringstream ss;
        write_config(ss, c);
        const auto d = parse(ss.str());
        std::stringstream again;
        write_config(again, d);
        EXPECT_EQ(ss.str(), again.str()) << e.path();
        EXPECT_EQ(d.simulation.seed, c.simulation.seed);
        EXPECT_EQ(d.initial.describe(), c.initial.describe());
    }
}

TEST(Config, MissingFileNamesPath) {
    try {
        load_config("/nonexistent/run.ini");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/run.ini"), std::string::npos);
    }
}
