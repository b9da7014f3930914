#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct Result {
    int status = -1;
    std::string out;
};

Result run(const std::string& args) {
    const std::string cmd = std::string(WORMCHAIN_CLI) + " " + args + " 2>/dev/null";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) return r;
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "wormchain_cli_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(Cli, HelpDocumentsColumns) {
    const Result r = run("sample --help");
    EXPECT_EQ(r.status, 0);
    EXPECT_NE(r.out.find("CSV columns"), std::string::npos);
    EXPECT_NE(r.out.find("edge_count"), std::string::npos);
}

TEST(Cli, SampleK3FractionInC0) {
    const Result r = run("sample --graph k3 --x 0.5 --steps 1000000 --seed 7 --format json --stride 100000");
    ASSERT_EQ(r.status, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j["summary"]["fraction_c0"].get<double>(), 3.0 / 7.0, 0.01);
    EXPECT_EQ(j["provenance"]["seed"], 7);
    EXPECT_EQ(j["provenance"]["generator"], "mt19937_64");
    EXPECT_TRUE(j["provenance"].contains("config_hash"));
    EXPECT_TRUE(j["provenance"]["graph"].contains("hash"));
    EXPECT_EQ(j["trace"].size(), 11U);
}

TEST(Cli, SampleCsvIsByteIdenticalAcrossRuns) {
    const auto a = scratch("a.csv"), b = scratch("b.csv");
    ASSERT_EQ(run("sample --graph grid2x3 --x 0.5 --steps 200000 --stride 100 --seed 7 --out " + a.string()).status, 0);
    ASSERT_EQ(run("sample --graph grid2x3 --x 0.5 --steps 200000 --stride 100 --seed 7 --out " + b.string()).status, 0);
    const std::string ta = read_file(a);
    EXPECT_FALSE(ta.empty());
    EXPECT_EQ(ta, read_file(b));
    EXPECT_NE(ta.find("t,in_c0,edge_count,defect_u,defect_v"), std::string::npos);
    EXPECT_NE(ta.find("# seed: 7"), std::string::npos);
    ASSERT_EQ(run("sample --graph grid2x3 --x 0.5 --steps 200000 --stride 100 --seed 8 --out " + b.string()).status, 0);
    EXPECT_NE(ta, read_file(b));
}

TEST(Cli, ValidationErrors) {
    EXPECT_EQ(run("sample --graph k3 --x 1.5 --steps 10").status, 1);
    EXPECT_EQ(run("sample --graph k3 --x 0.5 --beta 0.3 --steps 10").status, 1);
    EXPECT_EQ(run("sample --graph k3 --steps 10").status, 1);
    EXPECT_EQ(run("sample --graph nope3 --x 0.5 --steps 10").status, 1);
    EXPECT_EQ(run("sample --graph-file /nonexistent --x 0.5 --steps 10").status, 1);
    EXPECT_EQ(run("frobnicate").status, 1);
    EXPECT_EQ(run("fpras --graph path4 --x 0.5 --target corr --u 0 --v 3 --k 2").status, 1);
}

TEST(Cli, BetaIsConvertedToX) {
    const Result r = run("sample --graph k2 --beta 0.5 --steps 10 --format json");
    ASSERT_EQ(r.status, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j["provenance"]["x"].get<double>(), std::tanh(0.5), 1e-15);
}

TEST(Cli, GraphFile) {
    const auto path = scratch("tri.txt");
    std::ofstream(path) << "# triangle\n3 3\n0 1\n0 2\n1 2\n";
    const Result r = run("sample --graph-file " + path.string() + " --x 0.5 --steps 10 --format json");
    ASSERT_EQ(r.status, 0);
    EXPECT_EQ(nlohmann::json::parse(r.out)["provenance"]["graph"]["m"], 3);
    std::ofstream(path) << "2 2\n0 1\n0 1\n";
    EXPECT_EQ(run("sample --graph-file " + path.string() + " --x 0.5 --steps 10").status, 1);
}

TEST(Cli, ConfigFileWithFlagPrecedence) {
    const auto cfg = scratch("cfg.json");
    std::ofstream(cfg) << R"({"graph": "k3", "x": 0.5, "steps": 1000, "seed": 3, "stride": 500})";
    const Result from_file = run("sample --config " + cfg.string() + " --format json");
    ASSERT_EQ(from_file.status, 0);
    const auto a = nlohmann::json::parse(from_file.out);
    EXPECT_EQ(a["provenance"]["seed"], 3);
    EXPECT_EQ(a["summary"]["steps"], 1000);
    const Result flag_wins = run("sample --config " + cfg.string() + " --format json --seed 9 --beta 0.2");
    ASSERT_EQ(flag_wins.status, 0);
    const auto b = nlohmann::json::parse(flag_wins.out);
    EXPECT_EQ(b["provenance"]["seed"], 9);
    EXPECT_NEAR(b["provenance"]["x"].get<double>(), std::tanh(0.2), 1e-15);
    EXPECT_NE(a["provenance"]["config_hash"], b["provenance"]["config_hash"]);
    std::ofstream(cfg) << R"({"graph": "k3", "x": 0.5, "steps": 10, "bogus": 1})";
    EXPECT_EQ(run("sample --config " + cfg.string()).status, 1);
}

TEST(Cli, FprasPlanEcho) {
    const Result r = run("fpras --graph k2 --x 0.5 --target c0 --eps 0.2 --eta 0.2 --plan-only --format json");
    ASSERT_EQ(r.status, 0);
    const auto plan = nlohmann::json::parse(r.out)["plans"][0];
    EXPECT_EQ(plan["J"], 15);
    EXPECT_EQ(plan["I"], 2520);
    EXPECT_EQ(plan["R"], 2805);
    EXPECT_DOUBLE_EQ(plan["S"].get<double>(), 5.0);
    EXPECT_DOUBLE_EQ(plan["delta"].get<double>(), 0.0025);
    EXPECT_EQ(plan["R_overridden"], false);
}

TEST(Cli, FprasChiOnK2) {
    const Result r = run("fpras --graph k2 --x 0.5 --target chi --eps 0.2 --eta 0.2 --seed 4 --format json");
    ASSERT_EQ(r.status, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j["result"]["estimate"].get<double>(), 0.823959, 0.2 * 0.823959);
    EXPECT_NEAR(j["result"]["eps_per_estimate"].get<double>(), 0.2 / 1.2, 1e-15);
}

TEST(Cli, FprasTorusSmoke) {
    const Result plan = run("fpras --graph torus16x16 --x 0.4 --target chi --plan-only --format json");
    ASSERT_EQ(plan.status, 0);
    const auto j = nlohmann::json::parse(plan.out);
    EXPECT_TRUE(j["plans"][0]["R"].is_null());
    EXPECT_GT(j["plans"][0]["R_bound"].get<double>(), 1e18);
    EXPECT_EQ(run("fpras --graph torus16x16 --x 0.4 --target chi").status, 1);
    const Result ran = run("fpras --graph torus16x16 --x 0.4 --target chi --run-length 10 --format json");
    ASSERT_EQ(ran.status, 0);
    const auto k = nlohmann::json::parse(ran.out);
    EXPECT_EQ(k["plans"][0]["R_overridden"], true);
    EXPECT_TRUE(k["result"]["estimate"].is_number());
}

TEST(Cli, OracleK3) {
    const Result r = run("oracle --graph k3 --x 0.5 --delta 0.25 --format json");
    ASSERT_EQ(r.status, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_TRUE(j["report"]["verification"]["all_passed"].get<bool>());
    EXPECT_LE(j["report"]["chain"]["stationarity_error"].get<double>(), 1e-12);
    EXPECT_GE(j["report"]["mixing"]["mixing_times"][0]["mix"].get<int>(), 1);
    const Result csv = run("oracle --graph k3 --x 0.5");
    EXPECT_EQ(csv.status, 0);
    EXPECT_NE(csv.out.find("check,passed,lhs,rhs,detail"), std::string::npos);
}

TEST(Cli, FlowsK4) {
    const Result r = run("flows --graph k4 --x 0.5 --format json");
    ASSERT_EQ(r.status, 0);
    const auto rep = nlohmann::json::parse(r.out)["reports"][0];
    EXPECT_LE(rep["congestion"]["congestion"].get<double>(), rep["congestion"]["bound"].get<double>());
    EXPECT_TRUE(rep["verification"]["all_passed"].get<bool>());
}

TEST(Cli, ExactModeCap) {
    const std::string cmd = std::string(WORMCHAIN_CLI) + " oracle --graph torus8x8 --x 0.5 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    ASSERT_NE(pipe, nullptr);
    std::string text;
    std::array<char, 512> buf{};
    std::size_t got = 0;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) text.append(buf.data(), got);
    const int raw = pclose(pipe);
    EXPECT_EQ(WEXITSTATUS(raw), 1);
    EXPECT_NE(text.find("exact mode cap exceeded"), std::string::npos);
}

TEST(Cli, Bench) {
    const Result r = run("bench --graph torus8x8 --x 0.4 --steps 1000000 --format json");
    ASSERT_EQ(r.status, 0);
    EXPECT_GT(nlohmann::json::parse(r.out)["result"]["steps_per_second"].get<double>(), 0.0);
}
