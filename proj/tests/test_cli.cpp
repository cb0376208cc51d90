#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pilotwave/cli.hpp"
#include "pilotwave/wavefield.hpp"

using namespace pilotwave;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("pilotwave_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int counter() {
        static int c = 0;
        return c++;
    }
    std::string prefix(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        std::vector<std::string> row;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(cell);
        rows.push_back(row);
    }
    return rows;
}

} // namespace

TEST_CASE("budget scenario reproduces the headline acquisition time") {
    TempDir dir;
    cli::CliOptions opt;
    opt.scenario = "budget";
    opt.out_prefix = dir.prefix("run");
    CHECK(cli::run(opt) == cli::kExitOk);

    const auto rows = csv_rows(slurp(dir.prefix("run") + ".budget.csv"));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"planes", "bins", "pairs_per_bin",
                                              "pair_rate", "seconds"});
    CHECK(std::stod(rows[1][4]) == 64000.0);

    const auto meta = nlohmann::json::parse(slurp(dir.prefix("run") + ".metadata.json"));
    CHECK(meta["scenario"] == "budget");
    CHECK(meta["exit_code"] == 0);
    CHECK(meta["results"]["budget_seconds"] == 64000.0);
    CHECK(meta["incidents"]["node_stall"] == 0);
}

TEST_CASE("config files, overrides and validation messages") {
    TempDir dir;
    const std::string cfg_path = dir.prefix("cfg.txt");
    {
        std::ofstream cfg(cfg_path);
        cfg << "# comment line\n"
            << "scenario = budget\n"
            << "n_bins = 20   # trailing comment\n";
    }
    cli::CliOptions opt;
    opt.config_path = cfg_path;
    opt.out_prefix = dir.prefix("a");
    opt.overrides = {"pairs_per_bin=2000"};
    CHECK(cli::run(opt) == cli::kExitOk);
    const auto rows = csv_rows(slurp(dir.prefix("a") + ".budget.csv"));
    // 25 * 20^2 * 2000 * 20^2 / 1e6
    CHECK(std::stod(rows[1][4]) == doctest::Approx(8000.0));

    // unknown keys are rejected with the offending name
    {
        std::ofstream cfg(cfg_path, std::ios::trunc);
        cfg << "scenario = budget\nnot_a_key = 3\n";
    }
    cli::CliOptions bad = opt;
    bad.overrides = {};
    bad.out_prefix = dir.prefix("b");
    CHECK(cli::run(bad) == cli::kExitConfig);

    // invariant violations name the field
    cli::CliOptions neg;
    neg.scenario = "budget";
    neg.out_prefix = dir.prefix("c");
    neg.overrides = {"n_planes=-1"};
    CHECK(cli::run(neg) == cli::kExitConfig);
    const auto meta = nlohmann::json::parse(slurp(dir.prefix("c") + ".metadata.json"));
    const std::string err = meta["error"];
    CHECK(err.find("n_planes") != std::string::npos);

    cli::CliOptions phi;
    phi.scenario = "marginals";
    phi.out_prefix = dir.prefix("d");
    phi.overrides = {"phi=7.0"};
    CHECK(cli::run(phi) == cli::kExitConfig);

    cli::CliOptions scen;
    scen.scenario = "no-such-scenario";
    scen.out_prefix = dir.prefix("e");
    CHECK(cli::run(scen) == cli::kExitConfig);
}

TEST_CASE("trajectories scenario: divergence column and phi sweep") {
    TempDir dir;
    cli::CliOptions opt;
    opt.scenario = "trajectories";
    opt.out_prefix = dir.prefix("t");
    opt.overrides = {"starts=0.5,0.5;0.4,0.6", "phi_b=0", "dt=0.02", "t_end=1.0",
                     "record_stride=10"};
    CHECK(cli::run(opt) == cli::kExitOk);

    const auto traj = csv_rows(slurp(dir.prefix("t") + ".trajectories.csv"));
    CHECK(traj[0] == std::vector<std::string>{"traj_id", "t", "x_a", "x_b", "v_a", "v_b"});
    CHECK(traj.size() > 2);

    // identical phases: every divergence entry is exactly zero
    const auto div = csv_rows(slurp(dir.prefix("t") + ".divergence.csv"));
    REQUIRE(div.size() == 3);
    CHECK(div[0] == std::vector<std::string>{"traj_id", "x_a0", "x_b0", "divergence"});
    CHECK(std::stod(div[1][3]) == 0.0);
    CHECK(std::stod(div[2][3]) == 0.0);

    // a remote phase moves photon B
    cli::CliOptions swept = opt;
    swept.out_prefix = dir.prefix("s");
    swept.overrides = {"starts=0.5,0.5", "phi_b=3.141592653589793", "dt=0.002"};
    CHECK(cli::run(swept) == cli::kExitOk);
    const auto div2 = csv_rows(slurp(dir.prefix("s") + ".divergence.csv"));
    CHECK(std::stod(div2[1][3]) > 0.5);
}

TEST_CASE("velocity-profile scenario: analytic column matches the wavefield") {
    TempDir dir;
    cli::CliOptions opt;
    opt.scenario = "velocity-profile";
    opt.out_prefix = dir.prefix("v");
    opt.overrides = {"phi_values=0,1.5707963267948966,3.141592653589793",
                     "pairs_per_bin=40", "max_events=400000", "n_bins_b=10",
                     "range_lo_b=-10", "range_hi_b=10"};
    CHECK(cli::run(opt) == cli::kExitOk);

    StateConfig c;
    c.slits_a = {0.1, 0.5};
    c.slits_b = {0.1, 0.5};
    for (int k = 0; k < 3; ++k) {
        const auto rows = csv_rows(
            slurp(dir.prefix("v") + ".velocity-profile." + std::to_string(k) + ".csv"));
        REQUIRE(rows.size() == 11);
        CHECK(rows[0] == std::vector<std::string>{"x_b_center", "v_hat", "stderr",
                                                  "n_used", "v_analytic"});
        c.phi = k * std::numbers::pi / 2.0;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double xb = std::stod(rows[i][0]);
            const double va = std::stod(rows[i][4]);
            CHECK(va == doctest::Approx(velocity(Side::B, {4.0, xb, 4.0}, c)).epsilon(1e-9));
        }
    }
}

TEST_CASE("metadata resolved config round-trips bit-for-bit") {
    TempDir dir;
    cli::CliOptions opt;
    opt.scenario = "weak-sim";
    opt.out_prefix = dir.prefix("w1");
    opt.seed = 555;
    opt.overrides = {"n=500", "range_lo_a=-200", "range_hi_a=200", "range_lo_b=-200",
                     "range_hi_b=200", "kappa=0.001"};
    CHECK(cli::run(opt) == cli::kExitOk);

    cli::CliOptions rerun;
    rerun.config_path = dir.prefix("w1") + ".resolved.cfg";
    rerun.out_prefix = dir.prefix("w2");
    CHECK(cli::run(rerun) == cli::kExitOk);

    CHECK(slurp(dir.prefix("w1") + ".weak-sim.csv") ==
          slurp(dir.prefix("w2") + ".weak-sim.csv"));
    CHECK(slurp(dir.prefix("w1") + ".resolved.cfg") ==
          slurp(dir.prefix("w2") + ".resolved.cfg"));
}

TEST_CASE("weak-sim scenario: coverage validation and event schema") {
    TempDir dir;
    cli::CliOptions narrow;
    narrow.scenario = "weak-sim";
    narrow.out_prefix = dir.prefix("n");
    narrow.overrides = {"n=10"}; // default +-20 range covers only ~68%
    CHECK(cli::run(narrow) == cli::kExitConfig);
    const auto meta = nlohmann::json::parse(slurp(dir.prefix("n") + ".metadata.json"));
    const std::string err = meta["error"];
    CHECK(err.find("range") != std::string::npos);

    cli::CliOptions ok;
    ok.scenario = "weak-sim";
    ok.out_prefix = dir.prefix("ok");
    ok.overrides = {"n=200", "range_lo_a=-200", "range_hi_a=200", "range_lo_b=-200",
                    "range_hi_b=200", "kappa=0.001", "n_bins_a=40", "n_bins_b=40"};
    CHECK(cli::run(ok) == cli::kExitOk);
    const auto rows = csv_rows(slurp(dir.prefix("ok") + ".weak-sim.csv"));
    CHECK(rows[0] == std::vector<std::string>{"event_id", "x_a", "x_b", "bin_a", "bin_b",
                                              "outcome"});
    REQUIRE(rows.size() == 201);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const int outcome = std::stoi(rows[i][5]);
        CHECK((outcome == 1 || outcome == -1));
    }
}

TEST_CASE("joint-density and marginals scenarios write the documented schemas") {
    TempDir dir;
    cli::CliOptions jd;
    jd.scenario = "joint-density";
    jd.out_prefix = dir.prefix("jd");
    jd.overrides = {"grid_n_a=11", "grid_n_b=11", "grid_lo_a=-30", "grid_hi_a=30",
                    "grid_lo_b=-30", "grid_hi_b=30"};
    CHECK(cli::run(jd) == cli::kExitOk);
    const auto rows = csv_rows(slurp(dir.prefix("jd") + ".joint-density.csv"));
    CHECK(rows[0] == std::vector<std::string>{"x_a", "x_b", "density"});
    REQUIRE(rows.size() == 122);
    StateConfig c;
    c.slits_a = {0.1, 0.5};
    c.slits_b = {0.1, 0.5};
    const double d = std::stod(rows[1][2]);
    CHECK(d == doctest::Approx(joint_density({-30.0, -30.0, 4.0}, c)).epsilon(1e-12));

    cli::CliOptions mg;
    mg.scenario = "marginals";
    mg.out_prefix = dir.prefix("mg");
    mg.overrides = {"grid_n_a=21", "grid_n_b=21"};
    CHECK(cli::run(mg) == cli::kExitOk);
    const auto mrows = csv_rows(slurp(dir.prefix("mg") + ".marginals.csv"));
    CHECK(mrows[0] == std::vector<std::string>{"side", "x", "density"});
    REQUIRE(mrows.size() == 43);
    CHECK(mrows[1][0] == "a");
    CHECK(mrows[22][0] == "b");
}

TEST_CASE("equivariance scenario emits a total-variation summary") {
    TempDir dir;
    cli::CliOptions opt;
    opt.scenario = "equivariance";
    opt.out_prefix = dir.prefix("eq");
    opt.overrides = {"n=2000", "dt=0.01", "threads=0"};
    CHECK(cli::run(opt) == cli::kExitOk);
    const auto rows = csv_rows(slurp(dir.prefix("eq") + ".equivariance.csv"));
    CHECK(rows[0] == std::vector<std::string>{"n", "t_end", "bins_a", "bins_b",
                                              "tv_distance", "stalled"});
    REQUIRE(rows.size() == 2);
    // n = 2000 has a TV noise floor near 0.09; this is a smoke bound
    CHECK(std::stod(rows[1][4]) < 0.2);
    CHECK(std::stoi(rows[1][5]) == 0);
}
