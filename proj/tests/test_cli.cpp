#include "cli_util.hpp"

#include "cpo/errors.hpp"
#include "cpo/serialization.hpp"

#include <doctest.h>

#include <regex>
#include <sstream>

using namespace cli_util;
using cpo::Json;

TEST_CASE("config file keys, flag precedence and hashing") {
    const auto dir = scratch("config");
    {
        std::ofstream f(dir / "run.cfg");
        f << "# comment\ntask = gaussian_mixture\nalpha = 0.2\nk-max = 7\nn_cal=50\n";
    }
    cpo::cli::RunConfig c;
    for (const auto& [k, v] : cpo::cli::read_config_file(dir / "run.cfg"))
        cpo::cli::apply_setting(c, k, v);
    CHECK(c.task == "gaussian_mixture");
    CHECK(c.alpha == 0.2);
    CHECK(c.k_max == 7);
    CHECK(c.n_cal == 50);
    cpo::cli::RunConfig d = c;
    d.out = "elsewhere";
    CHECK(d.hash() == c.hash());
    d.seed = 1;
    CHECK(d.hash() != c.hash());
    CHECK_THROWS_AS(cpo::cli::apply_setting(c, "colour", "red"), cpo::InvalidArgument);
    CHECK_THROWS_AS(cpo::cli::apply_setting(c, "alpha", "0.1x"), cpo::InvalidArgument);

    // flag beats file
    const auto out = dir / "out";
    CHECK(run_cli({"calibrate", "--config", (dir / "run.cfg").string(), "--alpha", "0.3", "--k", "3", "--out",
                   out.string()}) == 0);
    const Json region = Json::parse(slurp(out / "region.json"));
    CHECK(region["alpha"] == 0.3);
    CHECK(region["K"] == 3);
    CHECK(region["n_cal"] == 50);
    CHECK(region["task"]["name"] == "gaussian_mixture");
}

TEST_CASE("exit codes") {
    const auto dir = scratch("exit");
    CHECK(run_cli({"calibrate", "--task", "no_such_task", "--out", dir.string()}) == 2);
    CHECK(run_cli({"calibrate", "--alpha", "1.5", "--out", dir.string()}) == 2);
    CHECK(run_cli({"calibrate", "--bogus-flag", "1"}) == 2);
    CHECK(run_cli({"frobnicate"}) == 2);
    // 20 calibration points cannot support alpha = 0.01
    CHECK(run_cli({"optimize", "--task", "gaussian_linear", "--dim", "2", "--n-cal", "20", "--alpha", "0.01",
                   "--out", dir.string()}) == 3);
    // missing config file
    CHECK(run_cli({"calibrate", "--task", "two_moons", "--n-cal", "5", "--k", "2", "--out", dir.string(),
                   "--config", "/nonexistent.cfg"}) == 2);
}

TEST_CASE("calibrate is deterministic and monotone in alpha") {
    const auto dir = scratch("calibrate");
    const std::vector<std::string> base{"calibrate", "--task", "gaussian_linear", "--n-cal", "300", "--k", "5",
                                        "--seed", "17"};
    auto with = [&](std::vector<std::string> extra) {
        auto a = base;
        a.insert(a.end(), extra.begin(), extra.end());
        return a;
    };
    CHECK(run_cli(with({"--out", (dir / "a").string()})) == 0);
    CHECK(run_cli(with({"--out", (dir / "b").string()})) == 0);
    CHECK(slurp(dir / "a" / "region.json") == slurp(dir / "b" / "region.json"));
    CHECK(run_cli(with({"--alpha", "0.5", "--out", (dir / "c").string()})) == 0);
    const Json strict = Json::parse(slurp(dir / "a" / "region.json"));
    const Json loose = Json::parse(slurp(dir / "c" / "region.json"));
    CHECK(loose["q_hat"].get<double>() < strict["q_hat"].get<double>());
    CHECK(strict["lineage"]["calibration"] == "cal1");
    CHECK(strict.contains("config_hash"));
}

TEST_CASE("select-k report on the constant task") {
    const auto dir = scratch("selectk");
    CHECK(run_cli({"select-k", "--task", "constant", "--n-cal", "100", "--n-cal2", "50", "--k-max", "6",
                   "--samples-per-ball", "200", "--out", dir.string()}) == 0);
    const Json j = Json::parse(slurp(dir / "select_k.json"));
    CHECK(j["k_star"] == 1);
    CHECK(j["q_hat"].size() == 6);
    std::istringstream csv(slurp(dir / "select_k.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line.rfind("# config_hash=", 0) == 0);
    std::getline(csv, line);
    CHECK(line == "K,q_hat,volume,volume_se");
    int rows = 0;
    while (std::getline(csv, line))
        ++rows;
    CHECK(rows == 6);
}

TEST_CASE("optimize report lists every method") {
    const auto dir = scratch("optimize");
    CHECK(run_cli({"optimize", "--task", "gaussian_mixture", "--n-cal", "200", "--n-train", "200", "--k", "5",
                   "--ptc-draws", "20", "--instances", "4", "--steps", "200", "--alpha", "0.1", "--out",
                   dir.string()}) == 0);
    const std::string csv = slurp(dir / "optimize.csv");
    for (const char* m : {"Box", "PTC-B", "Ellipsoid", "PTC-E", "CPO", "Nominal"})
        CHECK(csv.find(std::string(",") + m + ",") != std::string::npos);
    // Nominal never exceeds a robust value on covered rows
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            f.push_back(cell);
        REQUIRE(f.size() == 7);
        if (f[4] == "1" && f[1] != "Nominal")
            CHECK(std::stod(f[3]) <= std::stod(f[2]) + 1e-6);
    }
    const Json j = Json::parse(slurp(dir / "optimize.json"));
    CHECK(j["instances"].size() == 4);
    for (const char* key : {"w", "robust_value", "worst_case_c", "iterations", "seed"})
        CHECK(j["instances"][0]["CPO"].contains(key));
}

TEST_CASE("optimize and rps consume a saved region") {
    const auto dir = scratch("rps");
    const std::string region = (dir / "cal" / "region.json").string();
    CHECK(run_cli({"calibrate", "--task", "gaussian_mixture", "--n-cal", "200", "--k", "6", "--alpha", "0.1",
                   "--out", (dir / "cal").string()}) == 0);
    CHECK(run_cli({"rps", "--task", "gaussian_mixture", "--region", region, "--rp-count", "5",
                   "--samples-per-ball", "300", "--out", (dir / "rps").string()}) == 0);
    const Json s = Json::parse(slurp(dir / "rps" / "rps.json"));
    CHECK(s["rps"].size() <= 5);
    CHECK(s["region_hash"] != "none");
    // SVG bar values add up to the JSON totals per coordinate
    const std::string svg = slurp(dir / "rps" / "variances.svg");
    const std::regex value_re("data-value=\"([^\"]+)\"");
    std::vector<double> bars;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), value_re); it != std::sregex_iterator(); ++it)
        bars.push_back(std::stod((*it)[1]));
    REQUIRE(bars.size() == 2);
    for (std::size_t d = 0; d < 2; ++d) {
        double total = 0;
        for (const auto& row : s["projection_variances"])
            total += row[d].get<double>();
        CHECK(bars[d] == doctest::Approx(total).epsilon(1e-5));
    }
    CHECK(std::filesystem::exists(dir / "rps" / "rps.svg"));

    // wrong task for the artifact
    CHECK(run_cli({"rps", "--task", "two_moons", "--region", region, "--out", (dir / "bad").string()}) == 2);
}

TEST_CASE("routing rps emits a per-edge table") {
    const auto dir = scratch("routing_rps");
    CHECK(run_cli({"rps", "--task", "routing_grid", "--grid-rows", "3", "--grid-cols", "3", "--n-cal", "60",
                   "--k", "4", "--alpha", "0.2", "--rp-count", "3", "--samples-per-ball", "50", "--out",
                   dir.string()}) == 0);
    std::istringstream csv(slurp(dir / "variances.csv"));
    std::string line;
    std::getline(csv, line);
    std::getline(csv, line);
    CHECK(line == "rp,edge,src,dst,variance");
}

TEST_CASE("bench table formatting") {
    const auto dir = scratch("bench");
    CHECK(run_cli({"bench", "--task", "gaussian_linear,gaussian_mixture", "--dim", "2", "--n-cal", "200",
                   "--n-train", "200", "--n-test", "200", "--k", "5", "--ptc-draws", "20", "--instances", "3",
                   "--steps", "100", "--out", dir.string()}) == 0);
    const std::string md = slurp(dir / "bench.md");
    CHECK(std::regex_search(md, std::regex("\\| gaussian_mixture \\| CPO \\| [01]\\.\\d\\d \\| -?\\d+\\.\\d\\d "
                                           "\\(\\d+\\.\\d\\d\\) \\|")));
    const Json j = Json::parse(slurp(dir / "bench.json"));
    CHECK(j["tasks"].size() == 2);
}
