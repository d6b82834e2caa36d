#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "drnet/cli.hpp"
#include "drnet/error.hpp"
#include "drnet/numeric.hpp"

using namespace drnet;

namespace {

std::vector<std::vector<std::string>> data_rows(const std::string& csv) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream is(csv);
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

std::string config_error(const std::string& text) {
    try {
        parse_config(text, "cfg.json");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("config parsing and diagnostics") {
    auto c = parse_config(R"({"experiment": "approx-rate", "target": "ridge-sin", "N": [2, 4], "seed": 9})");
    CHECK(c.targets == std::vector<std::string>{"ridge-sin"});
    CHECK(c.N_grid == std::vector<std::size_t>{2, 4});
    CHECK(c.seed == 9);

    CHECK(config_error("{\"experiment\": \"approx-rate\",\n  \"N\": [2,, 4]}").find("cfg.json:2:") == 0);
    CHECK(config_error(R"({"experiment": "approx-rate", "N": []})").find("field 'N'") != std::string::npos);
    CHECK(config_error(R"({"experiment": "approx-rate", "Nn": [2]})").find("unknown field 'Nn'") != std::string::npos);
    CHECK(config_error(R"({"experiment": "approx-rate", "N": [0]})").find("field 'N'") != std::string::npos);
    CHECK(config_error(R"({"experiment": "approx-rate", "N": "4"})").find("field 'N'") != std::string::npos);
    CHECK(config_error(R"({"experiment": "approx-rate", "target": "nope"})").find("unknown target") != std::string::npos);
    CHECK(config_error(R"({"experiment": "fly"})").find("field 'experiment'") != std::string::npos);
    CHECK(config_error(R"({"experiment": "learn-rate", "m": [64, 128, 256]})").find("field 'm'") != std::string::npos);
    CHECK(config_error(R"({"experiment": "cover-bound", "eps": [-1]})").find("field 'eps'") != std::string::npos);
}

TEST_CASE("config hash ignores output path and thread count") {
    auto a = default_config("approx-rate");
    auto b = a;
    b.out = "elsewhere.csv";
    b.jobs = 3;
    CHECK(a.hash() == b.hash());
    CHECK(csv_banner(a) == csv_banner(b));
    b.seed = 2;
    CHECK(a.hash() != b.hash());
    CHECK(csv_banner(a).rfind(std::string("# drnet ") + DRNET_VERSION + " experiment=approx-rate config=", 0) == 0);
}

TEST_CASE("approx-rate rows") {
    SUBCASE("laplace bound column is 8e/N") {
        auto c = default_config("approx-rate");
        c.targets = {"laplace-unit"};
        c.N_grid = {2, 8, 32};
        auto r = run_experiment(c);
        CHECK(r.exit_code == kExitOk);
        auto rows = data_rows(r.csv);
        REQUIRE(rows.size() == 3);
        for (const auto& row : rows)
            CHECK(parse_double(row[3]) == doctest::Approx(8 * std::numbers::e / std::stod(row[1])).epsilon(1e-14));
    }
    SUBCASE("ridge ratios stay at most one") {
        auto c = default_config("approx-rate");
        c.targets = {"ridge-sin"};
        c.N_grid = {2, 4, 8, 16, 32, 64};
        auto r = run_experiment(c);
        CHECK(r.exit_code == kExitOk);
        for (const auto& row : data_rows(r.csv)) CHECK(parse_double(row[4]) <= 1.0);
    }
}

TEST_CASE("reruns are byte-identical") {
    for (const char* e : {"approx-rate", "cover-bound", "construct"}) {
        auto c = default_config(e);
        if (std::string(e) == "approx-rate") c.N_grid = {2, 4};
        CHECK(run_experiment(c).csv == run_experiment(c).csv);
    }
    auto c = default_config("learn-rate");
    c.m_grid = {16, 32, 64, 128};
    c.n_ref = 64;
    c.mc_size = 50;
    c.epochs = 5;
    auto a = run_experiment(c), b = run_experiment(c);
    CHECK(a.exit_code == kExitOk);
    CHECK(a.csv == b.csv);
    CHECK(a.slope.has_value());
    CHECK(a.csv.find("# slope=") != std::string::npos);
}

TEST_CASE("single m value leaves the slope out") {
    auto c = default_config("learn-rate");
    c.m_grid = {32};
    c.n_ref = 64;
    c.mc_size = 20;
    c.epochs = 3;
    auto r = run_experiment(c);
    CHECK(r.exit_code == kExitOk);
    CHECK_FALSE(r.slope.has_value());
    CHECK(r.csv.find("# slope=absent") != std::string::npos);
    CHECK(data_rows(r.csv).size() == 1);
}

TEST_CASE("cover-bound without a target") {
    auto c = default_config("cover-bound");
    c.targets.clear();
    c.d = 1;
    c.q = 1;
    c.R = 1.0;
    c.N_grid = {1};
    c.eps_grid = {1.0};
    auto r = run_experiment(c);
    REQUIRE(r.exit_code == kExitOk);
    CHECK(r.csv.find("T1=12 T2=253") != std::string::npos);
    auto rows = data_rows(r.csv);
    CHECK(parse_double(rows[0][2]) == doctest::Approx(12 * std::log(15.0 * 29.0)));
    c.R = 0.5;
    CHECK(run_experiment(c).exit_code == kExitConfig);
}

TEST_CASE("exit codes") {
    auto c = default_config("gen-data");
    c.out = (std::filesystem::temp_directory_path() / "drnet_cli_cap").string();
    c.m_grid = {100000};
    c.n_grid = {10000};
    CHECK(run_experiment(c).exit_code == kExitCapacity);
    auto d = default_config("learn-rate");
    d.targets = {"ridge-sin"};
    CHECK(run_experiment(d).exit_code == kExitConfig);
}

TEST_CASE("gen-data then train from the directory") {
    const auto dir = std::filesystem::temp_directory_path() / "drnet_cli_data";
    std::filesystem::remove_all(dir);
    auto g = default_config("gen-data");
    g.out = dir.string();
    g.m_grid = {12};
    g.n_grid = {16};
    g.n_ref = 64;
    REQUIRE(run_experiment(g).exit_code == kExitOk);
    CHECK(std::filesystem::exists(dir / "second_stage" / "11.csv"));

    auto t = default_config("train");
    t.data_dir = dir.string();
    t.N_grid = {2};
    t.epochs = 10;
    t.net_out = (dir / "net.json").string();
    auto r = run_experiment(t);
    CHECK(r.exit_code == kExitOk);
    CHECK(std::filesystem::exists(dir / "net.json"));
    auto rows = data_rows(r.csv);
    REQUIRE(rows.size() >= 2);
    for (std::size_t k = 1; k < rows.size(); ++k) CHECK(parse_double(rows[k][1]) <= parse_double(rows[k - 1][1]));
    std::filesystem::remove_all(dir);
}

TEST_CASE("log-log fit") {
    std::vector<double> x{1, 2, 4, 8, 16}, y;
    for (double v : x) y.push_back(3.0 * std::pow(v, -0.75));
    auto f = loglog_fit(x, y);
    CHECK(f.slope == doctest::Approx(-0.75).epsilon(1e-12));
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
    REQUIRE(f.halfwidth.has_value());
    CHECK(*f.halfwidth < 1e-10);
    // t(0.975, 1) = 12.7062; residuals +-1 around a line at x = 1, 2, 4
    auto g = loglog_fit({1, std::exp(1.0), std::exp(2.0)}, {std::exp(1.0), std::exp(-1.0), std::exp(1.0)});
    CHECK(g.slope == doctest::Approx(0.0).scale(1.0));
    CHECK(*g.halfwidth == doctest::Approx(12.7062047 * std::sqrt(8.0 / 3.0 / 2.0)).epsilon(1e-6));
    CHECK_FALSE(loglog_fit({1, 2}, {1, 2}).halfwidth.has_value());
}
