#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "drbsde/parallel.hpp"
#include "drbsde/runner.hpp"

using namespace drbsde;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& tag) {
    static int counter = 0;
    const fs::path dir =
        fs::temp_directory_path() / ("drbsde_cli_" + tag + "_" + std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

const char* kTrivialSolve = R"({
  "problem": {
    "market": {"s0": 100.0, "rate": 0.05, "sigma": 0.2},
    "terminal": {"name": "constant", "value": 1.0},
    "generator": {"name": "zero"}
  },
  "grid": {"horizon": 1.0, "steps": 20},
  "engine": {"backend": "lattice", "solver": "bsde"},
  "simulation": {"n_paths": 200, "seed": 7}
})";

const char* kAmericanPutConverge = R"({
  "problem": {
    "market": {"s0": 100.0, "rate": 0.05, "sigma": 0.2},
    "terminal": {"name": "put", "strike": 100.0},
    "generator": {"name": "discounting"},
    "lower": {"name": "put", "strike": 100.0}
  },
  "grid": {"horizon": 1.0, "steps": 50},
  "weights": {"eps": 1e-4, "beta": 6.0},
  "engine": {"backend": "lattice", "solver": "penalized", "schedule": [16, 32, 64, 128, 256]},
  "simulation": {"n_paths": 200, "seed": 7}
})";

const char* kGamePrice = R"({
  "problem": {
    "market": {"s0": 100.0, "rate": 0.05, "sigma": 0.25},
    "terminal": {"name": "put", "strike": 115.0},
    "generator": {"name": "discounting"},
    "lower": {"name": "put", "strike": 115.0},
    "upper": {"name": "put_premium", "strike": 115.0, "premium": 2.5}
  },
  "grid": {"horizon": 0.75, "steps": 100},
  "engine": {"backend": "lattice", "solver": "clamped"},
  "simulation": {"n_paths": 200, "seed": 7}
})";

const char* kCompare = R"({
  "problem_a": {
    "market": {"s0": 100.0, "rate": 0.05, "sigma": 0.2},
    "terminal": {"name": "constant", "value": 0.0},
    "generator": {"name": "zero"},
    "lower": {"name": "constant", "value": -2.0}
  },
  "problem_b": {
    "market": {"s0": 100.0, "rate": 0.05, "sigma": 0.2},
    "terminal": {"name": "constant", "value": 1.0},
    "generator": {"name": "zero"},
    "lower": {"name": "constant", "value": -2.0}
  },
  "grid": {"horizon": 1.0, "steps": 30},
  "engine": {"backend": "lattice", "solver": "clamped"},
  "simulation": {"n_paths": 200, "seed": 7}
})";

const char* kRegressionSolve = R"({
  "problem": {
    "market": {"s0": 100.0, "rate": 0.05, "sigma": 0.2},
    "terminal": {"name": "put", "strike": 100.0},
    "generator": {"name": "discounting"},
    "lower": {"name": "put", "strike": 100.0}
  },
  "grid": {"horizon": 1.0, "steps": 25},
  "engine": {"backend": "regression", "solver": "clamped", "degree": 3, "transform": "log"},
  "simulation": {"n_paths": 4000, "seed": 11}
})";

}  // namespace

TEST_CASE("config parsing: defaults, overrides and diagnostics") {
    const RunConfig cfg = parse_run_config(kAmericanPutConverge);
    CHECK(cfg.steps == 50);
    CHECK(cfg.beta == 6.0);
    CHECK(cfg.solver == "penalized");
    CHECK(cfg.schedule == std::vector<int>{16, 32, 64, 128, 256});
    CHECK(cfg.n_paths == 200);
    CHECK(cfg.seed == 7);

    CHECK_THROWS_AS(parse_run_config("not json at all"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("{}"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"grid": {"horizon": 1.0, "steps": 10}})"),
                    ConfigError);

    std::string bad_gen = kTrivialSolve;
    bad_gen.replace(bad_gen.find("zero"), 4, "nope");
    CHECK_THROWS_AS(parse_run_config(bad_gen), ConfigError);

    std::string bad_steps = kTrivialSolve;
    bad_steps.replace(bad_steps.find("\"steps\": 20"), 11, "\"steps\": 0");
    CHECK_THROWS_AS(parse_run_config(bad_steps), ConfigError);
}

TEST_CASE("solve command: trivial problem and write-read identity") {
    const fs::path dir = fresh_dir("solve");
    const RunConfig cfg = parse_run_config(kTrivialSolve);
    run_command(Command::solve, cfg, dir);

    const json summary = json::parse(read_file(dir / "summary.json"));
    CHECK(summary["y0"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(summary["residuals"]["lower"].get<double>() == 0.0);
    CHECK(summary["residuals"]["upper"].get<double>() == 0.0);

    // The CSV re-parses to the exact doubles of the summary at t = 0.
    const std::string series = read_file(dir / "series.csv");
    std::stringstream lines(series);
    std::string header, first_row;
    std::getline(lines, header);
    CHECK(header == "t,mean_y,mean_z,mean_k_plus,mean_k_minus");
    std::getline(lines, first_row);
    std::stringstream cells(first_row);
    std::string cell;
    std::getline(cells, cell, ',');
    CHECK(std::stod(cell) == 0.0);
    std::getline(cells, cell, ',');
    CHECK(std::stod(cell) == summary["y0"].get<double>());

    std::size_t rows = 0;
    std::string line;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 20);  // 21 node rows follow the header; two consumed above
}

TEST_CASE("solve command: byte-identical reruns and thread invariance") {
    const RunConfig cfg = parse_run_config(kRegressionSolve);

    const fs::path a = fresh_dir("det_a");
    const fs::path b = fresh_dir("det_b");
    run_command(Command::solve, cfg, a);
    run_command(Command::solve, cfg, b);
    CHECK(read_file(a / "summary.json") == read_file(b / "summary.json"));
    CHECK(read_file(a / "series.csv") == read_file(b / "series.csv"));

    const fs::path c = fresh_dir("det_c");
    parallel::set_threads(4);
    run_command(Command::solve, cfg, c);
    parallel::set_threads(1);
    CHECK(read_file(a / "summary.json") == read_file(c / "summary.json"));
    CHECK(read_file(a / "series.csv") == read_file(c / "series.csv"));
}

TEST_CASE("converge command: table with nonincreasing distances") {
    const fs::path dir = fresh_dir("converge");
    const RunConfig cfg = parse_run_config(kAmericanPutConverge);
    run_command(Command::converge, cfg, dir);

    const json summary = json::parse(read_file(dir / "summary.json"));
    CHECK(summary["distance_nonincreasing"].get<bool>());

    std::stringstream lines(read_file(dir / "convergence.csv"));
    std::string line;
    std::getline(lines, line);  // header
    double prev = 1e300;
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
        std::stringstream cells(line);
        std::string cell;
        for (int c = 0; c < 5; ++c) std::getline(cells, cell, ',');
        const double dist = std::stod(cell);
        CHECK(dist <= prev);
        prev = dist;
        ++rows;
    }
    CHECK(rows == 5);
}

TEST_CASE("compare command: ordered data verdict") {
    const fs::path dir = fresh_dir("compare");
    const RunConfig cfg = parse_run_config(kCompare);
    run_command(Command::compare, cfg, dir);
    const json verdict = json::parse(read_file(dir / "comparison.json"));
    CHECK(verdict["ordered"].get<bool>());
    CHECK(verdict["worst_y_violation"].get<double>() <= 1e-8);
    CHECK(verdict["k_checked"].get<bool>());
}

TEST_CASE("price command: lattice engine matches the oracle through the CLI") {
    const fs::path dir = fresh_dir("price");
    const RunConfig cfg = parse_run_config(kGamePrice);
    run_command(Command::price, cfg, dir);
    const json price = json::parse(read_file(dir / "price.json"));
    CHECK(std::abs(price["relative_gap"].get<double>()) <= 1e-10);
    CHECK(price["regions"]["exercise"].is_array());
}

TEST_CASE("cli binary: exit codes for success, config error, numeric failure") {
    const fs::path dir = fresh_dir("binary");
    write_file(dir / "good.json", kTrivialSolve);
    write_file(dir / "bad.json", "{ this is not json");
    // Penalty level far too stiff for the grid: a numeric failure, not a
    // configuration one.
    std::string stiff = kAmericanPutConverge;
    stiff.replace(stiff.find("\"penalized\""), 11, "\"penalized\", \"penalty\": 500.0");
    stiff.replace(stiff.find("\"steps\": 50"), 11, "\"steps\": 10");
    write_file(dir / "stiff.json", stiff);

    const std::string cli = DRBSDE_CLI_PATH;
    auto run = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };

    CHECK(run("solve --config " + (dir / "good.json").string() + " --out " +
              (dir / "out1").string()) == 0);
    CHECK(run("solve --config " + (dir / "bad.json").string() + " --out " +
              (dir / "out2").string()) == 2);
    CHECK(run("solve --config " + (dir / "missing.json").string() + " --out " +
              (dir / "out3").string()) == 2);
    CHECK(run("solve --config " + (dir / "stiff.json").string() + " --out " +
              (dir / "out4").string()) == 3);
}

TEST_CASE("config parsing: wrong field types are configuration errors") {
    std::string bad_type = kTrivialSolve;
    bad_type.replace(bad_type.find("\"seed\": 7"), 9, "\"seed\": \"x\"");
    CHECK_THROWS_AS(parse_run_config(bad_type), ConfigError);

    std::string bad_schedule = kAmericanPutConverge;
    bad_schedule.replace(bad_schedule.find("[16, 32, 64, 128, 256]"), 22,
                         "[16, \"mid\", 64, 128, 256]");
    CHECK_THROWS_AS(parse_run_config(bad_schedule), ConfigError);
}
