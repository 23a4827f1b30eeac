#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "sunflower/cli.hpp"
#include "sunflower/recipe.hpp"
#include "sunflower/solver.hpp"

using namespace sunflower;
using namespace sunflower::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
    Outcome outcome;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    Run r;
    r.outcome = run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("sunflower_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Run reproduce_text(const std::string& text, const std::string& name) {
    const auto dir = scratch_dir(name);
    const auto file = dir / "r.recipe";
    std::ofstream(file) << text;
    return invoke({"reproduce", file.string()});
}

}  // namespace

TEST_CASE("classify examples") {
    auto r = invoke({"classify", "--l", "3", "--m", "6", "--alpha", "0.3"});
    REQUIRE(r.outcome.exit_code == kOk);
    CHECK(r.outcome.summary["classification"] == "StabilitySwitch");
    CHECK(r.outcome.summary["tau1"].get<double>() == doctest::Approx(0.567501).epsilon(1e-4));
    CHECK(r.outcome.summary["tau2"].get<double>() == doctest::Approx(10.133).epsilon(1e-4));
    const auto printed = nlohmann::json::parse(r.out);
    CHECK(printed["version"] == tool_version());

    r = invoke({"classify", "--l", "1", "--m", "8", "--alpha", "0.4"});
    CHECK(r.outcome.summary["classification"] == "SingleStableRegion");
    CHECK(std::abs(r.outcome.summary["tau1"].get<double>() - 0.0173043) < 1e-4);

    r = invoke({"classify", "--equilibrium", "x2", "--l", "5", "--m", "2", "--alpha", "0.3", "--tau", "2.8"});
    REQUIRE(r.outcome.exit_code == kOk);
    CHECK(r.outcome.summary["classification"] == "AlwaysUnstable");
}

TEST_CASE("exit codes") {
    CHECK(invoke({"simulate", "--l", "-1"}).outcome.exit_code == kDomain);
    CHECK(invoke({"simulate", "--l", "-1"}).err.find("--l") != std::string::npos);
    CHECK(invoke({"simulate", "--bogus", "1"}).outcome.exit_code == kUsage);
    CHECK(invoke({}).outcome.exit_code == kUsage);
    CHECK(invoke({"classify", "--l", "1"}).outcome.exit_code == kUsage);
    CHECK(invoke({"classify", "--l", "1", "--m", "1", "--alpha", "1.5"}).outcome.exit_code == kDomain);
    CHECK(invoke({"classify", "--l", "1", "--m", "1", "--alpha", "0.5", "--equilibrium", "x2"}).outcome.exit_code ==
          kDomain);
    CHECK(invoke({"curve", "--which", "h3"}).outcome.exit_code == kDomain);
    CHECK(invoke({"curve", "--lrange", "2:1"}).outcome.exit_code == kDomain);

    const auto few = invoke({"cycles", "--tau", "4", "--T", "100", "--k", "50"});
    CHECK(few.outcome.exit_code == kInsufficientData);

    const auto dir = scratch_dir("diverge");
    const auto csv = dir / "d.csv";
    const auto div = invoke({"simulate", "--l", "1000", "--tau", "1", "--k", "2", "--T", "50", "--out", csv.string()});
    CHECK(div.outcome.exit_code == kDivergence);
    CHECK(div.err.find("divergence at step") != std::string::npos);
    std::ifstream in(csv);
    const auto rows = read_csv_columns(in);
    CHECK(rows.size() == static_cast<std::size_t>(div.outcome.summary["divergence_step"].get<long>()) + 2);
}

TEST_CASE("simulate examples") {
    const auto dir = scratch_dir("simulate");
    auto r = invoke({"simulate", "--l", "14", "--m", "5.6", "--alpha", "0.85", "--tau", "4", "--history", "6.9",
                     "--x0prime", "2.5", "--k", "100", "--T", "400", "--out", (dir / "a.csv").string()});
    REQUIRE(r.outcome.exit_code == kOk);
    CHECK(r.outcome.summary["final_distance"].get<double>() < 0.05);

    // default history: starts at the cycle amplitude and never settles
    r = invoke({"simulate", "--tau", "6", "--T", "400", "--out", (dir / "b.csv").string()});
    REQUIRE(r.outcome.exit_code == kOk);
    CHECK(r.outcome.summary["last_quarter_mean_dev"].get<double>() > 0.5);
    // from a small perturbation the departure from 2 pi is visible
    r = invoke({"simulate", "--tau", "6", "--T", "200", "--history", "6.3", "--x0prime", "0", "--out",
                (dir / "b.csv").string()});
    REQUIRE(r.outcome.exit_code == kOk);
    CHECK(r.outcome.summary["last_quarter_mean_dev"].get<double>() >
          5.0 * r.outcome.summary["first_quarter_mean_dev"].get<double>());

    r = invoke({"simulate", "--history", "6.283185307179586", "--x0prime", "0", "--T", "50", "--out",
                (dir / "c.csv").string()});
    REQUIRE(r.outcome.exit_code == kOk);
    std::ifstream in(dir / "c.csv");
    const auto rows = read_csv_columns(in);
    double drift = 0.0;
    for (const auto& [t, x] : rows) drift = std::max(drift, std::abs(x - 2 * std::numbers::pi));
    CHECK(drift < 0.05);
}

TEST_CASE("outputs are byte identical across runs and carry their configuration") {
    const auto dir = scratch_dir("determinism");
    for (const char* name : {"a", "b"}) {
        const std::string stem = (dir / name).string();
        CHECK(invoke({"simulate", "--T", "60", "--out", stem + ".csv"}).outcome.exit_code == kOk);
        CHECK(invoke({"attractor", "--T", "60", "--out", stem + ".pairs.csv"}).outcome.exit_code == kOk);
        CHECK(invoke({"mle", "--tau", "20", "--T", "1500", "--k", "50", "--out", stem + ".mle.json"}).outcome.exit_code ==
              kOk);
        CHECK(invoke({"curve", "--alpha", "0.3", "--lrange", "1:2", "--points", "2", "--out", stem + ".curve.csv"})
                  .outcome.exit_code == kOk);
    }
    for (const char* suffix : {".csv", ".pairs.csv", ".mle.json", ".curve.csv", ".curve.csv.json"}) {
        CAPTURE(suffix);
        const auto a = slurp(dir / (std::string("a") + suffix));
        CHECK(!a.empty());
        CHECK(a == slurp(dir / (std::string("b") + suffix)));
        CHECK(a.find(tool_version()) != std::string::npos);
    }
    const auto head = slurp(dir / "a.csv");
    for (const char* key : {"l=", "m=", "alpha=", "tau=", "x0prime=", "k=", "T=", "rhs="}) {
        CHECK(head.find(key) != std::string::npos);
    }
    const auto mle = nlohmann::json::parse(slurp(dir / "a.mle.json"));
    CHECK(mle["params"]["tau"] == 20.0);
    CHECK(mle["config"]["embedding"]["lag"] == 12);
}

TEST_CASE("help lists every flag with its default") {
    for (const char* cmd : {"simulate", "mle", "cycles", "attractor"}) {
        CAPTURE(cmd);
        const auto r = invoke({cmd, "--help"});
        CHECK(r.outcome.exit_code == kOk);
        for (const char* flag : {"--l FLOAT [14]", "--m FLOAT [5.6]", "--alpha FLOAT [0.85]", "--tau FLOAT [4]",
                                 "--history FLOAT [6.9]", "--x0prime FLOAT [2.5]", "--k UINT [100]",
                                 "--T FLOAT [400]", "--rhs TEXT [sine]", "--out"}) {
            CHECK(r.out.find(flag) != std::string::npos);
        }
    }
    const auto curve = invoke({"curve", "--help"});
    CHECK(curve.out.find("--lrange TEXT [0.5:2]") != std::string::npos);
    CHECK(curve.out.find("--tmax FLOAT [200]") != std::string::npos);
    const auto classify = invoke({"classify", "--help"});
    CHECK(classify.out.find("--equilibrium TEXT [x1]") != std::string::npos);
    CHECK(classify.out.find("--dump-curve") != std::string::npos);
}

TEST_CASE("output directory from the environment") {
    const auto dir = scratch_dir("env");
    ::setenv("SUNFLOWER_OUT_DIR", dir.string().c_str(), 1);
    CHECK(resolve_output_path("x.csv") == (dir / "x.csv").string());
    CHECK(resolve_output_path("/abs/x.csv") == "/abs/x.csv");
    CHECK(invoke({"attractor", "--T", "20", "--out", "pairs.csv"}).outcome.exit_code == kOk);
    CHECK(fs::exists(dir / "pairs.csv"));
    ::unsetenv("SUNFLOWER_OUT_DIR");
    CHECK(resolve_output_path("x.csv") == "x.csv");
}

TEST_CASE("recipe parsing") {
    std::istringstream text(
        "# comment\n"
        "name = one\n"
        "command = classify\n"
        "l = 3\n"
        "m = 6\n"
        "alpha = 0.3\n"
        "expect.tau1 = 0.567501 abs 1e-3\n"
        "expect.classification = StabilitySwitch\n"
        "\n"
        "name = two\n"
        "command = simulate\n"
        "literal-z = true\n"
        "expect.final_distance = 0 abs 0.05 rel 0.1\n"
        "expect.x_range = > 12.566\n");
    const auto recipes = parse_recipes(text);
    REQUIRE(recipes.size() == 2);
    CHECK(recipes[0].name == "one");
    CHECK(recipes[0].line == 2);
    CHECK(recipes[0].parameters.size() == 3);
    REQUIRE(recipes[0].expected.size() == 2);
    CHECK(recipes[0].expected[0].abs_tol == 1e-3);
    CHECK(recipes[0].expected[1].value == "StabilitySwitch");
    CHECK(recipes[1].expected[0].rel_tol == 0.1);
    CHECK(recipes[1].expected[1].bound == ">");
    CHECK(recipes[1].expected[1].value == 12.566);

    std::istringstream js(R"([{"name": "j", "command": "classify", "parameters": {"l": 1, "m": 8, "alpha": 0.4},
                               "expected": {"tau1": {"value": 0.0173043, "abs": 1e-4}}}])");
    const auto from_json = parse_recipes(js);
    REQUIRE(from_json.size() == 1);
    const auto& params = from_json[0].parameters;
    CHECK(std::find(params.begin(), params.end(), std::pair<std::string, std::string>{"l", "1"}) != params.end());
    CHECK(from_json[0].expected[0].abs_tol == 1e-4);

    auto line_of = [](const std::string& s) {
        std::istringstream in(s);
        try {
            parse_recipes(in);
        } catch (const RecipeParseError& e) {
            return e.line();
        }
        return std::size_t{0};
    };
    CHECK(line_of("name = a\ncommand = classify\nthis line is wrong\n") == 3);
    CHECK(line_of("name = a\ncommand = explode\n") == 1);
    CHECK(line_of("name = a\ncommand = classify\n\nname = a\ncommand = curve\n") == 4);
    CHECK(line_of("name = a\ncommand = classify\nexpect.tau1 = 1 within 2\n") == 3);
    CHECK(line_of("command = classify\n") == 1);
    CHECK(line_of("name = a\ncommand = classify\nexpect.tau1 = > 1 abs 2\n") == 3);
}

TEST_CASE("summary lookup and comparison") {
    const nlohmann::json s = {{"a", {{"b", {1.0, 2.0, 3.0}}}}, {"c", "x"}};
    CHECK(lookup(s, "a.b[2]").value() == 3.0);
    CHECK(lookup(s, "c").value() == "x");
    CHECK(!lookup(s, "a.b[7]").has_value());
    CHECK(!lookup(s, "missing").has_value());
    CHECK(matches(Expectation{"f", 1.0, 0.1, 0.0, 0}, 1.05));
    CHECK(!matches(Expectation{"f", 1.0, 0.01, 0.0, 0}, 1.05));
    CHECK(matches(Expectation{"f", 10.0, 0.0, 0.01, 0}, 10.09));
    CHECK(!matches(Expectation{"f", 1.0, 0.1, 0.0, 0}, "1"));
    CHECK(matches(Expectation{"f", "Aperiodic", 0.0, 0.0, 0}, "Aperiodic"));
    Expectation above{"f", 12.5, 0.0, 0.0, 0, ">"};
    CHECK(matches(above, 13.0));
    CHECK(!matches(above, 12.5));
    above.bound = "<=";
    CHECK(matches(above, 12.5));
}

TEST_CASE("reproduce") {
    SUBCASE("empty recipe file") {
        const auto r = reproduce_text("", "empty");
        CHECK(r.outcome.exit_code == kOk);
        CHECK(r.outcome.summary["rows"].empty());
        CHECK(r.out.find("0/0 checks passed") != std::string::npos);
    }
    SUBCASE("correct and deliberately wrong expectations") {
        const std::string block =
            "command = classify\nl = 14\nm = 5.6\nalpha = 0.85\nexpect.classification = SingleStableRegion\n";
        const auto good = reproduce_text("name = good\n" + block + "expect.tau1 = 5.16433 abs 5e-3\n", "good");
        CHECK(good.outcome.exit_code == kOk);
        const auto bad = reproduce_text("name = bad\n" + block + "expect.tau1 = 5.21433 abs 5e-3\n", "bad");
        CHECK(bad.outcome.exit_code == kRegressionFail);
        CHECK(bad.out.find("FAIL") != std::string::npos);
        const auto& rows = bad.outcome.summary["rows"];
        REQUIRE(rows.size() == 3);
        CHECK(rows[0]["field"] == "exit_code");
        CHECK(rows[2]["pass"] == false);
    }
    SUBCASE("malformed recipe") {
        const auto r = reproduce_text("name = a\ncommand = classify\nl 3\n", "malformed");
        CHECK(r.outcome.exit_code == kUsage);
        CHECK(r.err.find("line 3") != std::string::npos);
    }
    SUBCASE("missing file") {
        CHECK(invoke({"reproduce", "/nonexistent/file.recipe"}).outcome.exit_code == kUsage);
    }
    SUBCASE("expected failures and exit codes are comparable") {
        const auto r = reproduce_text(
            "name = short\ncommand = cycles\ntau = 4\nT = 100\nk = 50\nexpect.exit_code = 3\n", "exitcode");
        CHECK(r.outcome.exit_code == kOk);
    }
}

TEST_CASE("report order does not depend on the number of jobs") {
    std::string text;
    for (const char* name : {"delta", "alpha", "charlie", "bravo"}) {
        text += std::string("name = ") + name + "\ncommand = classify\nl = 3\nm = 6\nalpha = 0.3\nexpect.count = 2\n\n";
    }
    std::istringstream in(text);
    const auto recipes = parse_recipes(in);
    const auto serial = run_recipes(recipes, 1);
    const auto parallel = run_recipes(recipes, 3);
    CHECK(to_json(serial) == to_json(parallel));
    REQUIRE(serial.rows.size() == 8);
    CHECK(serial.rows[0].recipe == "alpha");
    CHECK(serial.rows[7].recipe == "delta");
    CHECK(serial.all_pass());
}
