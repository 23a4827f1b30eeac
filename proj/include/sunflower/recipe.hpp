#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sunflower/errors.hpp"

namespace sunflower::cli {

/// How an expected field is compared against the produced value.
struct Expectation {
    std::string field;
    nlohmann::json value;          ///< number or string
    double abs_tol = 0.0;
    double rel_tol = 0.0;
    std::size_t line = 0;
    /// One-sided bound instead of a tolerance band: "<", "<=", ">" or ">=". Empty for a band.
    std::string bound;
};

struct RunRecipe {
    std::string name;
    std::string command;
    /// Flag name (without dashes) -> value, in file order.
    std::vector<std::pair<std::string, std::string>> parameters;
    std::vector<Expectation> expected;
    std::size_t line = 0;
};

class RecipeParseError : public Error {
public:
    RecipeParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Key = value blocks separated by blank lines; a document starting with '[' or '{' is read as JSON.
std::vector<RunRecipe> parse_recipes(std::istream& in);

struct CheckRow {
    std::string recipe;
    std::string field;
    std::string expected;
    std::string actual;
    std::string tolerance;
    bool pass = false;
};

struct RecipeReport {
    std::vector<CheckRow> rows;
    std::size_t recipes = 0;
    bool all_pass() const;
};

/// Compares one produced value against an expectation.
bool matches(const Expectation& e, const nlohmann::json& actual);

/// Looks up `a.b[2]`-style paths in a command summary.
std::optional<nlohmann::json> lookup(const nlohmann::json& summary, const std::string& path);

/// Runs every recipe (up to `jobs` at a time) and compares against expectations. Rows are ordered by recipe name.
RecipeReport run_recipes(const std::vector<RunRecipe>& recipes, std::size_t jobs);

void print_report(std::ostream& out, const RecipeReport& report);
nlohmann::json to_json(const RecipeReport& report);

}  // namespace sunflower::cli
