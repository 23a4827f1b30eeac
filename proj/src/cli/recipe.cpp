#include "sunflower/recipe.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include "sunflower/cli.hpp"

namespace sunflower::cli {
namespace {

using nlohmann::json;

const std::set<std::string> kCommands{"simulate", "classify", "curve", "mle", "cycles", "attractor"};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::optional<double> to_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    std::size_t used = 0;
    try {
        const double v = std::stod(s, &used);
        if (used != s.size()) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

Expectation parse_expectation(const std::string& field, const std::string& text, std::size_t line) {
    Expectation e;
    e.field = field;
    e.line = line;
    std::istringstream tokens(text);
    std::string first;
    tokens >> first;
    if (first == "<" || first == "<=" || first == ">" || first == ">=") {
        std::string rest, extra;
        tokens >> rest;
        const auto bound = to_number(rest);
        if (!bound || (tokens >> extra)) throw RecipeParseError("bound '" + first + "' needs exactly one number", line);
        e.value = *bound;
        e.bound = first;
        return e;
    }
    const auto number = to_number(first);
    if (!number) {
        e.value = text;
        return e;
    }
    e.value = *number;
    std::string kind;
    while (tokens >> kind) {
        std::string tol_text;
        if (!(tokens >> tol_text)) throw RecipeParseError("tolerance '" + kind + "' needs a value", line);
        const auto tol = to_number(tol_text);
        if (!tol || *tol < 0.0) throw RecipeParseError("invalid tolerance '" + tol_text + "'", line);
        if (kind == "abs" || kind == "+-") {
            e.abs_tol = *tol;
        } else if (kind == "rel") {
            e.rel_tol = *tol;
        } else {
            throw RecipeParseError("unknown tolerance kind '" + kind + "' (abs, rel, +-)", line);
        }
    }
    return e;
}

void check_block(const RunRecipe& r, std::set<std::string>& names) {
    if (r.name.empty()) throw RecipeParseError("recipe block has no name", r.line);
    if (r.command.empty()) throw RecipeParseError("recipe '" + r.name + "' has no command", r.line);
    if (!kCommands.count(r.command)) throw RecipeParseError("unknown command '" + r.command + "'", r.line);
    if (!names.insert(r.name).second) throw RecipeParseError("duplicate recipe name '" + r.name + "'", r.line);
}

std::string scalar_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_float() && v.get<double>() == std::trunc(v.get<double>()) && std::abs(v.get<double>()) < 1e15) {
        return std::to_string(static_cast<long long>(v.get<double>()));
    }
    return v.dump();
}

std::size_t line_of(const std::string& text, std::size_t byte) {
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(std::min(byte, text.size())), '\n'));
}

std::vector<RunRecipe> parse_json_recipes(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw RecipeParseError(std::string("invalid JSON: ") + e.what(), line_of(text, e.byte));
    }
    if (doc.is_object() && doc.contains("recipes")) doc = doc["recipes"];
    if (!doc.is_array()) throw RecipeParseError("JSON recipes must be an array", 1);
    std::vector<RunRecipe> out;
    std::set<std::string> names;
    for (const auto& item : doc) {
        RunRecipe r;
        r.line = 1;
        if (!item.is_object()) throw RecipeParseError("JSON recipe must be an object", 1);
        r.name = item.value("name", "");
        r.command = item.value("command", "");
        if (item.contains("parameters")) {
            for (const auto& [k, v] : item["parameters"].items()) r.parameters.emplace_back(k, scalar_text(v));
        }
        if (item.contains("expected")) {
            for (const auto& [k, v] : item["expected"].items()) {
                Expectation e;
                e.field = k;
                e.line = 1;
                if (v.is_object()) {
                    e.value = v.at("value");
                    e.abs_tol = v.value("abs", 0.0);
                    e.rel_tol = v.value("rel", 0.0);
                    e.bound = v.value("bound", "");
                    if (!e.bound.empty() && e.bound != "<" && e.bound != "<=" && e.bound != ">" && e.bound != ">=")
                        throw RecipeParseError("unknown bound '" + e.bound + "'", 1);
                } else {
                    e.value = v;
                }
                r.expected.push_back(std::move(e));
            }
        }
        check_block(r, names);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

std::vector<RunRecipe> parse_recipes(std::istream& in) {
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string head = trim(text.substr(0, std::min<std::size_t>(text.size(), 64)));
    if (!head.empty() && (head.front() == '[' || head.front() == '{')) return parse_json_recipes(text);

    std::vector<RunRecipe> out;
    std::set<std::string> names;
    std::optional<RunRecipe> current;
    auto close = [&] {
        if (!current) return;
        check_block(*current, names);
        out.push_back(std::move(*current));
        current.reset();
    };

    std::istringstream lines(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(lines, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty()) {
            close();
            continue;
        }
        if (line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw RecipeParseError("expected 'key = value'", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw RecipeParseError("empty key", line_no);
        if (!current) {
            current.emplace();
            current->line = line_no;
        }
        if (key == "name") {
            current->name = value;
        } else if (key == "command") {
            current->command = value;
        } else if (key.rfind("expect.", 0) == 0) {
            current->expected.push_back(parse_expectation(key.substr(7), value, line_no));
        } else {
            current->parameters.emplace_back(key, value);
        }
    }
    close();
    return out;
}

std::optional<json> lookup(const json& summary, const std::string& path) {
    const json* node = &summary;
    std::istringstream parts(path);
    std::string part;
    while (std::getline(parts, part, '.')) {
        std::string key = part;
        std::optional<std::size_t> index;
        if (const auto br = part.find('['); br != std::string::npos) {
            const auto close = part.find(']', br);
            if (close == std::string::npos) return std::nullopt;
            key = part.substr(0, br);
            try {
                index = std::stoul(part.substr(br + 1, close - br - 1));
            } catch (const std::exception&) {
                return std::nullopt;
            }
        }
        if (!key.empty()) {
            if (!node->is_object() || !node->contains(key)) return std::nullopt;
            node = &(*node)[key];
        }
        if (index) {
            if (!node->is_array() || *index >= node->size()) return std::nullopt;
            node = &(*node)[*index];
        }
    }
    return *node;
}

bool matches(const Expectation& e, const json& actual) {
    if (e.value.is_number()) {
        if (!actual.is_number()) return false;
        const double want = e.value.get<double>();
        const double got = actual.get<double>();
        if (e.bound == "<") return got < want;
        if (e.bound == "<=") return got <= want;
        if (e.bound == ">") return got > want;
        if (e.bound == ">=") return got >= want;
        return std::abs(got - want) <= e.abs_tol + e.rel_tol * std::abs(want);
    }
    return scalar_text(actual) == scalar_text(e.value);
}

bool RecipeReport::all_pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
}

RecipeReport run_recipes(const std::vector<RunRecipe>& recipes, std::size_t jobs) {
    std::vector<std::vector<CheckRow>> per_recipe(recipes.size());

    auto execute = [&](std::size_t idx) {
        const RunRecipe& r = recipes[idx];
        std::vector<std::string> args{r.command};
        for (const auto& [k, v] : r.parameters) {
            if (v == "true") {
                args.push_back("--" + k);
            } else if (v != "false") {
                args.push_back("--" + k);
                args.push_back(v);
            }
        }
        std::ostringstream out, err;
        Outcome outcome = run(args, out, err);
        outcome.summary["exit_code"] = outcome.exit_code;

        std::vector<Expectation> expected = r.expected;
        const bool explicit_exit = std::any_of(expected.begin(), expected.end(),
                                               [](const Expectation& e) { return e.field == "exit_code"; });
        if (!explicit_exit) expected.insert(expected.begin(), Expectation{"exit_code", 0, 0.0, 0.0, r.line, ""});

        for (const auto& e : expected) {
            CheckRow row;
            row.recipe = r.name;
            row.field = e.field;
            row.expected = (e.bound.empty() ? "" : e.bound + " ") + scalar_text(e.value);
            if (!e.bound.empty()) row.tolerance = "bound";
            if (e.abs_tol > 0.0) row.tolerance = "abs " + scalar_text(e.abs_tol);
            if (e.rel_tol > 0.0) row.tolerance += (row.tolerance.empty() ? "" : ", ") + std::string("rel ") + scalar_text(e.rel_tol);
            if (const auto got = lookup(outcome.summary, e.field)) {
                row.actual = scalar_text(*got);
                row.pass = matches(e, *got);
            } else {
                row.actual = outcome.summary.contains("error") ? "error: " + scalar_text(outcome.summary["error"])
                                                               : "<missing>";
            }
            per_recipe[idx].push_back(std::move(row));
        }
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < recipes.size(); i = next++) execute(i);
    };
    const std::size_t threads = std::min(jobs, recipes.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::vector<std::size_t> order(recipes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return recipes[a].name < recipes[b].name; });

    RecipeReport report;
    report.recipes = recipes.size();
    for (std::size_t i : order) {
        for (auto& row : per_recipe[i]) report.rows.push_back(std::move(row));
    }
    return report;
}

void print_report(std::ostream& out, const RecipeReport& report) {
    std::size_t w_recipe = 6, w_field = 5, w_exp = 8, w_act = 6, w_tol = 9;
    for (const auto& r : report.rows) {
        w_tol = std::max(w_tol, r.tolerance.size());
        w_recipe = std::max(w_recipe, r.recipe.size());
        w_field = std::max(w_field, r.field.size());
        w_exp = std::max(w_exp, r.expected.size());
        w_act = std::max(w_act, std::min<std::size_t>(r.actual.size(), 40));
    }
    auto cell = [&](const std::string& s, std::size_t w) { out << std::left << std::setw(static_cast<int>(w)) << s << "  "; };
    cell("recipe", w_recipe);
    cell("field", w_field);
    cell("expected", w_exp);
    cell("actual", w_act);
    cell("tolerance", w_tol);
    out << "result\n";
    std::size_t passed = 0;
    for (const auto& r : report.rows) {
        cell(r.recipe, w_recipe);
        cell(r.field, w_field);
        cell(r.expected, w_exp);
        cell(r.actual, w_act);
        cell(r.tolerance.empty() ? "exact" : r.tolerance, w_tol);
        out << (r.pass ? "PASS" : "FAIL") << '\n';
        passed += r.pass ? 1 : 0;
    }
    out << passed << "/" << report.rows.size() << " checks passed across " << report.recipes << " recipes\n";
}

json to_json(const RecipeReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"recipe", r.recipe},
                        {"field", r.field},
                        {"expected", r.expected},
                        {"actual", r.actual},
                        {"tolerance", r.tolerance},
                        {"pass", r.pass}});
    }
    return {{"recipes", report.recipes}, {"all_pass", report.all_pass()}, {"rows", rows}};
}

}  // namespace sunflower::cli
