#include "sunflower/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "sunflower/bifurcation.hpp"
#include "sunflower/chaos.hpp"
#include "sunflower/recipe.hpp"
#include "sunflower/solver.hpp"
#include "sunflower/stability.hpp"

namespace sunflower::cli {
namespace {

using nlohmann::json;

struct SimFlags {
    double l = 14.0;
    double m = 5.6;
    double alpha = 0.85;
    double tau = 4.0;
    double history = 6.9;
    double x0prime = 2.5;
    std::size_t k = 100;
    double T = 400.0;
    std::string rhs = "sine";
    std::size_t sweeps = 1;
    bool literal_z = false;
    std::string out;
};

void add_sim_flags(CLI::App* cmd, SimFlags& f) {
    cmd->add_option("--l", f.l, "coefficient l (> 0, 1/time)")->capture_default_str();
    cmd->add_option("--m", f.m, "forcing coefficient m (> 0, 1/time)")->capture_default_str();
    cmd->add_option("--alpha", f.alpha, "fractional order alpha in (0, 1]")->capture_default_str();
    cmd->add_option("--tau", f.tau, "delay tau (> 0, time)")->capture_default_str();
    cmd->add_option("--history", f.history, "constant history x(t) on (-tau, 0] (rad)")->capture_default_str();
    cmd->add_option("--x0prime", f.x0prime, "x'(0), used when alpha >= 0.5 (rad/time)")->capture_default_str();
    cmd->add_option("--k", f.k, "steps per delay, h = tau/k (count)")->capture_default_str();
    cmd->add_option("--T", f.T, "final time (time)")->capture_default_str();
    cmd->add_option("--rhs", f.rhs, "right-hand side: sine | linear-x1 | linear-x2")->capture_default_str();
    cmd->add_option("--sweeps", f.sweeps, "corrector sweeps per step (count)")->capture_default_str();
    cmd->add_flag("--literal-z", f.literal_z, "use alpha+2 instead of Gamma(alpha+2) in the z predictor");
}

void require(bool ok, const std::string& flag, const std::string& what) {
    if (!ok) throw DomainError(flag + " " + what);
}

void validate_sim(const SimFlags& f) {
    require(f.l > 0.0 && std::isfinite(f.l), "--l", "must be positive");
    require(f.m > 0.0 && std::isfinite(f.m), "--m", "must be positive");
    require(f.alpha > 0.0 && f.alpha <= 1.0, "--alpha", "must lie in (0, 1]");
    require(f.tau > 0.0 && std::isfinite(f.tau), "--tau", "must be positive");
    require(std::isfinite(f.history), "--history", "must be finite");
    require(std::isfinite(f.x0prime), "--x0prime", "must be finite");
    require(f.k > 0, "--k", "must be positive");
    require(f.T > 0.0 && std::isfinite(f.T), "--T", "must be positive");
    require(f.sweeps > 0, "--sweeps", "must be positive");
}

SystemParams sim_params(const SimFlags& f) { return {f.l, f.m, f.alpha, f.tau}; }

SolverConfig sim_config(const SimFlags& f) {
    SolverConfig c;
    c.k = f.k;
    c.T = f.T;
    c.corrector_sweeps = f.sweeps;
    c.z_coefficient = f.literal_z ? PredictorCoefficient::Literal : PredictorCoefficient::Gamma;
    return c;
}

json sim_json(const SimFlags& f) {
    return {{"l", f.l},       {"m", f.m},         {"alpha", f.alpha}, {"tau", f.tau},
            {"history", f.history}, {"x0prime", f.x0prime}, {"k", f.k},   {"T", f.T},
            {"rhs", f.rhs},   {"sweeps", f.sweeps}, {"z_coefficient", f.literal_z ? "literal" : "gamma"}};
}

Trajectory simulate(const SimFlags& f) {
    validate_sim(f);
    return integrate(sim_params(f), InitialData::constant(f.history, f.x0prime), sim_config(f), rhs_from_string(f.rhs));
}

/// Writes `body` to the resolved path, or to `fallback` when no path was given.
void emit(const std::string& path, std::ostream& fallback, const std::string& body) {
    if (path.empty()) {
        fallback << body;
        return;
    }
    const std::string resolved = resolve_output_path(path);
    std::ofstream file(resolved, std::ios::binary);
    if (!file) throw ArgumentError("cannot open output file '" + resolved + "'");
    file << body;
}

double mean_abs_dev(const std::vector<double>& x, std::size_t from, std::size_t to, double ref) {
    double s = 0.0;
    for (std::size_t i = from; i < to; ++i) s += std::abs(x[i] - ref);
    return to > from ? s / static_cast<double>(to - from) : 0.0;
}

json trajectory_summary(const Trajectory& traj, double reference) {
    const auto k = static_cast<std::size_t>(-traj.first_index);
    const std::size_t post = traj.size() - k;
    const auto [lo, hi] = std::minmax_element(traj.x.begin() + static_cast<long>(k), traj.x.end());
    const std::size_t q = std::max<std::size_t>(1, post / 4);
    const double first = mean_abs_dev(traj.x, k, k + q, reference);
    const double last = mean_abs_dev(traj.x, traj.size() - q, traj.size(), reference);
    return {{"final_x", traj.x.back()},
            {"min_x", *lo},
            {"max_x", *hi},
            {"samples", traj.size()},
            {"reference", reference},
            {"first_quarter_mean_dev", first},
            {"last_quarter_mean_dev", last},
            {"final_distance", std::abs(traj.x.back() - reference)},
            {"departure_ratio", first > 0.0 ? last / first : 0.0}};
}

struct ClassifyFlags {
    double l = 1.0;
    double m = 1.0;
    double alpha = 0.5;
    std::string equilibrium = "x1";
    std::optional<double> tau;
    double tmax = 200.0;
    std::size_t grid = 20000;
    std::string out;
    std::string dump_curve;
};

struct CurveFlags {
    double alpha = 0.4;
    std::string which = "h2";
    std::string lrange = "0.5:2";
    std::size_t points = 8;
    double tmax = 200.0;
    std::size_t grid = 20000;
    bool parallel = false;
    std::string out;
    std::string meta;
};

struct MleFlags {
    double tail = 0.5;
    std::size_t dim = 3;
    std::size_t lag = 0;
    long theiler = -1;
    std::size_t evolve = 0;
    double threshold = 0.1;
};

struct CycleFlags {
    double tail = 0.5;
    std::optional<double> cluster_tol;
    std::optional<double> min_prominence;
    std::size_t window = 16;
    std::size_t min_maxima = 20;
};

std::pair<double, double> parse_range(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw DomainError("--lrange must look like lo:hi");
    try {
        return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
    } catch (const std::exception&) {
        throw DomainError("--lrange must look like lo:hi");
    }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

Outcome cmd_simulate(const SimFlags& f, std::optional<double> reference, std::ostream& out, std::ostream& err) {
    validate_sim(f);
    const double ref = reference.value_or(std::round(f.history / std::numbers::pi) * std::numbers::pi);
    Outcome outcome;
    Trajectory traj;
    try {
        traj = simulate(f);
    } catch (const DivergenceError& e) {
        err << "divergence at step " << e.step() << "; writing partial trajectory\n";
        traj = e.partial();
        outcome.exit_code = kDivergence;
        outcome.summary["divergence_step"] = e.step();
    }
    std::ostringstream body;
    write_trajectory_csv(body, traj, tool_version());
    emit(f.out, out, body.str());
    outcome.summary.update(trajectory_summary(traj, ref));
    outcome.summary["params"] = sim_json(f);
    return outcome;
}

Outcome cmd_classify(const ClassifyFlags& f, std::ostream& out) {
    require(f.l > 0.0 && std::isfinite(f.l), "--l", "must be positive");
    require(f.m > 0.0 && std::isfinite(f.m), "--m", "must be positive");
    require(f.alpha > 0.0 && f.alpha <= 1.0, "--alpha", "must lie in (0, 1]");
    require(f.tmax > 0.0 && std::isfinite(f.tmax), "--tmax", "must be positive");
    require(f.grid >= 1000, "--grid", "must be at least 1000");
    const PlaneParams plane{f.l, f.m, f.alpha};
    ScanOptions scan;
    scan.T_max = f.tmax;
    scan.grid_points = f.grid;

    json result;
    if (f.equilibrium == "x2") {
        require(f.tau.has_value(), "--tau", "is required for --equilibrium x2");
        require(*f.tau > 0.0 && std::isfinite(*f.tau), "--tau", "must be positive");
        result = to_json(classify_x2(SystemParams{f.l, f.m, f.alpha, *f.tau}));
    } else if (f.equilibrium == "x1") {
        const auto verdict = classify_x1(plane, scan);
        result = to_json(verdict);
        result["equilibrium"] = "x1";
        result["grid_points"] = f.grid;
        if (!f.dump_curve.empty()) {
            std::ostringstream curve;
            write_g_curve_csv(curve, plane, scan, tool_version());
            emit(f.dump_curve, out, curve.str());
        }
    } else {
        throw DomainError("--equilibrium must be x1 or x2");
    }
    result["version"] = tool_version();
    out << dump(result);
    if (!f.out.empty()) emit(f.out, out, dump(result));
    Outcome outcome;
    outcome.summary = result;
    const auto& delays = result["critical_delays"];
    outcome.summary["count"] = delays.size();
    if (!delays.empty()) outcome.summary["tau1"] = delays[0];
    if (delays.size() > 1) outcome.summary["tau2"] = delays[1];
    return outcome;
}

Outcome cmd_curve(const CurveFlags& f, std::ostream& out) {
    require(f.alpha > 0.0 && f.alpha <= 1.0, "--alpha", "must lie in (0, 1]");
    require(f.points >= 2, "--points", "must be at least 2");
    require(f.tmax > 0.0 && std::isfinite(f.tmax), "--tmax", "must be positive");
    require(f.grid >= 1000, "--grid", "must be at least 1000");
    const auto range = parse_range(f.lrange);
    require(range.first > 0.0 && range.second > range.first, "--lrange", "must satisfy 0 < lo < hi");
    CurveKind which;
    try {
        which = curve_from_string(f.which);
    } catch (const ArgumentError&) {
        throw DomainError("--which must be h1 or h2");
    }
    TraceOptions opts;
    opts.threshold.scan.T_max = f.tmax;
    opts.threshold.scan.grid_points = f.grid;
    opts.parallel = f.parallel;
    const auto curve = trace_curve(f.alpha, range, f.points, which, opts);

    std::ostringstream body;
    write_curve_csv(body, curve, tool_version());
    emit(f.out, out, body.str());
    json meta = curve_metadata(curve);
    meta["version"] = tool_version();
    meta["lrange"] = {range.first, range.second};
    meta["points"] = f.points;
    const std::string meta_path = !f.meta.empty() ? f.meta : (f.out.empty() ? std::string{} : f.out + ".json");
    if (!meta_path.empty()) emit(meta_path, out, dump(meta));

    Outcome outcome;
    outcome.summary = meta;
    json ls = json::array(), ms = json::array();
    for (const auto& [l, m] : curve.samples) {
        ls.push_back(l);
        ms.push_back(m);
    }
    outcome.summary["l"] = ls;
    outcome.summary["m"] = ms;
    return outcome;
}

Trajectory simulated_tail(const SimFlags& f, double fraction) {
    require(fraction > 0.0 && fraction < 1.0, "--tail", "must lie in (0, 1)");
    return tail(simulate(f), fraction);
}

Outcome cmd_mle(const SimFlags& f, const MleFlags& g, std::ostream& out) {
    validate_sim(f);
    require(g.dim >= 2, "--dim", "must be at least 2");
    require(g.threshold > 0.0, "--threshold", "must be positive");
    const Trajectory series = simulated_tail(f, g.tail);
    MleOptions opts;
    opts.embedding = EmbeddingConfig::defaults_for(sim_config(f));
    opts.embedding.dimension = g.dim;
    if (g.lag > 0) opts.embedding.lag = g.lag;
    if (g.theiler >= 0) opts.embedding.theiler_window = static_cast<std::size_t>(g.theiler);
    opts.evolve_steps = g.evolve > 0 ? g.evolve : opts.embedding.lag;
    opts.replace_threshold = g.threshold;
    const auto result = mle(series, opts);
    json j = to_json(result);
    j["params"] = sim_json(f);
    j["tail"] = g.tail;
    j["version"] = tool_version();
    emit(f.out, out, dump(j));
    return {kOk, j};
}

Outcome cmd_cycles(const SimFlags& f, const CycleFlags& g, std::ostream& out) {
    validate_sim(f);
    const Trajectory series = simulated_tail(f, g.tail);
    CycleOptions opts;
    opts.cluster_tol = g.cluster_tol;
    opts.min_prominence = g.min_prominence;
    opts.window = g.window;
    opts.min_maxima = g.min_maxima;
    const auto result = count_cycles(series, opts);
    json j = to_json(result);
    j["config"]["window"] = g.window;
    j["config"]["min_maxima"] = g.min_maxima;
    j["params"] = sim_json(f);
    j["tail"] = g.tail;
    j["version"] = tool_version();
    emit(f.out, out, dump(j));
    return {kOk, j};
}

Outcome cmd_attractor(const SimFlags& f, std::ostream& out) {
    const Trajectory traj = simulate(f);
    const auto pairs = delayed_pairs(traj);
    std::ostringstream body;
    write_pairs_csv(body, pairs, traj, tool_version());
    emit(f.out, out, body.str());
    double lo = pairs.front().second, hi = lo;
    for (const auto& [xd, x] : pairs) {
        lo = std::min({lo, x, xd});
        hi = std::max({hi, x, xd});
    }
    json j{{"pairs", pairs.size()}, {"x_min", lo}, {"x_max", hi}, {"x_range", hi - lo}, {"params", sim_json(f)}};
    return {kOk, j};
}

Outcome cmd_reproduce(const std::string& file, std::size_t jobs, const std::string& report_path, std::ostream& out,
                      std::ostream& err) {
    std::ifstream in(file);
    if (!in) {
        err << "cannot open recipe file '" << file << "'\n";
        return {kUsage, {}};
    }
    std::vector<RunRecipe> recipes;
    try {
        recipes = parse_recipes(in);
    } catch (const RecipeParseError& e) {
        err << file << ": " << e.what() << '\n';
        return {kUsage, {{"error", e.what()}, {"line", e.line()}}};
    }
    const auto report = run_recipes(recipes, std::max<std::size_t>(1, jobs));
    print_report(out, report);
    const json j = to_json(report);
    if (!report_path.empty()) emit(report_path, out, dump(j));
    return {report.all_pass() ? kOk : kRegressionFail, j};
}

}  // namespace

std::string tool_version() { return SUNFLOWER_VERSION; }

std::string resolve_output_path(const std::string& path) {
    namespace fs = std::filesystem;
    if (path.empty() || path == "-" || fs::path(path).is_absolute()) return path;
    if (const char* dir = std::getenv("SUNFLOWER_OUT_DIR"); dir && *dir) return (fs::path(dir) / path).string();
    return path;
}

Outcome run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fractional sunflower equation toolkit: simulation, stability, bifurcation and chaos diagnostics",
                 "sunflower"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version());

    SimFlags sim_simulate, sim_mle, sim_cycles, sim_attractor;
    std::optional<double> reference;
    ClassifyFlags classify;
    CurveFlags curve;
    MleFlags mle_flags;
    CycleFlags cycle_flags;
    std::string recipe_file, report_path;
    std::size_t jobs = 1;

    auto* simulate_cmd = app.add_subcommand("simulate", "Integrate the equation and write a t,x CSV");
    add_sim_flags(simulate_cmd, sim_simulate);
    simulate_cmd->add_option("--reference", reference,
                             "equilibrium used for the departure summary (default: nearest multiple of pi to --history)");
    simulate_cmd->add_option("--out", sim_simulate.out, "trajectory CSV path (default: standard output)");

    auto* classify_cmd = app.add_subcommand("classify", "Classify an equilibrium and print the verdict as JSON");
    classify_cmd->add_option("--l", classify.l, "coefficient l (> 0)")->required();
    classify_cmd->add_option("--m", classify.m, "forcing coefficient m (> 0)")->required();
    classify_cmd->add_option("--alpha", classify.alpha, "fractional order alpha in (0, 1]")->required();
    classify_cmd->add_option("--equilibrium", classify.equilibrium, "x1 (2n pi) or x2 ((2n+1) pi)")
        ->capture_default_str();
    classify_cmd->add_option("--tau", classify.tau, "delay (time); required for x2");
    classify_cmd->add_option("--tmax", classify.tmax, "scan horizon for g(tau) (time)")->capture_default_str();
    classify_cmd->add_option("--grid", classify.grid, "scan grid points (count)")->capture_default_str();
    classify_cmd->add_option("--out", classify.out, "also write the verdict JSON here");
    classify_cmd->add_option("--dump-curve", classify.dump_curve, "write the tau,g_tau CSV here (x1 only)");

    auto* curve_cmd = app.add_subcommand("curve", "Trace a bifurcation curve m = h(l) in the lm-plane");
    curve_cmd->add_option("--alpha", curve.alpha, "fractional order alpha")->capture_default_str();
    curve_cmd->add_option("--which", curve.which, "h2 (tangency, S/SS) or h1 (escape, SS/SSR)")->capture_default_str();
    curve_cmd->add_option("--lrange", curve.lrange, "l interval lo:hi")->capture_default_str();
    curve_cmd->add_option("--points", curve.points, "number of l samples (count)")->capture_default_str();
    curve_cmd->add_option("--tmax", curve.tmax, "scan horizon (time)")->capture_default_str();
    curve_cmd->add_option("--grid", curve.grid, "scan grid points (count)")->capture_default_str();
    curve_cmd->add_flag("--parallel", curve.parallel, "evaluate samples concurrently (no warm start)");
    curve_cmd->add_option("--out", curve.out, "curve CSV path (default: standard output)");
    curve_cmd->add_option("--meta", curve.meta, "metadata JSON path (default: <out>.json)");

    auto* mle_cmd = app.add_subcommand("mle", "Largest Lyapunov exponent of a simulated run (JSON)");
    add_sim_flags(mle_cmd, sim_mle);
    mle_cmd->add_option("--tail", mle_flags.tail, "fraction of the run kept after the transient")->capture_default_str();
    mle_cmd->add_option("--dim", mle_flags.dim, "embedding dimension (count)")->capture_default_str();
    mle_cmd->add_option("--lag", mle_flags.lag, "embedding lag (samples; 0 = k/4)")->capture_default_str();
    mle_cmd->add_option("--theiler", mle_flags.theiler, "Theiler window (samples; -1 = k)")->capture_default_str();
    mle_cmd->add_option("--evolve", mle_flags.evolve, "evolution steps per segment (samples; 0 = lag)")
        ->capture_default_str();
    mle_cmd->add_option("--threshold", mle_flags.threshold, "replacement threshold (fraction of attractor extent)")
        ->capture_default_str();
    mle_cmd->add_option("--out", sim_mle.out, "result JSON path (default: standard output)");

    auto* cycles_cmd = app.add_subcommand("cycles", "Count the asymptotic cycle multiplicity of a run (JSON)");
    add_sim_flags(cycles_cmd, sim_cycles);
    cycles_cmd->add_option("--tail", cycle_flags.tail, "fraction of the run analysed")->capture_default_str();
    cycles_cmd->add_option("--cluster-tol", cycle_flags.cluster_tol,
                           "peak clustering tolerance (rad; default 1e-2 of the tail range)");
    cycles_cmd->add_option("--min-prominence", cycle_flags.min_prominence,
                           "minimum peak prominence (rad; default 5e-2 of the tail range)");
    cycles_cmd->add_option("--window", cycle_flags.window, "number of trailing maxima clustered (count)")
        ->capture_default_str();
    cycles_cmd->add_option("--min-maxima", cycle_flags.min_maxima, "maxima required in the tail (count)")
        ->capture_default_str();
    cycles_cmd->add_option("--out", sim_cycles.out, "result JSON path (default: standard output)");

    auto* attractor_cmd = app.add_subcommand("attractor", "Write (x(t - tau), x(t)) pairs as CSV");
    add_sim_flags(attractor_cmd, sim_attractor);
    attractor_cmd->add_option("--out", sim_attractor.out, "pairs CSV path (default: standard output)");

    auto* reproduce_cmd = app.add_subcommand("reproduce", "Run a recipe file and compare against expected values");
    reproduce_cmd->add_option("recipe", recipe_file, "recipe file (key = value blocks or JSON)")->required();
    reproduce_cmd->add_option("--jobs", jobs, "recipes run concurrently (count)")->capture_default_str();
    reproduce_cmd->add_option("--out", report_path, "also write the report JSON here");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return {kOk, {}};
    } catch (const CLI::CallForVersion& e) {
        app.exit(e, out, err);
        return {kOk, {}};
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return {kUsage, {{"error", e.what()}}};
    }

    try {
        if (simulate_cmd->parsed()) return cmd_simulate(sim_simulate, reference, out, err);
        if (classify_cmd->parsed()) return cmd_classify(classify, out);
        if (curve_cmd->parsed()) return cmd_curve(curve, out);
        if (mle_cmd->parsed()) return cmd_mle(sim_mle, mle_flags, out);
        if (cycles_cmd->parsed()) return cmd_cycles(sim_cycles, cycle_flags, out);
        if (attractor_cmd->parsed()) return cmd_attractor(sim_attractor, out);
        if (reproduce_cmd->parsed()) return cmd_reproduce(recipe_file, jobs, report_path, out, err);
    } catch (const DivergenceError& e) {
        err << "error: " << e.what() << '\n';
        return {kDivergence, {{"error", e.what()}, {"divergence_step", e.step()}}};
    } catch (const InsufficientDataError& e) {
        err << "error: " << e.what() << '\n';
        return {kInsufficientData, {{"error", e.what()}}};
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return {kDomain, {{"error", e.what()}}};
    }
    err << app.help();
    return {kUsage, {}};
}

}  // namespace sunflower::cli
