#include "sunflower/bifurcation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <string>

#include "sunflower/parallel.hpp"

namespace sunflower {
namespace {

// Thresholds are located on the lattice m_j = exp(j * step) with step = log1p(rel_tol). The result is the
// first lattice point where the predicate holds, so it does not depend on the starting bracket.
double lattice_search(auto&& predicate, MBracket bracket, double rel_tol, bool true_above) {
    if (!(bracket.lo > 0.0) || !(bracket.hi > bracket.lo)) throw BracketError("bracket must satisfy 0 < lo < hi");
    const double step = std::log1p(rel_tol);
    auto at = [&](long long j) { return std::exp(static_cast<double>(j) * step); };
    long long lo = static_cast<long long>(std::floor(std::log(bracket.lo) / step));
    long long hi = static_cast<long long>(std::ceil(std::log(bracket.hi) / step));
    const bool p_lo = predicate(at(lo));
    const bool p_hi = predicate(at(hi));
    if (p_lo == p_hi) {
        throw BracketError("threshold predicate has the same value at m = " + std::to_string(at(lo)) + " and m = " +
                           std::to_string(at(hi)));
    }
    if (p_lo == true_above) throw BracketError("threshold predicate is reversed across the bracket");
    while (hi - lo > 1) {
        const long long mid = lo + (hi - lo) / 2;
        (predicate(at(mid)) == true_above ? hi : lo) = mid;
    }
    return at(hi);
}

void require_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("order alpha must lie in (0, 1]");
}

}  // namespace

std::string_view to_string(CurveKind kind) { return kind == CurveKind::H1 ? "h1" : "h2"; }

CurveKind curve_from_string(std::string_view name) {
    if (name == "h1" || name == "H1") return CurveKind::H1;
    if (name == "h2" || name == "H2") return CurveKind::H2;
    throw ArgumentError("unknown curve '" + std::string(name) + "' (h1, h2)");
}

double min_gap(const PlaneParams& p, const ScanOptions& scan) {
    const std::size_t n = scan.grid_points;
    const double step = scan.T_max / static_cast<double>(n);
    auto f = [&](double tau) { return critical_delay_g(p, tau) - tau; };
    std::vector<double> values(n);
    parallel_for(n, scan.threads, [&](std::size_t i) { values[i] = f(step * static_cast<double>(i + 1)); });
    const auto it = std::min_element(values.begin(), values.end());
    const auto i = static_cast<std::size_t>(it - values.begin());
    double a = step * static_cast<double>(i), b = std::min(scan.T_max, step * static_cast<double>(i + 2));
    // golden section on the bracketing cell pair
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    for (int k = 0; k < 80 && b - a > 1e-12; ++k) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    return std::min({*it, fc, fd});
}

double tangency_threshold_h2(double l, double alpha, MBracket bracket, const ThresholdOptions& options) {
    require_alpha(alpha);
    if (!(l > 0.0)) throw DomainError("parameter l must be positive");
    auto touches = [&](double m) { return min_gap(PlaneParams{l, m, alpha}, options.scan) <= 0.0; };
    return lattice_search(touches, bracket, options.tangency_rel_tol, true);
}

EscapeThreshold escape_threshold_h1(double l, double alpha, MBracket bracket, double T_max,
                                    const ThresholdOptions& options) {
    require_alpha(alpha);
    if (!(l > 0.0)) throw DomainError("parameter l must be positive");
    if (!(T_max > 0.0)) throw DomainError("horizon T_max must be positive");
    // true while a second fixed point still lies below the horizon
    auto second_below = [&](double m) { return critical_delay_g(PlaneParams{l, m, alpha}, T_max) - T_max > 0.0; };
    return {lattice_search(second_below, bracket, options.escape_rel_tol, false), T_max};
}

BifurcationCurve trace_curve(double alpha, std::pair<double, double> l_range, std::size_t n_points, CurveKind which,
                             const TraceOptions& options) {
    require_alpha(alpha);
    if (n_points < 2) throw ArgumentError("a curve needs at least 2 points");
    if (!(l_range.first > 0.0) || !(l_range.second > l_range.first)) {
        throw ArgumentError("l range must satisfy 0 < lo < hi");
    }
    if (alpha >= 0.5) throw DomainError("no S/SS/SSR bifurcation curves exist for alpha >= 1/2");
    if (which == CurveKind::H1 && alpha < 0.4) throw DomainError("the h1 curve requires 0.4 <= alpha < 1/2");

    BifurcationCurve curve;
    curve.alpha = alpha;
    curve.which = which;
    curve.options = options.threshold;
    curve.horizon = options.threshold.scan.T_max;

    std::vector<double> ls(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        ls[i] = l_range.first + (l_range.second - l_range.first) * static_cast<double>(i) /
                                    static_cast<double>(n_points - 1);
    }

    auto threshold = [&](double l, MBracket b) {
        return which == CurveKind::H2
                   ? tangency_threshold_h2(l, alpha, b, options.threshold)
                   : escape_threshold_h1(l, alpha, b, options.threshold.scan.T_max, options.threshold).m;
    };
    auto solve = [&](double l, MBracket b) -> std::optional<double> {
        for (std::size_t w = 0; w <= options.max_widenings; ++w) {
            try {
                return threshold(l, b);
            } catch (const BracketError&) {
                b.lo /= 2.0;
                b.hi *= 2.0;
            }
        }
        return std::nullopt;
    };
    // Cold bracket: the threshold scales roughly like l.
    auto cold = [](double l) { return MBracket{0.25 * l, 16.0 * l}; };

    std::vector<std::optional<double>> results(n_points);
    if (options.parallel) {
        parallel_for(n_points, options.threads, [&](std::size_t i) { results[i] = solve(ls[i], cold(ls[i])); });
    } else {
        std::optional<double> previous;
        for (std::size_t i = 0; i < n_points; ++i) {
            const MBracket b = previous ? MBracket{*previous * 0.8, *previous * 1.25 * (ls[i] / ls[i - 1])}
                                        : cold(ls[i]);
            results[i] = solve(ls[i], b);
            if (results[i]) previous = results[i];
        }
    }
    for (std::size_t i = 0; i < n_points; ++i) {
        if (results[i]) {
            curve.samples.emplace_back(ls[i], *results[i]);
        } else {
            curve.gaps.push_back(ls[i]);
        }
    }
    return curve;
}

nlohmann::json curve_metadata(const BifurcationCurve& curve) {
    return {{"alpha", curve.alpha},
            {"which", std::string(to_string(curve.which))},
            {"T_max", curve.horizon},
            {"grid_points", curve.options.scan.grid_points},
            {"tolerances",
             {{"tangency_rel_tol", curve.options.tangency_rel_tol},
              {"escape_rel_tol", curve.options.escape_rel_tol}}},
            {"gaps", curve.gaps}};
}

void write_curve_csv(std::ostream& out, const BifurcationCurve& curve, std::string_view tool_version) {
    out << "# sunflower " << tool_version << '\n';
    out << "# " << curve_metadata(curve).dump() << '\n';
    out << "l,m\n" << std::setprecision(17);
    for (const auto& [l, m] : curve.samples) out << l << ',' << m << '\n';
}

}  // namespace sunflower
