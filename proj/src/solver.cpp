#include "sunflower/solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <sstream>

#include "sunflower/frac_core.hpp"

namespace sunflower {
namespace {

double delayed_term(RhsKind kind, double x) {
    switch (kind) {
        case RhsKind::NonlinearSine: return std::sin(x);
        case RhsKind::LinearNearX1: return x;
        case RhsKind::LinearNearX2: return -x;
    }
    return 0.0;
}

// sum_{j=1}^{n} w[n-j] * v[j]
double lagged_dot(const std::vector<double>& w, const std::vector<double>& v, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    const double* wp = w.data();
    const double* vp = v.data();
    std::size_t j = 1;
    for (; j + 3 <= n; j += 4) {
        s0 += wp[n - j] * vp[j];
        s1 += wp[n - j - 1] * vp[j + 1];
        s2 += wp[n - j - 2] * vp[j + 2];
        s3 += wp[n - j - 3] * vp[j + 3];
    }
    for (; j <= n; ++j) s0 += wp[n - j] * vp[j];
    return (s0 + s1) + (s2 + s3);
}

Trajectory make_trajectory(const SystemParams& params, const SolverConfig& config, RhsKind rhs,
                           const std::vector<double>& history, const std::vector<double>& post,
                           std::size_t post_count, double slope) {
    Trajectory traj;
    traj.x0_prime = slope;
    traj.params = params;
    traj.config = config;
    traj.rhs = rhs;
    traj.h = config.step(params);
    const auto k = static_cast<long>(config.k);
    traj.first_index = -k;
    const std::size_t total = history.size() + post_count - 1;
    traj.t.reserve(total);
    traj.x.reserve(total);
    for (long i = -k; i < 0; ++i) {
        traj.t.push_back(static_cast<double>(i) * traj.h);
        traj.x.push_back(history[static_cast<std::size_t>(i + k)]);
    }
    for (std::size_t j = 0; j < post_count; ++j) {
        traj.t.push_back(static_cast<double>(j) * traj.h);
        traj.x.push_back(post[j]);
    }
    return traj;
}

void write_double(std::ostream& out, double v) { out << std::setprecision(17) << v; }

}  // namespace

void SystemParams::validate() const {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(l)) throw DomainError("parameter l must be positive");
    if (!positive(m)) throw DomainError("parameter m must be positive");
    if (!positive(tau)) throw DomainError("delay tau must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("order alpha must lie in (0, 1]");
}

InitialData InitialData::tabulated(std::vector<HistorySample> samples, std::optional<double> x0_prime) {
    if (samples.empty()) throw ArgumentError("tabulated history is empty");
    std::sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    InitialData init;
    init.table = std::move(samples);
    init.x0_prime = x0_prime;
    init.x0 = init.at(0.0);
    init.history_value = init.x0;
    return init;
}

double InitialData::at(double t) const {
    if (table.empty()) return t >= 0.0 ? x0 : history_value;
    if (t <= table.front().t) return table.front().x;
    if (t >= table.back().t) return table.back().x;
    auto hi = std::lower_bound(table.begin(), table.end(), t, [](const HistorySample& s, double v) { return s.t < v; });
    auto lo = hi - 1;
    const double w = (t - lo->t) / (hi->t - lo->t);
    return lo->x + w * (hi->x - lo->x);
}

std::string_view to_string(RhsKind kind) {
    switch (kind) {
        case RhsKind::NonlinearSine: return "sine";
        case RhsKind::LinearNearX1: return "linear-x1";
        case RhsKind::LinearNearX2: return "linear-x2";
    }
    return "?";
}

RhsKind rhs_from_string(std::string_view name) {
    if (name == "sine") return RhsKind::NonlinearSine;
    if (name == "linear-x1") return RhsKind::LinearNearX1;
    if (name == "linear-x2") return RhsKind::LinearNearX2;
    throw ArgumentError("unknown right-hand side '" + std::string(name) + "' (sine, linear-x1, linear-x2)");
}

std::size_t SolverConfig::steps(const SystemParams& p) const {
    const double n = std::round(T / step(p));
    return n < 1.0 ? 1 : static_cast<std::size_t>(n);
}

void SolverConfig::validate() const {
    if (k == 0) throw DomainError("k (substeps per delay) must be positive");
    if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("final time T must be positive");
    if (corrector_sweeps == 0) throw DomainError("corrector_sweeps must be positive");
    if (!(divergence_cutoff > 0.0)) throw DomainError("divergence cutoff must be positive");
}

DivergenceError::DivergenceError(std::size_t step, Trajectory partial)
    : Error("solution diverged at step " + std::to_string(step)), step_(step), partial_(std::move(partial)) {}

Trajectory integrate(const SystemParams& params, const InitialData& init, const SolverConfig& config, RhsKind rhs) {
    params.validate();
    config.validate();
    const double alpha = params.alpha;
    const bool with_slope = alpha >= 0.5;
    if (with_slope && !init.x0_prime) throw ArgumentError("x0_prime is required when alpha >= 1/2");
    const double slope = with_slope ? *init.x0_prime : 0.0;

    const std::size_t k = config.k;
    const std::size_t N = config.steps(params);
    const double h = config.step(params);
    const double l_over_tau = params.l / params.tau;
    const double m_over_tau = params.m / params.tau;

    const double ca = l_over_tau * std::pow(h, alpha) / gamma_fn(alpha + 2.0);
    const double cb = m_over_tau * std::pow(h, 2.0 * alpha) / gamma_fn(2.0 * alpha + 2.0);
    const double ca_z = config.z_coefficient == PredictorCoefficient::Gamma
                            ? ca
                            : l_over_tau * std::pow(h, alpha) / (alpha + 2.0);
    const double drift_coeff = params.l / (params.tau * gamma_fn(alpha + 1.0));

    const ConvolutionWeights wa(alpha, N);
    const ConvolutionWeights wb(2.0 * alpha, N);

    // history[i + k] = x_i for i = -k..0
    std::vector<double> history(k + 1);
    for (std::size_t i = 0; i <= k; ++i) {
        const double t = (static_cast<double>(i) - static_cast<double>(k)) * h;
        history[i] = init.at(t);
    }
    const double x0 = init.table.empty() ? init.x0 : init.at(0.0);
    history[k] = x0;

    std::vector<double> post(N + 1, 0.0);  // x_j, j = 0..N
    post[0] = x0;
    std::vector<double> delayed(N + 1, 0.0);  // f(x_{j-k}), j = 0..N
    for (std::size_t j = 0; j <= std::min(k, N); ++j) delayed[j] = delayed_term(rhs, history[j]);

    for (std::size_t n = 0; n < N; ++n) {
        const double t1 = static_cast<double>(n + 1) * h;
        double drift = x0 * (1.0 + drift_coeff * std::pow(t1, alpha));
        if (with_slope) drift += t1 * slope;

        const double sum_a = wa.first(n) * post[0] + lagged_dot(wa.interior_table(), post, n);
        const double sum_b = wb.first(n) * delayed[0] + lagged_dot(wb.interior_table(), delayed, n);
        const double xp = drift - ca * sum_a - cb * sum_b;

        const double f_new = delayed[n + 1];
        const double zp = -ca_z * xp - cb * f_new;
        double xc = xp - ca * (xp + zp) - cb * f_new;
        // further sweeps: x^c takes the place of x^p + z^p in the correction term
        for (std::size_t sweep = 1; sweep < config.corrector_sweeps; ++sweep) {
            xc = xp - ca * xc - cb * f_new;
        }

        if (!std::isfinite(xc) || std::abs(xc) > config.divergence_cutoff) {
            throw DivergenceError(n + 1, make_trajectory(params, config, rhs, history, post, n + 1, slope));
        }
        post[n + 1] = xc;
        if (n + 1 + k <= N) delayed[n + 1 + k] = delayed_term(rhs, xc);
    }
    return make_trajectory(params, config, rhs, history, post, N + 1, slope);
}

std::vector<std::pair<double, double>> delayed_pairs(const Trajectory& traj) {
    const std::size_t k = traj.config.k;
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t s = k; s < traj.size(); ++s) {
        if (traj.first_index + static_cast<long>(s) < 0) continue;
        pairs.emplace_back(traj.x[s - k], traj.x[s]);
    }
    if (pairs.empty()) throw ArgumentError("trajectory shorter than one delay");
    return pairs;
}

Trajectory tail(const Trajectory& traj, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ArgumentError("tail fraction must lie in (0, 1)");
    const long N = traj.last_index();
    if (N <= 0) throw ArgumentError("trajectory has no post-history samples");
    auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(N) * (1.0 - 1e-12)));
    count = std::min(count, traj.size());
    if (count == 0) throw ArgumentError("tail selection is empty");
    Trajectory out;
    out.params = traj.params;
    out.config = traj.config;
    out.rhs = traj.rhs;
    out.h = traj.h;
    const std::size_t start = traj.size() - count;
    out.first_index = traj.first_index + static_cast<long>(start);
    out.t.assign(traj.t.begin() + static_cast<long>(start), traj.t.end());
    out.x.assign(traj.x.begin() + static_cast<long>(start), traj.x.end());
    return out;
}

namespace {

void write_metadata(std::ostream& out, const Trajectory& traj, std::string_view tool_version) {
    const auto& p = traj.params;
    const auto& c = traj.config;
    out << "# sunflower " << tool_version << '\n';
    out << "# params l=";
    write_double(out, p.l);
    out << " m=";
    write_double(out, p.m);
    out << " alpha=";
    write_double(out, p.alpha);
    out << " tau=";
    write_double(out, p.tau);
    out << " x0prime=";
    write_double(out, traj.x0_prime);
    out << '\n';
    out << "# config k=" << c.k << " T=";
    write_double(out, c.T);
    out << " h=";
    write_double(out, traj.h);
    out << " corrector_sweeps=" << c.corrector_sweeps
        << " z_coefficient=" << (c.z_coefficient == PredictorCoefficient::Gamma ? "gamma" : "literal")
        << " rhs=" << to_string(traj.rhs) << '\n';
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, std::string_view tool_version) {
    write_metadata(out, traj, tool_version);
    out << "t,x\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        write_double(out, traj.t[i]);
        out << ',';
        write_double(out, traj.x[i]);
        out << '\n';
    }
}

void write_pairs_csv(std::ostream& out, const std::vector<std::pair<double, double>>& pairs, const Trajectory& source,
                     std::string_view tool_version) {
    write_metadata(out, source, tool_version);
    out << "x_delayed,x\n";
    for (const auto& [xd, x] : pairs) {
        write_double(out, xd);
        out << ',';
        write_double(out, x);
        out << '\n';
    }
}

std::vector<std::pair<double, double>> read_csv_columns(std::istream& in) {
    std::vector<std::pair<double, double>> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ArgumentError("malformed CSV row: " + line);
        rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    }
    return rows;
}

}  // namespace sunflower
