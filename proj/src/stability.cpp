#include "sunflower/stability.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <string>

#include "sunflower/frac_core.hpp"
#include "sunflower/parallel.hpp"

namespace sunflower {
namespace {

constexpr double kPi = std::numbers::pi;

struct BoundaryTerms {
    double w;  // v^alpha
    double v;
    double cos_part;  // C = cos(v tau*)
    double sin_part;  // S = sin(v tau*)
};

BoundaryTerms boundary_terms(const PlaneParams& p, double tau_coeff) {
    const double w = std::pow(crossing_frequency(p, tau_coeff), p.alpha);
    BoundaryTerms b{};
    b.w = w;
    b.v = std::pow(w, 1.0 / p.alpha);
    const double a = p.alpha * kPi;
    b.cos_part = -(tau_coeff * w * w * std::cos(a) + p.l * w * std::cos(a / 2.0)) / p.m;
    b.sin_part = (tau_coeff * w * w * std::sin(a) + p.l * w * std::sin(a / 2.0)) / p.m;
    return b;
}

double bisect(auto&& f, double lo, double hi, double f_lo, double tol) {
    for (int it = 0; it < 400 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (f_lo < 0.0)) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Minimiser of f on [a, b] by golden-section search.
double golden_min(auto&& f, double a, double b, int iterations = 80) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iterations && b - a > 1e-13 * std::max(1.0, std::abs(b)); ++i) {
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
    return fc < fd ? c : d;
}

}  // namespace

void PlaneParams::validate() const {
    if (!(l > 0.0) || !std::isfinite(l)) throw DomainError("parameter l must be positive");
    if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("parameter m must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("order alpha must lie in (0, 1]");
}

double crossing_frequency(const PlaneParams& p, double tau_coeff) {
    p.validate();
    if (!(tau_coeff >= 0.0) || !std::isfinite(tau_coeff)) throw DomainError("delay coefficient must be non-negative");
    const double c3 = 2.0 * p.l * tau_coeff * std::cos(p.alpha * kPi / 2.0);
    const double t2 = tau_coeff * tau_coeff;
    const double l2 = p.l * p.l;
    const double m2 = p.m * p.m;
    // F is increasing on w > 0 with F(0) = -m^2 and F(m/l) >= 0.
    auto F = [&](double w) { return ((t2 * w + c3) * w + l2) * w * w - m2; };
    double lo = 0.0, hi = p.m / p.l;
    while (F(hi) < 0.0) hi *= 2.0;
    for (int it = 0; it < 2000; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (F(mid) < 0.0 ? lo : hi) = mid;
    }
    const double w = std::abs(F(lo)) < std::abs(F(hi)) ? lo : hi;
    return std::pow(w, 1.0 / p.alpha);
}

CrossingPoint critical_crossing(const PlaneParams& p, double tau_coeff) {
    const BoundaryTerms b = boundary_terms(p, tau_coeff);
    const double radius = b.cos_part * b.cos_part + b.sin_part * b.sin_part;
    if (std::abs(radius - 1.0) > 1e-9) {
        throw Error("boundary terms off the unit circle (|C|^2+|S|^2 = " + std::to_string(radius) + ")");
    }
    double theta = std::atan2(b.sin_part, b.cos_part);
    if (theta < 0.0) theta += 2.0 * kPi;
    return {b.v, theta / b.v};
}

double critical_delay_g(const PlaneParams& p, double tau_coeff) { return critical_crossing(p, tau_coeff).tau_star; }

double boundary_residual(const PlaneParams& p, double tau_coeff, const CrossingPoint& c) {
    const double a = p.alpha * kPi;
    const double va = std::pow(c.v, p.alpha);
    const double v2a = va * va;
    // Real and imaginary parts of (tau/l)(iv)^{2a} + (iv)^a + (m/l) e^{-iv tau*}, scaled by l/m.
    const double re = (tau_coeff * v2a * std::cos(a) + p.l * va * std::cos(a / 2.0)) / p.m + std::cos(c.v * c.tau_star);
    const double im = (tau_coeff * v2a * std::sin(a) + p.l * va * std::sin(a / 2.0)) / p.m - std::sin(c.v * c.tau_star);
    return std::max(std::abs(re), std::abs(im));
}

std::string_view to_string(Classification c) {
    switch (c) {
        case Classification::StableForAll: return "StableForAll";
        case Classification::SingleStableRegion: return "SingleStableRegion";
        case Classification::StabilitySwitch: return "StabilitySwitch";
        case Classification::AlwaysUnstable: return "AlwaysUnstable";
    }
    return "?";
}

StabilityVerdict classify_x1(const PlaneParams& p, const ScanOptions& scan) {
    p.validate();
    if (!(scan.T_max > 0.0)) throw DomainError("scan horizon T_max must be positive");
    if (scan.grid_points < 1000) throw DomainError("scan needs at least 1000 grid points");

    const std::size_t n = scan.grid_points;
    const double step = scan.T_max / static_cast<double>(n);
    auto f = [&](double tau) { return critical_delay_g(p, tau) - tau; };

    std::vector<double> values(n + 1);
    parallel_for(n + 1, scan.threads, [&](std::size_t i) { values[i] = f(step * static_cast<double>(i)); });

    constexpr double kTol = 1e-9;
    std::vector<double> roots;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = step * static_cast<double>(i), b = step * static_cast<double>(i + 1);
        if (values[i] == 0.0 && i > 0) {
            roots.push_back(a);
        } else if (values[i] * values[i + 1] < 0.0) {
            roots.push_back(bisect(f, a, b, values[i], kTol));
        }
    }
    if (values[n] == 0.0) roots.push_back(scan.T_max);

    // Local minima of |g - tau| without a sign change: either a pair of roots the grid
    // stepped over, or a tangential contact.
    for (std::size_t i = 1; i < n; ++i) {
        const double prev = values[i - 1], cur = values[i], next = values[i + 1];
        if (prev == 0.0 || cur == 0.0 || next == 0.0) continue;
        if ((prev < 0.0) != (cur < 0.0) || (cur < 0.0) != (next < 0.0)) continue;
        if (std::abs(cur) > std::abs(prev) || std::abs(cur) > std::abs(next)) continue;
        const double sign = cur < 0.0 ? -1.0 : 1.0;
        const double a = step * static_cast<double>(i - 1), b = step * static_cast<double>(i + 1);
        const double t_min = golden_min([&](double t) { return sign * f(t); }, a, b);
        const double f_min = f(t_min);
        if ((f_min < 0.0) != (cur < 0.0) && f_min != 0.0) {
            roots.push_back(bisect(f, a, t_min, prev, kTol));
            roots.push_back(bisect(f, t_min, b, f_min, kTol));
        } else if (std::abs(f_min) < 1e-7) {
            throw DegenerateCaseError("g(tau) touches tau without crossing near tau = " + std::to_string(t_min), t_min);
        }
    }

    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(), [&](double x, double y) { return y - x < 10 * kTol; }),
                roots.end());
    roots.erase(std::remove_if(roots.begin(), roots.end(), [](double r) { return r <= 0.0; }), roots.end());

    StabilityVerdict verdict;
    verdict.params = p;
    verdict.scan_horizon = scan.T_max;
    verdict.critical_delays = roots;
    switch (roots.size()) {
        case 0: verdict.classification = Classification::StableForAll; break;
        case 1: verdict.classification = Classification::SingleStableRegion; break;
        default:
            verdict.classification = Classification::StabilitySwitch;
            verdict.multiplicity_warning = roots.size() > 2;
    }
    return verdict;
}

double x2_real_root(const PlaneParams& p, double tau, double* residual) {
    p.validate();
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw DomainError("delay must be non-negative");
    auto P = [&](double lambda) {
        const double la = std::pow(lambda, p.alpha);
        return (tau / p.l) * la * la + la - (p.m / p.l) * std::exp(-lambda * tau);
    };
    double hi = 1.0;
    while (P(hi) <= 0.0) hi *= 2.0;
    double lo = 0.0;
    for (int it = 0; it < 2000; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (P(mid) < 0.0 ? lo : hi) = mid;
    }
    const double root = (lo > 0.0 && std::abs(P(lo)) < std::abs(P(hi))) ? lo : hi;
    if (residual) *residual = std::abs(P(root));
    return root;
}

X2Verdict classify_x2(const SystemParams& params) {
    params.validate();
    const PlaneParams plane{params.l, params.m, params.alpha};
    X2Verdict out;
    out.witness = x2_real_root(plane, params.tau, &out.residual);
    out.verdict.classification = Classification::AlwaysUnstable;
    out.verdict.params = plane;
    out.verdict.tau = params.tau;
    return out;
}

std::complex<double> characteristic(const SystemParams& p, std::complex<double> lambda, int sign) {
    const auto la = complex_power(lambda, p.alpha);
    const auto l2a = complex_power(lambda, 2.0 * p.alpha);
    return (p.tau / p.l) * l2a + la + static_cast<double>(sign) * (p.m / p.l) * std::exp(-lambda * p.tau);
}

std::complex<double> characteristic_derivative(const SystemParams& p, std::complex<double> lambda, int sign) {
    const auto la = complex_power(lambda, p.alpha);
    const auto l2a = complex_power(lambda, 2.0 * p.alpha);
    return (p.tau / p.l) * 2.0 * p.alpha * l2a / lambda + p.alpha * la / lambda -
           static_cast<double>(sign) * p.tau * (p.m / p.l) * std::exp(-lambda * p.tau);
}

ComplexRoot refine_complex_root(const SystemParams& params, std::complex<double> seed, int sign,
                                std::size_t max_iterations) {
    params.validate();
    if (sign != 1 && sign != -1) throw ArgumentError("sign must be +1 or -1");
    if (seed == std::complex<double>(0.0, 0.0)) throw DomainError("Newton seed must be non-zero");

    constexpr double kConverged = 1e-12;
    bool restarted = false;
    std::complex<double> lambda = seed;
    std::complex<double> H = characteristic(params, lambda, sign);
    for (std::size_t it = 0; it < max_iterations; ++it) {
        if (std::abs(H) < kConverged) return {lambda, std::abs(H), it};
        const std::complex<double> step = H / characteristic_derivative(params, lambda, sign);
        std::complex<double> next = lambda - step;
        std::complex<double> H_next = characteristic(params, next, sign);
        double scale = 1.0;
        for (int halving = 0; halving < 20 && !(std::abs(H_next) < std::abs(H)); ++halving) {
            scale *= 0.5;
            next = lambda - scale * step;
            H_next = characteristic(params, next, sign);
        }
        const bool crossed_cut = next.real() < 0.0 && ((next.imag() < 0.0) != (lambda.imag() < 0.0));
        if (crossed_cut && !restarted) {
            restarted = true;
            lambda = std::conj(seed);
            H = characteristic(params, lambda, sign);
            continue;
        }
        if (next == std::complex<double>(0.0, 0.0)) break;
        lambda = next;
        H = H_next;
    }
    if (std::abs(H) < kConverged) return {lambda, std::abs(H), max_iterations};
    throw IterationLimitError("Newton iteration did not converge (|H| = " + std::to_string(std::abs(H)) + ")", lambda);
}

nlohmann::json to_json(const StabilityVerdict& v) {
    nlohmann::json j{{"classification", std::string(to_string(v.classification))},
                     {"critical_delays", v.critical_delays},
                     {"scan_horizon", v.scan_horizon},
                     {"multiplicity_warning", v.multiplicity_warning},
                     {"params", {{"l", v.params.l}, {"m", v.params.m}, {"alpha", v.params.alpha}}}};
    if (v.tau) j["params"]["tau"] = *v.tau;
    return j;
}

nlohmann::json to_json(const X2Verdict& v) {
    auto j = to_json(v.verdict);
    j["equilibrium"] = "x2";
    j["witness_root"] = v.witness;
    j["witness_residual"] = v.residual;
    return j;
}

void write_g_curve_csv(std::ostream& out, const PlaneParams& p, const ScanOptions& scan,
                       std::string_view tool_version) {
    p.validate();
    out << "# sunflower " << tool_version << '\n';
    out << std::setprecision(17) << "# params l=" << p.l << " m=" << p.m << " alpha=" << p.alpha << '\n';
    out << "# scan T_max=" << scan.T_max << " grid_points=" << scan.grid_points << '\n';
    out << "tau,g_tau\n";
    const double step = scan.T_max / static_cast<double>(scan.grid_points);
    for (std::size_t i = 0; i <= scan.grid_points; ++i) {
        const double tau = step * static_cast<double>(i);
        out << tau << ',' << critical_delay_g(p, tau) << '\n';
    }
}

}  // namespace sunflower
