#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sunflower/solver.hpp"

namespace sunflower {

/// (l, m, alpha) without the delay: a point of the lm-plane at a given order.
struct PlaneParams {
    double l = 1.0;
    double m = 1.0;
    double alpha = 1.0;

    void validate() const;
};

/// Purely imaginary characteristic root i*v reached at delay tau_star.
struct CrossingPoint {
    double v = 0.0;
    double tau_star = 0.0;
};

/// Unique positive root v of l^2 v^{2a} + tau^2 v^{4a} + 2 l tau cos(a pi/2) v^{3a} - m^2 = 0,
/// where tau_coeff is the delay appearing in the characteristic coefficients.
double crossing_frequency(const PlaneParams& p, double tau_coeff);

/// Crossing frequency and the smallest positive delay tau_star = g(tau_coeff) at which it is reached.
CrossingPoint critical_crossing(const PlaneParams& p, double tau_coeff);

/// g(tau): the critical delay as a function of the delay in the coefficients.
double critical_delay_g(const PlaneParams& p, double tau_coeff);

/// Largest violation of the real/imaginary boundary equations, scaled by l/m
/// (i.e. |C - cos(v tau*)| and |S - sin(v tau*)|).
double boundary_residual(const PlaneParams& p, double tau_coeff, const CrossingPoint& c);

enum class Classification { StableForAll, SingleStableRegion, StabilitySwitch, AlwaysUnstable };

std::string_view to_string(Classification c);

struct ScanOptions {
    double T_max = 200.0;
    std::size_t grid_points = 20000;
    /// Worker threads for the grid evaluation; 0 = hardware concurrency.
    std::size_t threads = 0;
};

struct StabilityVerdict {
    Classification classification = Classification::StableForAll;
    std::vector<double> critical_delays;
    double scan_horizon = 0.0;
    /// Set when three or more fixed points of g were found.
    bool multiplicity_warning = false;
    PlaneParams params;
    std::optional<double> tau;  ///< delay, for verdicts that depend on it (x2)
};

/// Fixed points of g(tau) = tau on (0, T_max], located by a grid sign-change scan and bisection.
/// Throws DegenerateCaseError on a non-transversal contact.
StabilityVerdict classify_x1(const PlaneParams& p, const ScanOptions& scan = {});

struct X2Verdict {
    StabilityVerdict verdict;
    double witness = 0.0;  ///< real positive characteristic root
    double residual = 0.0;
};

/// Real positive root of (tau/l) lambda^{2a} + lambda^a - (m/l) e^{-lambda tau} = 0 for tau >= 0.
double x2_real_root(const PlaneParams& p, double tau, double* residual = nullptr);

/// The equilibria (2n+1)pi are unstable for every delay; returns the witness root.
X2Verdict classify_x2(const SystemParams& params);

struct ComplexRoot {
    std::complex<double> lambda;
    double residual = 0.0;
    std::size_t iterations = 0;
};

/// H(lambda) = (tau/l) lambda^{2a} + lambda^a + sign (m/l) e^{-lambda tau}; sign = +1 near 2n pi, -1 near (2n+1) pi.
std::complex<double> characteristic(const SystemParams& p, std::complex<double> lambda, int sign);
std::complex<double> characteristic_derivative(const SystemParams& p, std::complex<double> lambda, int sign);

/// Damped Newton on the characteristic function, principal-branch powers.
ComplexRoot refine_complex_root(const SystemParams& params, std::complex<double> seed, int sign,
                                std::size_t max_iterations = 200);

nlohmann::json to_json(const StabilityVerdict& v);
nlohmann::json to_json(const X2Verdict& v);

/// `tau,g_tau` CSV over [0, T_max].
void write_g_curve_csv(std::ostream& out, const PlaneParams& p, const ScanOptions& scan,
                       std::string_view tool_version);

}  // namespace sunflower
