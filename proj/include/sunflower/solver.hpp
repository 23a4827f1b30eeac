#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sunflower/errors.hpp"

namespace sunflower {

/// One instance of the fractional sunflower equation
///   (tau/l) D^{2a} x + D^a x = -(m/l) sin(x(t - tau)).
struct SystemParams {
    double l = 1.0;
    double m = 1.0;
    double alpha = 1.0;
    double tau = 1.0;

    /// Throws DomainError unless l, m, tau > 0 and 0 < alpha <= 1.
    void validate() const;
};

struct HistorySample {
    double t;
    double x;
};

/// History on (-tau, 0] plus the derivative at 0.
struct InitialData {
    double history_value = 0.0;
    double x0 = 0.0;
    /// Only read when alpha >= 1/2.
    std::optional<double> x0_prime;
    /// Optional tabulated history, linearly interpolated onto the grid. Overrides history_value and x0.
    std::vector<HistorySample> table;

    static InitialData constant(double value, std::optional<double> x0_prime = std::nullopt) {
        return InitialData{value, value, x0_prime, {}};
    }
    static InitialData tabulated(std::vector<HistorySample> samples, std::optional<double> x0_prime = std::nullopt);

    /// History value at t in [-tau, 0].
    double at(double t) const;
};

enum class RhsKind { NonlinearSine, LinearNearX1, LinearNearX2 };

std::string_view to_string(RhsKind kind);
RhsKind rhs_from_string(std::string_view name);

/// Coefficient used in the z-predictor: Gamma(alpha+2) (consistent with the
/// rest of the scheme) or the literal alpha+2.
enum class PredictorCoefficient { Gamma, Literal };

struct SolverConfig {
    std::size_t k = 100;  ///< substeps per delay, h = tau / k
    double T = 100.0;     ///< final time
    std::size_t corrector_sweeps = 1;
    PredictorCoefficient z_coefficient = PredictorCoefficient::Gamma;
    double divergence_cutoff = 1e8;

    double step(const SystemParams& p) const { return p.tau / static_cast<double>(k); }
    /// N = round(T / h), at least 1.
    std::size_t steps(const SystemParams& p) const;
    void validate() const;
};

/// Uniformly sampled solution. Sample i sits at grid index first_index + i,
/// i.e. at time (first_index + i) * h. A full run starts at first_index = -k.
struct Trajectory {
    SystemParams params;
    SolverConfig config;
    RhsKind rhs = RhsKind::NonlinearSine;
    long first_index = 0;
    double h = 0.0;
    /// x'(0) used by the slope term; 0 when alpha < 1/2.
    double x0_prime = 0.0;
    std::vector<double> t;
    std::vector<double> x;

    std::size_t size() const noexcept { return x.size(); }
    bool empty() const noexcept { return x.empty(); }
    /// Number of post-history steps N (grid index of the last sample).
    long last_index() const noexcept { return first_index + static_cast<long>(x.size()) - 1; }
};

/// Raised when |x| exceeds the cutoff or turns non-finite. Carries the
/// solution computed so far.
class DivergenceError : public Error {
public:
    DivergenceError(std::size_t step, Trajectory partial);
    std::size_t step() const noexcept { return step_; }
    const Trajectory& partial() const noexcept { return partial_; }

private:
    std::size_t step_;
    Trajectory partial_;
};

Trajectory integrate(const SystemParams& params, const InitialData& init, const SolverConfig& config,
                     RhsKind rhs = RhsKind::NonlinearSine);

/// (x(t - tau), x(t)) for every grid time t >= 0 whose delayed sample is stored.
std::vector<std::pair<double, double>> delayed_pairs(const Trajectory& traj);

/// Last ceil(fraction * N) samples; times preserved.
Trajectory tail(const Trajectory& traj, double fraction);

/// `t,x` CSV preceded by `#` metadata lines.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, std::string_view tool_version);
void write_pairs_csv(std::ostream& out, const std::vector<std::pair<double, double>>& pairs,
                     const Trajectory& source, std::string_view tool_version);
/// Reads back the numeric body of a trajectory CSV (metadata lines skipped).
std::vector<std::pair<double, double>> read_csv_columns(std::istream& in);

}  // namespace sunflower
