#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "json.hpp"

#include "sunflower/solver.hpp"

namespace sunflower {

struct EmbeddingConfig {
    std::size_t dimension = 3;
    std::size_t lag = 1;             ///< samples
    std::size_t theiler_window = 0;  ///< samples

    /// dimension 3, lag k/4, Theiler window k.
    static EmbeddingConfig defaults_for(const SolverConfig& config);
    void validate(std::size_t series_length) const;
};

/// Row-major point set, `dimension` coordinates per point.
struct EmbeddedPoints {
    std::size_t dimension = 0;
    std::vector<double> coords;

    std::size_t size() const noexcept { return dimension == 0 ? 0 : coords.size() / dimension; }
    const double* operator[](std::size_t i) const noexcept { return coords.data() + i * dimension; }
};

EmbeddedPoints embed(const std::vector<double>& series, const EmbeddingConfig& cfg);
EmbeddedPoints embed(const Trajectory& traj, const EmbeddingConfig& cfg);

/// Uniform-grid spatial hash over an embedded point set.
class NeighborIndex {
public:
    NeighborIndex(const EmbeddedPoints& points, double cell_size);

    /// Nearest point to `query` (a stored index) with |j - query| > exclusion and
    /// distance > min_distance. nullopt when no such point exists.
    std::optional<std::size_t> nearest(std::size_t query, std::size_t exclusion, double min_distance) const;

    /// Every stored index j with min_distance < |y_j - y_query| <= radius and |j - query| > exclusion.
    std::vector<std::size_t> within(std::size_t query, double radius, std::size_t exclusion,
                                    double min_distance) const;

    bool exhaustive() const noexcept { return exhaustive_; }

private:
    const EmbeddedPoints& points_;
    double cell_ = 1.0;
    bool exhaustive_ = true;
    std::vector<double> origin_;
    // cells sorted by key; each entry (key, point index)
    std::vector<std::pair<long long, std::size_t>> cells_;
    std::vector<long> cell_coord(const double* p) const;
    long long key(const std::vector<long>& c) const;
    template <class Visit>
    void visit_shell(const std::vector<long>& center, long radius, Visit&& visit) const;
};

double distance(const EmbeddedPoints& pts, std::size_t a, std::size_t b);

struct MleOptions {
    EmbeddingConfig embedding;
    std::size_t evolve_steps = 10;
    /// Replace the neighbour once separation exceeds this fraction of the attractor extent.
    double replace_threshold = 0.1;
    /// Candidates closer than this fraction of the extent are ignored.
    double min_separation = 1e-9;
    /// Largest angle (radians) accepted for an orientation-preserving replacement before widening.
    double max_angle = 0.3;
    /// Point sets smaller than this use exhaustive neighbour search.
    std::size_t exhaustive_below = 5000;
};

struct MleResult {
    double exponent = 0.0;         ///< 1 / time
    std::size_t pair_count = 0;  ///< neighbour replacements performed
    std::size_t segments = 0;    ///< fiducial/neighbour evolution segments accumulated
    double transient_discarded = 0.0;
    double evolved_time = 0.0;
    MleOptions options;
};

/// Largest Lyapunov exponent by fixed-evolution-time neighbour tracking (Wolf et al.).
MleResult mle(const Trajectory& traj, const MleOptions& options);

struct CycleOptions {
    /// Absolute clustering tolerance; nullopt -> 1e-2 * (max - min) of the tail.
    std::optional<double> cluster_tol;
    /// Maxima whose height above both neighbouring minima is below this are shoulders, not peaks.
    /// nullopt -> 5e-2 * (max - min) of the tail.
    std::optional<double> min_prominence;
    std::size_t min_maxima = 20;
    std::size_t window = 16;
};

struct CycleCount {
    std::optional<std::size_t> multiplicity;  ///< nullopt = aperiodic
    std::vector<double> distinct_maxima;      ///< cluster representatives, ascending
    std::size_t maxima_found = 0;
    double cluster_tol = 0.0;
    double min_prominence = 0.0;

    bool aperiodic() const noexcept { return !multiplicity.has_value(); }
};

struct LocalMaximum {
    double t;
    double x;
    double prominence;
};

/// Three-point maxima with parabolic refinement. Prominence is the height above the larger of the two
/// adjacent minima (edges use the series end values).
std::vector<LocalMaximum> local_maxima(const Trajectory& traj);

CycleCount count_cycles(const Trajectory& traj_tail, const CycleOptions& options = {});

nlohmann::json to_json(const MleResult& r);
nlohmann::json to_json(const CycleCount& c);
nlohmann::json to_json(const EmbeddingConfig& e);

}  // namespace sunflower
