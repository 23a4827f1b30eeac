#include "sunflower/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace sunflower {

EmbeddingConfig EmbeddingConfig::defaults_for(const SolverConfig& config) {
    EmbeddingConfig cfg;
    cfg.dimension = 3;
    cfg.lag = std::max<std::size_t>(1, config.k / 4);
    cfg.theiler_window = config.k;
    return cfg;
}

void EmbeddingConfig::validate(std::size_t series_length) const {
    if (dimension < 2) throw ArgumentError("embedding dimension must be at least 2");
    if (lag < 1) throw ArgumentError("embedding lag must be at least 1 sample");
    if (series_length <= dimension * lag + 10) {
        throw ArgumentError("series of " + std::to_string(series_length) + " samples is too short for dimension " +
                            std::to_string(dimension) + " and lag " + std::to_string(lag));
    }
}

EmbeddedPoints embed(const std::vector<double>& series, const EmbeddingConfig& cfg) {
    cfg.validate(series.size());
    EmbeddedPoints pts;
    pts.dimension = cfg.dimension;
    const std::size_t count = series.size() - (cfg.dimension - 1) * cfg.lag;
    pts.coords.reserve(count * cfg.dimension);
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t c = 0; c < cfg.dimension; ++c) pts.coords.push_back(series[i + c * cfg.lag]);
    }
    return pts;
}

EmbeddedPoints embed(const Trajectory& traj, const EmbeddingConfig& cfg) { return embed(traj.x, cfg); }

double distance(const EmbeddedPoints& pts, std::size_t a, std::size_t b) {
    const double* pa = pts[a];
    const double* pb = pts[b];
    double s = 0.0;
    for (std::size_t c = 0; c < pts.dimension; ++c) {
        const double d = pa[c] - pb[c];
        s += d * d;
    }
    return std::sqrt(s);
}

namespace {

constexpr long kGridBase = 128;  // cells per axis stay below this

bool far_enough(std::size_t a, std::size_t b, std::size_t exclusion) {
    return (a > b ? a - b : b - a) > exclusion;
}

}  // namespace

NeighborIndex::NeighborIndex(const EmbeddedPoints& points, double cell_size) : points_(points) {
    const std::size_t n = points.size();
    const std::size_t d = points.dimension;
    if (!(cell_size > 0.0) || d == 0 || d > 8 || n == 0) return;
    origin_.assign(d, std::numeric_limits<double>::infinity());
    std::vector<double> upper(d, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            origin_[c] = std::min(origin_[c], points[i][c]);
            upper[c] = std::max(upper[c], points[i][c]);
        }
    }
    for (std::size_t c = 0; c < d; ++c) {
        if ((upper[c] - origin_[c]) / cell_size >= static_cast<double>(kGridBase - 2)) return;
    }
    cell_ = cell_size;
    exhaustive_ = false;
    cells_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) cells_.emplace_back(key(cell_coord(points[i])), i);
    std::sort(cells_.begin(), cells_.end());
}

std::vector<long> NeighborIndex::cell_coord(const double* p) const {
    std::vector<long> c(points_.dimension);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = static_cast<long>(std::floor((p[i] - origin_[i]) / cell_));
    return c;
}

long long NeighborIndex::key(const std::vector<long>& c) const {
    long long k = 0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) k = k * kGridBase + *it;
    return k;
}

template <class Visit>
void NeighborIndex::visit_shell(const std::vector<long>& center, long radius, Visit&& visit) const {
    const std::size_t d = center.size();
    std::vector<long> offset(d, -radius);
    std::vector<long> cell(d);
    while (true) {
        long cheb = 0;
        bool inside = true;
        for (std::size_t c = 0; c < d; ++c) {
            cheb = std::max(cheb, std::labs(offset[c]));
            cell[c] = center[c] + offset[c];
            if (cell[c] < 0 || cell[c] >= kGridBase - 1) inside = false;
        }
        if (inside && cheb == radius) {
            const long long k = key(cell);
            auto range = std::equal_range(cells_.begin(), cells_.end(), std::pair<long long, std::size_t>{k, 0},
                                          [](const auto& a, const auto& b) { return a.first < b.first; });
            for (auto it = range.first; it != range.second; ++it) visit(it->second);
        }
        std::size_t c = 0;
        while (c < d && offset[c] == radius) offset[c++] = -radius;
        if (c == d) break;
        ++offset[c];
    }
}

std::optional<std::size_t> NeighborIndex::nearest(std::size_t query, std::size_t exclusion,
                                                  double min_distance) const {
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    auto consider = [&](std::size_t j) {
        if (!far_enough(j, query, exclusion)) return;
        const double dj = distance(points_, query, j);
        if (dj > min_distance && dj < best_d) {
            best_d = dj;
            best = j;
        }
    };
    if (exhaustive_) {
        for (std::size_t j = 0; j < points_.size(); ++j) consider(j);
        return best;
    }
    const auto center = cell_coord(points_[query]);
    for (long r = 0; r < kGridBase; ++r) {
        // Points in shell r + 1 are at least r * cell away.
        if (best && best_d <= static_cast<double>(r) * cell_) break;
        visit_shell(center, r, consider);
    }
    return best;
}

std::vector<std::size_t> NeighborIndex::within(std::size_t query, double radius, std::size_t exclusion,
                                               double min_distance) const {
    std::vector<std::size_t> out;
    auto consider = [&](std::size_t j) {
        if (!far_enough(j, query, exclusion)) return;
        const double dj = distance(points_, query, j);
        if (dj > min_distance && dj <= radius) out.push_back(j);
    };
    if (exhaustive_) {
        for (std::size_t j = 0; j < points_.size(); ++j) consider(j);
        return out;
    }
    const auto center = cell_coord(points_[query]);
    const long reach = std::min<long>(kGridBase, static_cast<long>(std::ceil(radius / cell_)));
    for (long r = 0; r <= reach; ++r) visit_shell(center, r, consider);
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

double angle_between(const EmbeddedPoints& pts, std::size_t origin, std::size_t a, std::size_t b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t c = 0; c < pts.dimension; ++c) {
        const double va = pts[a][c] - pts[origin][c];
        const double vb = pts[b][c] - pts[origin][c];
        dot += va * vb;
        na += va * va;
        nb += vb * vb;
    }
    if (na == 0.0 || nb == 0.0) return std::numbers::pi;
    return std::acos(std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0));
}

}  // namespace

MleResult mle(const Trajectory& traj, const MleOptions& options) {
    for (double v : traj.x) {
        if (!std::isfinite(v)) throw ArgumentError("trajectory contains non-finite samples");
    }
    if (options.evolve_steps == 0) throw ArgumentError("evolve_steps must be positive");
    if (!(options.replace_threshold > 0.0)) throw ArgumentError("replace_threshold must be positive");

    const EmbeddedPoints pts = embed(traj, options.embedding);
    const std::size_t count = pts.size();
    const auto [lo, hi] = std::minmax_element(traj.x.begin(), traj.x.end());
    const double extent = *hi - *lo;
    if (!(extent > 0.0)) throw InsufficientDataError("constant series has no attractor extent");

    const double scale_max = options.replace_threshold * extent;
    const double scale_min = options.min_separation * extent;
    const std::size_t theiler = options.embedding.theiler_window;
    const NeighborIndex index(pts, count < options.exhaustive_below ? 0.0 : extent / 64.0);

    MleResult result;
    result.options = options;
    result.transient_discarded = std::max(0.0, traj.t.empty() ? 0.0 : traj.t.front());

    std::size_t fiducial = 0;
    auto neighbour = index.nearest(fiducial, theiler, scale_min);
    if (!neighbour) throw InsufficientDataError("no admissible neighbour for the first fiducial point");
    double d_start = distance(pts, fiducial, *neighbour);

    double log_sum = 0.0;
    const std::size_t ev = options.evolve_steps;
    while (fiducial + ev < count) {
        if (*neighbour + ev >= count) {
            // Neighbour ran off the end of the series; pick a fresh one for the current fiducial point.
            neighbour = index.nearest(fiducial, theiler, scale_min);
            while (neighbour && *neighbour + ev >= count) {
                const auto candidates = index.within(fiducial, scale_max, theiler, scale_min);
                neighbour.reset();
                double best_d = std::numeric_limits<double>::infinity();
                for (std::size_t c : candidates) {
                    const double dc = distance(pts, fiducial, c);
                    if (c + ev < count && dc < best_d) {
                        best_d = dc;
                        neighbour = c;
                    }
                }
                break;
            }
            if (!neighbour) break;
            d_start = distance(pts, fiducial, *neighbour);
            ++result.pair_count;
        }
        fiducial += ev;
        const std::size_t evolved = *neighbour + ev;
        const double d_end = distance(pts, fiducial, evolved);
        if (d_start > 0.0 && d_end > 0.0) {
            log_sum += std::log(d_end / d_start);
            ++result.segments;
            result.evolved_time += static_cast<double>(ev) * traj.h;
        }

        if (d_end <= scale_max && d_end > scale_min && far_enough(evolved, fiducial, theiler) && evolved + ev < count) {
            neighbour = evolved;
            d_start = d_end;
            continue;
        }

        // Replacement: prefer the candidate that keeps the separation direction.
        std::optional<std::size_t> best;
        double radius = scale_max;
        double angle_limit = options.max_angle;
        for (int widen = 0; widen < 5 && !best; ++widen) {
            double best_angle = angle_limit;
            for (std::size_t c : index.within(fiducial, radius, theiler, scale_min)) {
                if (c + ev >= count) continue;
                const double a = angle_between(pts, fiducial, c, evolved);
                if (a <= best_angle) {
                    best_angle = a;
                    best = c;
                }
            }
            radius *= 2.0;
            angle_limit *= 2.0;
        }
        if (!best) best = index.nearest(fiducial, theiler, scale_min);
        if (!best) break;
        neighbour = best;
        d_start = distance(pts, fiducial, *best);
        ++result.pair_count;
    }

    if (result.pair_count < 10 || result.evolved_time <= 0.0) {
        throw InsufficientDataError("only " + std::to_string(result.pair_count) +
                                    " neighbour replacements performed; at least 10 are required");
    }
    result.exponent = log_sum / result.evolved_time;
    return result;
}

std::vector<LocalMaximum> local_maxima(const Trajectory& traj) {
    const auto& x = traj.x;
    std::vector<std::size_t> peaks;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        if (x[i] > x[i - 1] && x[i] >= x[i + 1]) peaks.push_back(i);
    }
    std::vector<LocalMaximum> out;
    out.reserve(peaks.size());
    for (std::size_t p = 0; p < peaks.size(); ++p) {
        const std::size_t i = peaks[p];
        const double left = x[i - 1], mid = x[i], right = x[i + 1];
        const double curvature = left - 2.0 * mid + right;
        double offset = 0.0;
        double peak = mid;
        if (curvature < 0.0) {
            offset = 0.5 * (left - right) / curvature;
            peak = mid - 0.25 * (left - right) * offset;
        }
        const std::size_t from = p == 0 ? 0 : peaks[p - 1];
        const std::size_t to = p + 1 == peaks.size() ? x.size() - 1 : peaks[p + 1];
        const double left_base = *std::min_element(x.begin() + static_cast<long>(from), x.begin() + static_cast<long>(i) + 1);
        const double right_base = *std::min_element(x.begin() + static_cast<long>(i), x.begin() + static_cast<long>(to) + 1);
        out.push_back({traj.t[i] + offset * traj.h, peak, peak - std::max(left_base, right_base)});
    }
    return out;
}

CycleCount count_cycles(const Trajectory& traj_tail, const CycleOptions& options) {
    if (traj_tail.size() < 3) throw InsufficientDataError("tail too short for maxima detection");
    const auto [lo, hi] = std::minmax_element(traj_tail.x.begin(), traj_tail.x.end());
    const double span = *hi - *lo;

    CycleCount result;
    result.cluster_tol = options.cluster_tol.value_or(1e-2 * span);
    result.min_prominence = options.min_prominence.value_or(5e-2 * span);

    std::vector<double> peaks;
    for (const auto& m : local_maxima(traj_tail)) {
        if (m.prominence >= result.min_prominence) peaks.push_back(m.x);
    }
    result.maxima_found = peaks.size();
    if (peaks.size() < options.min_maxima) {
        throw InsufficientDataError("found " + std::to_string(peaks.size()) + " maxima; need at least " +
                                    std::to_string(options.min_maxima));
    }

    const std::size_t window = std::min(options.window, peaks.size());
    const std::vector<double> recent(peaks.end() - static_cast<long>(window), peaks.end());

    // Single-linkage clustering of the sorted values.
    std::vector<std::size_t> order(window);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return recent[a] < recent[b]; });
    std::vector<std::size_t> label(window);
    std::vector<std::vector<double>> clusters;
    for (std::size_t r = 0; r < window; ++r) {
        const double v = recent[order[r]];
        if (r == 0 || v - recent[order[r - 1]] > result.cluster_tol) clusters.emplace_back();
        clusters.back().push_back(v);
        label[order[r]] = clusters.size() - 1;
    }
    for (const auto& c : clusters) {
        result.distinct_maxima.push_back(std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size()));
    }

    const std::size_t period = clusters.size();
    bool periodic = 2 * period <= window;
    for (std::size_t i = period; periodic && i < window; ++i) periodic = label[i] == label[i - period];
    if (periodic) result.multiplicity = period;
    return result;
}

nlohmann::json to_json(const EmbeddingConfig& e) {
    return {{"dimension", e.dimension}, {"lag", e.lag}, {"theiler_window", e.theiler_window}};
}

nlohmann::json to_json(const MleResult& r) {
    return {{"exponent", r.exponent},
            {"pair_count", r.pair_count},
            {"segments", r.segments},
            {"transient_discarded", r.transient_discarded},
            {"evolved_time", r.evolved_time},
            {"config",
             {{"embedding", to_json(r.options.embedding)},
              {"evolve_steps", r.options.evolve_steps},
              {"replace_threshold", r.options.replace_threshold},
              {"min_separation", r.options.min_separation},
              {"max_angle", r.options.max_angle},
              {"exhaustive_below", r.options.exhaustive_below}}}};
}

nlohmann::json to_json(const CycleCount& c) {
    nlohmann::json j;
    if (c.multiplicity) {
        j["multiplicity"] = *c.multiplicity;
    } else {
        j["multiplicity"] = "aperiodic";
    }
    j["distinct_maxima"] = c.distinct_maxima;
    j["maxima_found"] = c.maxima_found;
    j["config"] = {{"cluster_tol", c.cluster_tol}, {"min_prominence", c.min_prominence}};
    return j;
}

}  // namespace sunflower
